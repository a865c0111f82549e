#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "verbscope/corpus.hpp"
#include "verbscope/pairgen.hpp"
#include "verbscope/util.hpp"

namespace verbscope {

struct SentenceScore {
  std::string sentence_id;
  double logprob = 0.0;  // natural log, includes the end-of-sentence event
  std::size_t num_tokens = 0;
  std::string scorer_id;
  std::optional<std::string> checkpoint;

  bool operator==(const SentenceScore&) const = default;
};

struct NGramOptions {
  int order = 3;
  // Absolute discount per order (index 0 is unigrams); empty means 0.75 everywhere.
  std::vector<double> discounts;
  // Forms seen fewer than this many times are mapped to <unk>.
  std::uint64_t min_count_unk = 1;
};

// Interpolated Kneser-Ney n-gram model over word tokens.
//
// Highest order uses raw counts, lower orders use continuation counts
// N1+(. w), except for n-grams starting with <s>, which keep raw counts
// because nothing can precede the padding. The unigram level interpolates
// with the uniform distribution over every predictable symbol (the
// vocabulary plus </s> and <unk>), so no probability is ever zero.
class NGramLM {
 public:
  using Key = std::u32string;
  static constexpr std::uint32_t kBos = 0, kEos = 1, kUnk = 2;
  static constexpr const char* kBosForm = "<s>";
  static constexpr const char* kEosForm = "</s>";
  static constexpr const char* kUnkForm = "<unk>";
  static constexpr int kFormatVersion = 1;

  struct ContextStat {
    std::uint64_t total = 0;  // sum of (adjusted) counts following the context
    std::uint64_t types = 0;  // distinct followers
  };

  NGramLM() = default;

  int order() const { return order_; }
  const std::vector<double>& discounts() const { return discounts_; }
  std::uint64_t min_count_unk() const { return min_count_unk_; }
  std::size_t vocab_size() const { return forms_.size(); }
  // Number of symbols that can be predicted (everything except <s>).
  std::size_t predictable_size() const { return forms_.size() - 1; }
  const std::string& form(std::uint32_t id) const { return forms_.at(id); }

  std::uint32_t id(const std::string& form) const {
    auto it = ids_.find(form);
    return it == ids_.end() ? kUnk : it->second;
  }

  // p(w | context); `context` holds the preceding ids (any length, only the
  // last order-1 are used; shorter contexts are treated as unpadded).
  double prob(std::uint32_t w, const std::vector<std::uint32_t>& context) const {
    const auto k = static_cast<std::size_t>(order_);
    const auto use = std::min(context.size(), k - 1);
    Key ctx(context.end() - static_cast<std::ptrdiff_t>(use), context.end());
    return prob_at(static_cast<int>(use) + 1, w, ctx);
  }

  SentenceScore score(const std::vector<std::string>& tokens, std::string sentence_id = {}) const {
    std::vector<std::uint32_t> ctx(static_cast<std::size_t>(order_ - 1), kBos);
    double lp = 0.0;
    auto step = [&](std::uint32_t w) {
      lp += std::log(prob(w, ctx));
      if (!ctx.empty()) {
        ctx.erase(ctx.begin());
        ctx.push_back(w);
      }
    };
    for (const auto& t : tokens) step(id(t));
    step(kEos);
    return SentenceScore{std::move(sentence_id), lp, tokens.size() + 1, "kn" + std::to_string(order_), std::nullopt};
  }

  // Contexts of length k-1 with at least one observed continuation at order k.
  std::vector<Key> observed_contexts(int k) const {
    std::vector<Key> out;
    for (const auto& [c, _] : contexts_.at(static_cast<std::size_t>(k))) out.push_back(c);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Raw counts of full-order windows; the only state that is serialised.
  const std::unordered_map<Key, std::uint64_t>& windows() const { return windows_; }

  static NGramLM from_windows(int order, std::vector<double> discounts, std::uint64_t min_count_unk,
                              std::vector<std::string> vocabulary,
                              std::unordered_map<Key, std::uint64_t> windows) {
    NGramLM lm;
    lm.configure(order, std::move(discounts), min_count_unk);
    lm.forms_ = {kBosForm, kEosForm, kUnkForm};
    std::sort(vocabulary.begin(), vocabulary.end());
    vocabulary.erase(std::unique(vocabulary.begin(), vocabulary.end()), vocabulary.end());
    for (auto& f : vocabulary) {
      if (f == kBosForm || f == kEosForm || f == kUnkForm) continue;
      lm.forms_.push_back(std::move(f));
    }
    for (std::uint32_t i = 0; i < lm.forms_.size(); ++i) lm.ids_[lm.forms_[i]] = i;
    lm.windows_ = std::move(windows);
    lm.rebuild();
    return lm;
  }

  friend NGramLM train_ngram(const Corpus& corpus, const NGramOptions& opts);

 private:
  void configure(int order, std::vector<double> discounts, std::uint64_t min_count_unk) {
    if (order < 1) throw Error("n-gram order must be >= 1");
    if (discounts.empty()) discounts.assign(static_cast<std::size_t>(order), 0.75);
    if (discounts.size() != static_cast<std::size_t>(order)) {
      throw Error("need one discount per order");
    }
    for (double d : discounts) {
      if (!(d > 0.0 && d <= 1.0)) throw Error("discounts must lie in (0,1]");
    }
    order_ = order;
    discounts_ = std::move(discounts);
    min_count_unk_ = min_count_unk;
  }

  double prob_at(int k, std::uint32_t w, const Key& ctx) const {
    if (k == 0) return 1.0 / static_cast<double>(predictable_size());
    Key shorter = ctx.empty() ? Key{} : ctx.substr(1);
    const double lower = prob_at(k - 1, w, shorter);
    const auto& cstats = contexts_[static_cast<std::size_t>(k)];
    auto it = cstats.find(ctx);
    if (it == cstats.end()) return lower;
    const double d = discounts_[static_cast<std::size_t>(k - 1)];
    Key full = ctx;
    full.push_back(w);
    const auto& grams = ngrams_[static_cast<std::size_t>(k)];
    auto g = grams.find(full);
    const double a = g == grams.end() ? 0.0 : static_cast<double>(g->second);
    return (std::max(a - d, 0.0) + d * static_cast<double>(it->second.types) * lower) /
           static_cast<double>(it->second.total);
  }

  void rebuild() {
    const auto n = static_cast<std::size_t>(order_);
    ngrams_.assign(n + 1, {});
    contexts_.assign(n + 1, {});
    ngrams_[n] = windows_;
    for (std::size_t k = n - 1; k >= 1; --k) {
      std::unordered_map<Key, std::uint64_t> raw;
      std::unordered_set<Key> longer;  // distinct (k+1)-grams ending at real positions
      for (const auto& [win, c] : windows_) {
        raw[win.substr(n - k)] += c;
        longer.insert(win.substr(n - k - 1));
      }
      std::unordered_map<Key, std::uint64_t> continuation;
      for (const auto& g : longer) ++continuation[g.substr(1)];
      auto& adj = ngrams_[k];
      for (const auto& [g, c] : raw) adj[g] = g[0] == kBos ? c : continuation[g];
    }
    for (std::size_t k = 1; k <= n; ++k) {
      for (const auto& [g, c] : ngrams_[k]) {
        auto& st = contexts_[k][g.substr(0, k - 1)];
        st.total += c;
        st.types += 1;
      }
    }
  }

  int order_ = 3;
  std::vector<double> discounts_;
  std::uint64_t min_count_unk_ = 1;
  std::vector<std::string> forms_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::unordered_map<Key, std::uint64_t> windows_;
  std::vector<std::unordered_map<Key, std::uint64_t>> ngrams_;      // by order
  std::vector<std::unordered_map<Key, ContextStat>> contexts_;      // by order
};

inline NGramLM train_ngram(const Corpus& corpus, const NGramOptions& opts = {}) {
  if (opts.order < 1) throw Error("n-gram order must be >= 1");
  if (corpus.token_count() == 0) throw Error("cannot train on an empty corpus");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& s : corpus.sentences) {
    for (const auto& t : s.tokens) ++counts[t.form];
  }
  std::vector<std::string> vocab;
  for (const auto& [f, c] : counts) {
    if (c >= opts.min_count_unk) vocab.push_back(f);
  }
  auto lm = NGramLM::from_windows(opts.order, opts.discounts, opts.min_count_unk, std::move(vocab), {});
  const auto n = static_cast<std::size_t>(opts.order);
  std::unordered_map<NGramLM::Key, std::uint64_t> windows;
  NGramLM::Key seq;
  for (const auto& s : corpus.sentences) {
    seq.assign(n - 1, NGramLM::kBos);
    for (const auto& t : s.tokens) seq.push_back(lm.id(t.form));
    seq.push_back(NGramLM::kEos);
    for (std::size_t end = n; end <= seq.size(); ++end) ++windows[seq.substr(end - n, n)];
  }
  lm.windows_ = std::move(windows);
  lm.rebuild();
  return lm;
}

// Sorted text layout:
//   verbscope-kn <version>
//   order <n>
//   discount <k> <D_k>          (k = 1..n)
//   min_count_unk <m>
//   vocab <form>                (sorted, reserved symbols omitted)
//   ngram <count> <w1 ... wn>   (sorted by the n-gram text)
inline std::string format_ngram(const NGramLM& lm) {
  std::string out = "verbscope-kn\t" + std::to_string(NGramLM::kFormatVersion) + '\n';
  out += "order\t" + std::to_string(lm.order()) + '\n';
  for (std::size_t k = 0; k < lm.discounts().size(); ++k) {
    out += "discount\t" + std::to_string(k + 1) + '\t' + format_double(lm.discounts()[k]) + '\n';
  }
  out += "min_count_unk\t" + std::to_string(lm.min_count_unk()) + '\n';
  for (std::uint32_t i = 3; i < lm.vocab_size(); ++i) {
    const auto& f = lm.form(i);
    if (f.find_first_of(" \t\n") != std::string::npos) throw Error("form with whitespace: '" + f + "'");
    out += "vocab\t" + f + '\n';
  }
  std::vector<std::string> lines;
  lines.reserve(lm.windows().size());
  for (const auto& [win, c] : lm.windows()) {
    std::string text;
    for (std::size_t i = 0; i < win.size(); ++i) {
      if (i) text += ' ';
      text += lm.form(win[i]);
    }
    lines.push_back(text + '\t' + std::to_string(c));
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) {
    auto tab = l.rfind('\t');
    out += "ngram\t" + l.substr(tab + 1) + '\t' + l.substr(0, tab) + '\n';
  }
  return out;
}

inline NGramLM parse_ngram(std::string_view text, const std::string& origin = "<lm>") {
  int order = 0;
  std::vector<double> discounts;
  std::uint64_t min_count = 1;
  std::vector<std::string> vocab;
  std::vector<std::pair<std::vector<std::string>, std::uint64_t>> grams;
  std::size_t pos = 0, lineno = 0;
  bool header = false;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = std::string(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++lineno;
    if (line.empty()) continue;
    auto f = split_on(line, '\t');
    auto bad = [&] { return Error(origin + ":" + std::to_string(lineno) + ": malformed model record"); };
    if (!header) {
      if (f.size() != 2 || f[0] != "verbscope-kn") throw bad();
      if (parse_int<int>(f[1]) != NGramLM::kFormatVersion) throw Error(origin + ": unsupported model version");
      header = true;
    } else if (f[0] == "order" && f.size() == 2) {
      order = parse_int<int>(f[1]);
    } else if (f[0] == "discount" && f.size() == 3) {
      discounts.push_back(parse_double(f[2]));
    } else if (f[0] == "min_count_unk" && f.size() == 2) {
      min_count = parse_int<std::uint64_t>(f[1]);
    } else if (f[0] == "vocab" && f.size() == 2) {
      vocab.push_back(f[1]);
    } else if (f[0] == "ngram" && f.size() == 3) {
      grams.emplace_back(split_on(f[2], ' '), parse_int<std::uint64_t>(f[1]));
    } else {
      throw bad();
    }
  }
  if (!header) throw Error(origin + ": not a verbscope n-gram model");
  auto lm = NGramLM::from_windows(order, discounts, min_count, vocab, {});
  std::unordered_map<NGramLM::Key, std::uint64_t> windows;
  for (const auto& [words, c] : grams) {
    if (words.size() != static_cast<std::size_t>(order)) throw Error(origin + ": n-gram of wrong order");
    NGramLM::Key key;
    for (const auto& w : words) {
      auto id = lm.id(w);
      if (id == NGramLM::kUnk && w != NGramLM::kUnkForm) throw Error(origin + ": n-gram word not in vocabulary: " + w);
      key.push_back(id);
    }
    windows[key] += c;
  }
  return NGramLM::from_windows(order, discounts, min_count, std::move(vocab), std::move(windows));
}

inline void write_ngram(const NGramLM& lm, const std::string& path) { write_file(path, format_ngram(lm)); }
inline NGramLM read_ngram(const std::string& path) { return parse_ngram(read_file(path), path); }

inline double perplexity(const NGramLM& lm, const Corpus& corpus) {
  double lp = 0.0;
  std::size_t n = 0;
  for (const auto& s : corpus.sentences) {
    auto sc = lm.score(s.forms());
    lp += sc.logprob;
    n += sc.num_tokens;
  }
  return std::exp(-lp / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Scorer interface

struct ScoreRequest {
  std::string id;
  std::vector<std::string> tokens;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string id() const = 0;
  // One score per request, in request order.
  virtual std::vector<SentenceScore> score(const std::vector<ScoreRequest>& requests) = 0;
};

class NGramScorer final : public Scorer {
 public:
  explicit NGramScorer(const NGramLM& lm, std::optional<std::string> checkpoint = std::nullopt)
      : lm_(lm), checkpoint_(std::move(checkpoint)) {}

  std::string id() const override { return "kn" + std::to_string(lm_.order()); }

  std::vector<SentenceScore> score(const std::vector<ScoreRequest>& requests) override {
    std::vector<SentenceScore> out;
    out.reserve(requests.size());
    for (const auto& r : requests) {
      auto s = lm_.score(r.tokens, r.id);
      s.checkpoint = checkpoint_;
      out.push_back(std::move(s));
    }
    return out;
  }

 private:
  const NGramLM& lm_;
  std::optional<std::string> checkpoint_;
};

struct PairScore {
  std::string pair_id;
  double logprob_good = 0.0;
  double logprob_bad = 0.0;

  bool operator==(const PairScore&) const = default;
};

inline std::string good_id(const std::string& pair_id) { return pair_id + ":good"; }
inline std::string bad_id(const std::string& pair_id) { return pair_id + ":bad"; }

inline std::vector<ScoreRequest> pair_requests(const std::vector<MinimalPair>& pairs) {
  std::vector<ScoreRequest> reqs;
  reqs.reserve(pairs.size() * 2);
  for (const auto& p : pairs) {
    reqs.push_back({good_id(p.pair_id), p.good});
    reqs.push_back({bad_id(p.pair_id), p.bad});
  }
  return reqs;
}

// Reassembles pair scores (in pair order) from sentence scores keyed by id.
inline std::vector<PairScore> assemble_pair_scores(const std::vector<MinimalPair>& pairs,
                                                   const std::vector<SentenceScore>& scores) {
  std::unordered_map<std::string, double> by_id;
  for (const auto& s : scores) by_id[s.sentence_id] = s.logprob;
  std::vector<PairScore> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto g = by_id.find(good_id(p.pair_id));
    auto b = by_id.find(bad_id(p.pair_id));
    if (g == by_id.end() || b == by_id.end()) throw Error("no score for pair '" + p.pair_id + "'");
    out.push_back({p.pair_id, g->second, b->second});
  }
  return out;
}

inline std::vector<PairScore> score_pairs(Scorer& scorer, const std::vector<MinimalPair>& pairs) {
  return assemble_pair_scores(pairs, scorer.score(pair_requests(pairs)));
}

// Score files: sentence_id <TAB> logprob <TAB> num_tokens
inline std::string format_scores(const std::vector<SentenceScore>& scores) {
  std::string out;
  for (const auto& s : scores) {
    out += s.sentence_id + '\t' + format_double(s.logprob) + '\t' + std::to_string(s.num_tokens) + '\n';
  }
  return out;
}

inline void write_scores(const std::vector<SentenceScore>& scores, const std::string& path) {
  write_file(path, format_scores(scores));
}

inline std::vector<SentenceScore> read_scores(const std::string& path) {
  std::vector<SentenceScore> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_on(line, '\t');
    if (f.size() != 3) throw Error(path + ":" + std::to_string(lineno) + ": expected 3 columns");
    out.push_back({f[0], parse_double(f[1]), parse_int<std::size_t>(f[2]), {}, std::nullopt});
  }
  return out;
}

}  // namespace verbscope
