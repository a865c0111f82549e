#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "verbscope/corpus.hpp"
#include "verbscope/ingest.hpp"
#include "verbscope/rng.hpp"
#include "verbscope/util.hpp"

namespace verbscope {

// Averaged-perceptron tagger predicting (upos, xpos) as one composite tag.
class TaggerModel {
 public:
  static constexpr int kVersion = 1;

  // Tags are kept in descending training frequency, so index 0 is the
  // global most-frequent tag and also the fallback on all-zero scores.
  std::vector<TagPair> tag_set;
  std::vector<std::uint64_t> tag_counts;
  std::map<std::string, std::vector<double>> weights;  // feature -> per-tag weight
  int version = kVersion;

  std::size_t predict(const std::vector<std::string>& features) const {
    std::vector<double> scores(tag_set.size(), 0.0);
    for (const auto& f : features) {
      auto it = weights.find(f);
      if (it == weights.end()) continue;
      for (std::size_t k = 0; k < scores.size(); ++k) scores[k] += it->second[k];
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k) {
      if (scores[k] > scores[best]) best = k;
    }
    return best;
  }

  bool operator==(const TaggerModel&) const = default;
};

namespace detail {

inline std::string composite_tag(const TagPair& t) { return t.upos + "|" + t.xpos; }

inline TagPair parse_composite_tag(const std::string& s) {
  auto bar = s.find('|');
  if (bar == std::string::npos) throw Error("malformed tag '" + s + "'");
  return TagPair{s.substr(0, bar), s.substr(bar + 1)};
}

// Prefix/suffix of up to n bytes, never splitting a UTF-8 sequence.
inline std::string utf8_prefix(const std::string& s, std::size_t n) {
  std::size_t end = 0, chars = 0;
  while (end < s.size() && chars < n) {
    ++end;
    while (end < s.size() && (static_cast<unsigned char>(s[end]) & 0xC0) == 0x80) ++end;
    ++chars;
  }
  return s.substr(0, end);
}

inline std::string utf8_suffix(const std::string& s, std::size_t n) {
  std::size_t begin = s.size(), chars = 0;
  while (begin > 0 && chars < n) {
    --begin;
    while (begin > 0 && (static_cast<unsigned char>(s[begin]) & 0xC0) == 0x80) --begin;
    ++chars;
  }
  return s.substr(begin);
}

inline std::vector<std::string> tagger_features(const std::vector<std::string>& forms,
                                                std::size_t i, const std::string& prev,
                                                const std::string& prev2) {
  const auto& w = forms[i];
  auto lw = ascii_lower(w);
  std::vector<std::string> f;
  f.reserve(16);
  f.emplace_back("bias");
  f.push_back("w=" + w);
  f.push_back("lw=" + lw);
  for (std::size_t n = 1; n <= 3; ++n) {
    f.push_back("s" + std::to_string(n) + "=" + utf8_suffix(lw, n));
    f.push_back("p" + std::to_string(n) + "=" + utf8_prefix(lw, n));
  }
  f.push_back("w-1=" + (i > 0 ? ascii_lower(forms[i - 1]) : std::string("<s>")));
  f.push_back("w+1=" + (i + 1 < forms.size() ? ascii_lower(forms[i + 1]) : std::string("</s>")));
  f.push_back("t-1=" + prev);
  f.push_back("t-2=" + prev2);
  f.push_back("t-2,t-1=" + prev2 + "," + prev);
  f.push_back("t-1,w=" + prev + "," + lw);
  return f;
}

}  // namespace detail

inline std::vector<TagPair> predict_tags(const TaggerModel& model,
                                         const std::vector<std::string>& forms) {
  std::vector<TagPair> out;
  out.reserve(forms.size());
  std::string prev = "<s>", prev2 = "<s2>";
  for (std::size_t i = 0; i < forms.size(); ++i) {
    auto k = model.predict(detail::tagger_features(forms, i, prev, prev2));
    out.push_back(model.tag_set[k]);
    prev2 = prev;
    prev = detail::composite_tag(model.tag_set[k]);
  }
  return out;
}

// Fills upos/xpos of every token, overwriting existing tags.
inline AnnotatedSentence tag(const TaggerModel& model, AnnotatedSentence sentence) {
  auto tags = predict_tags(model, sentence.forms());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    sentence.tokens[i].upos = tags[i].upos;
    sentence.tokens[i].xpos = tags[i].xpos;
  }
  return sentence;
}

inline Corpus tag_corpus(const TaggerModel& model, Corpus corpus) {
  for (auto& s : corpus.sentences) s = tag(model, std::move(s));
  return corpus;
}

// Token-level accuracy of the model against gold tags.
inline double tagging_accuracy(const TaggerModel& model, const Corpus& gold) {
  std::size_t correct = 0, total = 0;
  for (const auto& s : gold.sentences) {
    auto tags = predict_tags(model, s.forms());
    for (std::size_t i = 0; i < tags.size(); ++i) {
      correct += tags[i].upos == s.tokens[i].upos && tags[i].xpos == fine_tag(s.tokens[i]);
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

struct TaggerTrainOptions {
  int epochs = 5;
  std::uint64_t seed = 1;
  // Trailing fraction of sentences held out for the reported accuracy.
  double heldout_fraction = 0.0;
};

struct TaggerTrainResult {
  TaggerModel model;
  double train_accuracy = 0.0;
  std::optional<double> heldout_accuracy;
};

inline TaggerTrainResult train_tagger(const Corpus& annotated, const TaggerTrainOptions& opts) {
  if (opts.epochs < 0) throw Error("epochs must be >= 0");
  if (opts.heldout_fraction < 0.0 || opts.heldout_fraction >= 1.0) {
    throw Error("heldout fraction must lie in [0,1)");
  }
  std::size_t n_train = annotated.sentences.size();
  if (opts.heldout_fraction > 0.0) {
    auto held = static_cast<std::size_t>(std::floor(opts.heldout_fraction * static_cast<double>(n_train)));
    n_train -= held;
  }
  Corpus train, heldout;
  train.sentences.assign(annotated.sentences.begin(),
                         annotated.sentences.begin() + static_cast<std::ptrdiff_t>(n_train));
  heldout.sentences.assign(annotated.sentences.begin() + static_cast<std::ptrdiff_t>(n_train),
                           annotated.sentences.end());

  std::map<TagPair, std::uint64_t> freq;
  for (const auto& s : train.sentences) {
    for (const auto& t : s.tokens) {
      if (!is_tagged(t)) throw Error("training corpus without tags (sentence '" + s.sentence_id + "')");
      ++freq[TagPair{t.upos, fine_tag(t)}];
    }
  }
  if (freq.empty()) throw Error("training corpus without tags");

  TaggerModel model;
  std::vector<std::pair<TagPair, std::uint64_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::map<TagPair, std::size_t> tag_index;
  for (const auto& [t, c] : ranked) {
    tag_index[t] = model.tag_set.size();
    model.tag_set.push_back(t);
    model.tag_counts.push_back(c);
  }
  const std::size_t n_tags = model.tag_set.size();

  struct Slot {
    std::vector<double> w, total;
    std::vector<std::uint64_t> stamp;
  };
  std::unordered_map<std::string, Slot> slots;
  std::uint64_t instances = 0;

  auto update = [&](const std::vector<std::string>& feats, std::size_t truth, std::size_t guess) {
    for (const auto& f : feats) {
      auto [it, inserted] = slots.try_emplace(f);
      auto& slot = it->second;
      if (inserted) {
        slot.w.assign(n_tags, 0.0);
        slot.total.assign(n_tags, 0.0);
        slot.stamp.assign(n_tags, 0);
      }
      for (auto [k, delta] : {std::pair{truth, 1.0}, std::pair{guess, -1.0}}) {
        slot.total[k] += static_cast<double>(instances - slot.stamp[k]) * slot.w[k];
        slot.stamp[k] = instances;
        slot.w[k] += delta;
      }
    }
  };

  auto score_current = [&](const std::vector<std::string>& feats) {
    std::vector<double> scores(n_tags, 0.0);
    for (const auto& f : feats) {
      auto it = slots.find(f);
      if (it == slots.end()) continue;
      for (std::size_t k = 0; k < n_tags; ++k) scores[k] += it->second.w[k];
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < n_tags; ++k) {
      if (scores[k] > scores[best]) best = k;
    }
    return best;
  };

  std::vector<std::size_t> order(train.sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    Rng rng(mix64(opts.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    for (auto si : order) {
      const auto& s = train.sentences[si];
      auto forms = s.forms();
      std::string prev = "<s>", prev2 = "<s2>";
      for (std::size_t i = 0; i < forms.size(); ++i) {
        auto feats = detail::tagger_features(forms, i, prev, prev2);
        auto truth = tag_index.at(TagPair{s.tokens[i].upos, fine_tag(s.tokens[i])});
        auto guess = score_current(feats);
        ++instances;
        if (guess != truth) update(feats, truth, guess);
        prev2 = prev;
        prev = detail::composite_tag(model.tag_set[guess]);
      }
    }
  }

  for (auto& [f, slot] : slots) {
    std::vector<double> avg(n_tags, 0.0);
    bool any = false;
    for (std::size_t k = 0; k < n_tags; ++k) {
      double total = slot.total[k] + static_cast<double>(instances - slot.stamp[k]) * slot.w[k];
      avg[k] = instances ? total / static_cast<double>(instances) : 0.0;
      any = any || avg[k] != 0.0;
    }
    if (any) model.weights.emplace(f, std::move(avg));
  }

  TaggerTrainResult result{std::move(model), 0.0, std::nullopt};
  result.train_accuracy = tagging_accuracy(result.model, train);
  if (!heldout.sentences.empty()) result.heldout_accuracy = tagging_accuracy(result.model, heldout);
  return result;
}

// Text layout, one record per line, tab-separated, keys sorted:
//   verbscope-tagger <version>
//   tag <upos|xpos> <count>        (training-frequency order)
//   w <feature> <upos|xpos> <weight>
inline std::string format_tagger(const TaggerModel& model) {
  std::string out = "verbscope-tagger\t" + std::to_string(model.version) + '\n';
  for (std::size_t k = 0; k < model.tag_set.size(); ++k) {
    out += "tag\t" + detail::composite_tag(model.tag_set[k]) + '\t' +
           std::to_string(model.tag_counts[k]) + '\n';
  }
  std::vector<std::string> tag_names;
  for (const auto& t : model.tag_set) tag_names.push_back(detail::composite_tag(t));
  std::vector<std::size_t> by_name(tag_names.size());
  std::iota(by_name.begin(), by_name.end(), std::size_t{0});
  std::sort(by_name.begin(), by_name.end(),
            [&](auto a, auto b) { return tag_names[a] < tag_names[b]; });
  for (const auto& [feature, w] : model.weights) {
    for (auto k : by_name) {
      if (w[k] == 0.0) continue;
      out += "w\t" + feature + '\t' + tag_names[k] + '\t' + format_double(w[k]) + '\n';
    }
  }
  return out;
}

inline TaggerModel parse_tagger(std::string_view text, const std::string& origin = "<model>") {
  TaggerModel model;
  std::map<std::string, std::size_t> index;
  std::size_t lineno = 0, pos = 0;
  bool header = false;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = std::string(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++lineno;
    if (line.empty()) continue;
    auto f = split_on(line, '\t');
    auto bad = [&] { return Error(origin + ":" + std::to_string(lineno) + ": malformed tagger record"); };
    if (!header) {
      if (f.size() != 2 || f[0] != "verbscope-tagger") throw bad();
      model.version = parse_int<int>(f[1]);
      if (model.version != TaggerModel::kVersion) throw Error(origin + ": unsupported tagger version");
      header = true;
    } else if (f[0] == "tag") {
      if (f.size() != 3) throw bad();
      index[f[1]] = model.tag_set.size();
      model.tag_set.push_back(detail::parse_composite_tag(f[1]));
      model.tag_counts.push_back(parse_int<std::uint64_t>(f[2]));
    } else if (f[0] == "w") {
      if (f.size() != 4) throw bad();
      auto it = index.find(f[2]);
      if (it == index.end()) throw bad();
      double w = parse_double(f[3]);
      if (!std::isfinite(w)) throw bad();
      auto& vec = model.weights[f[1]];
      vec.resize(model.tag_set.size(), 0.0);
      vec[it->second] = w;
    } else {
      throw bad();
    }
  }
  if (!header || model.tag_set.empty()) throw Error(origin + ": tagger model has no tags");
  return model;
}

inline void write_tagger(const TaggerModel& model, const std::string& path) {
  write_file(path, format_tagger(model));
}

inline TaggerModel read_tagger(const std::string& path) { return parse_tagger(read_file(path), path); }

// One sentence per line, whitespace-tokenised. Tags come from `tagger`
// when given, otherwise every token is UNK/UNK with no head.
inline Corpus read_plaintext(const std::string& path, const TaggerModel* tagger = nullptr) {
  auto corpus = corpus_from_lines(read_lines(path), path);
  corpus.domain = std::filesystem::path(path).stem().string();
  if (tagger) corpus = tag_corpus(*tagger, std::move(corpus));
  return corpus;
}

// ---------------------------------------------------------------------------
// Root verbs

struct RootVerb {
  std::size_t index = 0;
  bool heuristic = false;  // true when found without dependency annotation
};

// With dependencies: the deprel=root token if it is a VERB. Without: the
// leftmost VERB (no earlier VERB can share its clause window).
inline std::optional<RootVerb> find_root_verb(const AnnotatedSentence& s) {
  if (s.has_dependencies()) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (s.tokens[i].deprel == "root") {
        if (s.tokens[i].upos == "VERB") return RootVerb{i, false};
        return std::nullopt;
      }
    }
    return std::nullopt;
  }
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (s.tokens[i].upos == "VERB") return RootVerb{i, true};
  }
  return std::nullopt;
}

inline std::optional<std::size_t> heuristic_root(const AnnotatedSentence& s) {
  auto r = find_root_verb(s);
  if (!r) return std::nullopt;
  return r->index;
}

}  // namespace verbscope
