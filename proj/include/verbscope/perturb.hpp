#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "verbscope/corpus.hpp"
#include "verbscope/parallel.hpp"
#include "verbscope/rng.hpp"
#include "verbscope/tagger.hpp"
#include "verbscope/util.hpp"

namespace verbscope {

enum class Condition { original, replace_word, shuffle_order };

inline std::string to_string(Condition c) {
  switch (c) {
    case Condition::original: return "ORIGINAL";
    case Condition::replace_word: return "REPLACE.WORD";
    case Condition::shuffle_order: return "SHUFFLE.ORDER";
  }
  return "ORIGINAL";
}

// Accepts both the report spelling (REPLACE.WORD) and the CLI one (replace-word).
inline Condition parse_condition(std::string_view s) {
  auto t = ascii_lower(trim(s));
  std::replace(t.begin(), t.end(), '.', '-');
  std::replace(t.begin(), t.end(), '_', '-');
  if (t == "original") return Condition::original;
  if (t == "replace-word") return Condition::replace_word;
  if (t == "shuffle-order") return Condition::shuffle_order;
  throw Error("unknown condition '" + std::string(s) + "'");
}

struct PerturbOptions {
  bool include_propn = false;    // treat PROPN as a replaceable noun
  bool pin_final_punct = false;  // keep a sentence-final PUNCT in place when shuffling
  unsigned threads = 1;
};

struct PerturbReport {
  Condition condition = Condition::original;
  std::uint64_t tokens_total = 0;
  std::uint64_t tokens_replaced = 0;
  double replacement_rate = 0.0;
  std::uint64_t seed = 0;
};

inline bool is_replacement_target(const Token& t, std::size_t index,
                                  std::optional<std::size_t> root, const PerturbOptions& opts) {
  const auto& u = t.upos;
  if (u == "NOUN" || u == "ADJ" || u == "ADV") return true;
  if (opts.include_propn && u == "PROPN") return true;
  return u == "VERB" && (!root || *root != index);
}

struct ReplaceResult {
  AnnotatedSentence sentence;
  std::size_t replaced = 0;
};

// Nouns, adjectives, adverbs and non-root verbs are swapped for a
// frequency-weighted draw from their own (upos, xpos, bin) stratum.
// Tokens alone in their stratum are kept.
inline ReplaceResult replace_word(const AnnotatedSentence& sentence, const FrequencyTable& table,
                                  Rng& rng, const PerturbOptions& opts = {}) {
  for (const auto& t : sentence.tokens) {
    if (!is_tagged(t)) throw Error("replace_word requires tags (sentence '" + sentence.sentence_id + "')");
  }
  ReplaceResult out{sentence, 0};
  auto root = heuristic_root(sentence);
  for (std::size_t i = 0; i < out.sentence.tokens.size(); ++i) {
    auto& tok = out.sentence.tokens[i];
    if (!is_replacement_target(tok, i, root, opts)) continue;
    auto sub = table.sample_same_bin(tok.upos, fine_tag(tok), tok.form, rng);
    if (!sub) continue;
    tok.form = std::move(*sub);
    ++out.replaced;
  }
  return out;
}

// Uniform permutation by the Fisher-Yates walk of Rng::shuffle; heads are
// remapped so every dependency still points at the same token.
inline AnnotatedSentence shuffle_order(const AnnotatedSentence& sentence, Rng& rng,
                                       const PerturbOptions& opts = {}) {
  const auto n = sentence.tokens.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (opts.pin_final_punct && n > 0 && sentence.tokens.back().upos == "PUNCT") {
    std::vector<std::size_t> head(perm.begin(), perm.end() - 1);
    rng.shuffle(head);
    std::copy(head.begin(), head.end(), perm.begin());
  } else {
    rng.shuffle(perm);
  }
  std::vector<std::size_t> new_pos(n);
  for (std::size_t k = 0; k < n; ++k) new_pos[perm[k]] = k;
  AnnotatedSentence out;
  out.sentence_id = sentence.sentence_id;
  out.source = sentence.source;
  out.tokens.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Token t = sentence.tokens[perm[k]];
    if (t.head) t.head = new_pos[*t.head];
    out.tokens.push_back(std::move(t));
  }
  return out;
}

struct PerturbResult {
  Corpus corpus;
  PerturbReport report;
};

// Sentence i draws from the stream mix64(seed, i), so the output does not
// depend on the number of threads.
inline PerturbResult perturb_corpus(const Corpus& corpus, Condition condition,
                                    const FrequencyTable* table, std::uint64_t seed,
                                    const PerturbOptions& opts = {}) {
  if (condition == Condition::replace_word && !table) {
    throw Error("REPLACE.WORD requires a frequency table");
  }
  PerturbResult out;
  out.corpus.domain = corpus.domain;
  out.corpus.split = corpus.split;
  out.report.condition = condition;
  out.report.seed = seed;
  out.report.tokens_total = corpus.token_count();
  if (condition == Condition::original) {
    out.corpus = corpus;
    return out;
  }
  const auto n = corpus.sentences.size();
  out.corpus.sentences.resize(n);
  std::vector<std::size_t> replaced(n, 0);
  parallel_for(n, opts.threads, [&](std::size_t i) {
    auto rng = stream_for(seed, i);
    if (condition == Condition::replace_word) {
      auto r = replace_word(corpus.sentences[i], *table, rng, opts);
      out.corpus.sentences[i] = std::move(r.sentence);
      replaced[i] = r.replaced;
    } else {
      out.corpus.sentences[i] = shuffle_order(corpus.sentences[i], rng, opts);
    }
  });
  out.report.tokens_replaced = std::accumulate(replaced.begin(), replaced.end(), std::uint64_t{0});
  out.report.replacement_rate =
      out.report.tokens_total
          ? static_cast<double>(out.report.tokens_replaced) / static_cast<double>(out.report.tokens_total)
          : 0.0;
  return out;
}

inline std::string format_report(const PerturbReport& r) {
  nlohmann::ordered_json j;
  j["condition"] = to_string(r.condition);
  j["seed"] = r.seed;
  j["tokens_total"] = r.tokens_total;
  j["tokens_replaced"] = r.tokens_replaced;
  j["replacement_rate"] = r.replacement_rate;
  return j.dump(2) + "\n";
}

inline PerturbReport parse_report(const std::string& text, const std::string& origin = "report") {
  try {
    auto j = nlohmann::json::parse(text);
    PerturbReport r;
    r.condition = parse_condition(j.at("condition").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.tokens_total = j.at("tokens_total").get<std::uint64_t>();
    r.tokens_replaced = j.at("tokens_replaced").get<std::uint64_t>();
    r.replacement_rate = j.at("replacement_rate").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(origin + ": " + e.what());
  }
}

inline void write_report(const std::string& path, const PerturbReport& r) { write_file(path, format_report(r)); }
inline PerturbReport read_report(const std::string& path) { return parse_report(read_file(path), path); }

}  // namespace verbscope
