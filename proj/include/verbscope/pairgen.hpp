#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "verbscope/corpus.hpp"
#include "verbscope/rng.hpp"
#include "verbscope/tagger.hpp"
#include "verbscope/util.hpp"

namespace verbscope {

enum class Paradigm { semantic_verb, agr_simple, agr_pp, agr_vp_coord, agr_subj_rel, agr_obj_rel };

inline constexpr std::array<Paradigm, 5> kAgreementParadigms{
    Paradigm::agr_simple, Paradigm::agr_pp, Paradigm::agr_vp_coord, Paradigm::agr_subj_rel,
    Paradigm::agr_obj_rel};

inline std::string to_string(Paradigm p) {
  switch (p) {
    case Paradigm::semantic_verb: return "semantic-verb";
    case Paradigm::agr_simple: return "agr-simple";
    case Paradigm::agr_pp: return "agr-pp";
    case Paradigm::agr_vp_coord: return "agr-vp-coord";
    case Paradigm::agr_subj_rel: return "agr-subj-rel";
    case Paradigm::agr_obj_rel: return "agr-obj-rel";
  }
  return "semantic-verb";
}

inline Paradigm parse_paradigm(std::string_view s) {
  static const std::array<Paradigm, 6> all{Paradigm::semantic_verb, Paradigm::agr_simple,
                                           Paradigm::agr_pp,         Paradigm::agr_vp_coord,
                                           Paradigm::agr_subj_rel,   Paradigm::agr_obj_rel};
  auto t = trim(s);
  for (auto p : all) {
    if (to_string(p) == t) return p;
  }
  throw Error("unknown paradigm '" + t + "'");
}

inline bool is_agreement(Paradigm p) { return p != Paradigm::semantic_verb; }

struct MinimalPair {
  std::string pair_id;
  Paradigm paradigm = Paradigm::semantic_verb;
  std::vector<std::string> good;
  std::vector<std::string> bad;
  std::size_t diff_index = 0;
  std::optional<std::string> source_sentence_id;
  std::map<std::string, std::string> meta;

  bool operator==(const MinimalPair&) const = default;
};

inline void validate(const MinimalPair& p) {
  if (p.good.size() != p.bad.size()) {
    throw Error("pair '" + p.pair_id + "': members differ in length");
  }
  std::size_t diffs = 0;
  for (std::size_t i = 0; i < p.good.size(); ++i) {
    if (p.good[i] != p.bad[i]) {
      ++diffs;
      if (i != p.diff_index) {
        throw Error("pair '" + p.pair_id + "': members differ at " + std::to_string(i) +
                    ", not at diff_index " + std::to_string(p.diff_index));
      }
    }
  }
  if (diffs != 1) throw Error("pair '" + p.pair_id + "': members must differ at exactly one position");
}

// ---------------------------------------------------------------------------
// Semantic pairs

struct SemanticPairOptions {
  std::size_t max_alts = 5;
  std::size_t len_min = 10;
  std::size_t len_max = 30;
  std::uint64_t seed = 0;
};

struct SemanticPairStats {
  std::size_t sentences = 0;
  std::size_t skipped_length = 0;
  std::size_t skipped_no_root = 0;
  std::size_t skipped_unseen_verb = 0;
  std::size_t skipped_empty_bin = 0;
  std::size_t used = 0;
  std::size_t heuristic_roots = 0;
  std::size_t distinct_verb_lemmas = 0;
};

struct SemanticPairSet {
  std::vector<MinimalPair> pairs;
  SemanticPairStats stats;
};

namespace detail {

// Frequency-weighted draws without replacement.
inline std::vector<std::string> weighted_sample_without_replacement(
    std::vector<std::pair<std::string, std::uint64_t>> pool, std::size_t k, Rng& rng) {
  std::vector<std::string> out;
  while (out.size() < k && !pool.empty()) {
    std::uint64_t total = 0;
    for (const auto& [_, c] : pool) total += c;
    auto u = rng.below(total);
    std::size_t idx = 0;
    for (; idx + 1 < pool.size(); ++idx) {
      if (u < pool[idx].second) break;
      u -= pool[idx].second;
    }
    out.push_back(pool[idx].first);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  return out;
}

}  // namespace detail

// For every test sentence of admissible length with an identifiable root
// verb, emits up to max_alts pairs whose bad member carries a distinct verb
// from the root's (upos, xpos, bin) stratum of the training table.
inline SemanticPairSet gen_semantic_pairs(const Corpus& test, const FrequencyTable& train_table,
                                          const SemanticPairOptions& opts = {}) {
  SemanticPairSet out;
  std::set<std::string> lemmas;
  for (std::size_t si = 0; si < test.sentences.size(); ++si) {
    const auto& s = test.sentences[si];
    ++out.stats.sentences;
    if (s.size() < opts.len_min || s.size() > opts.len_max) {
      ++out.stats.skipped_length;
      continue;
    }
    auto root = find_root_verb(s);
    if (!root) {
      ++out.stats.skipped_no_root;
      continue;
    }
    const auto& verb = s.tokens[root->index];
    const auto& xpos = fine_tag(verb);
    auto bin = train_table.bin_of(verb.upos, xpos, verb.form);
    if (!bin) {
      ++out.stats.skipped_unseen_verb;
      continue;
    }
    auto candidates = train_table.bin_candidates(verb.upos, xpos, *bin, verb.form);
    if (candidates.empty()) {
      ++out.stats.skipped_empty_bin;
      continue;
    }
    auto rng = stream_for(opts.seed, si);
    auto subs = detail::weighted_sample_without_replacement(std::move(candidates), opts.max_alts, rng);
    ++out.stats.used;
    out.stats.heuristic_roots += root->heuristic;
    auto lemma = verb.lemma.empty() ? ascii_lower(verb.form) : verb.lemma;
    lemmas.insert(lemma);
    auto good = s.forms();
    for (std::size_t k = 0; k < subs.size(); ++k) {
      MinimalPair p;
      p.pair_id = s.sentence_id + "." + std::to_string(k + 1);
      p.paradigm = Paradigm::semantic_verb;
      p.good = good;
      p.bad = good;
      p.bad[root->index] = subs[k];
      p.diff_index = root->index;
      p.source_sentence_id = s.sentence_id;
      p.meta = {{"orig_verb", verb.form},
                {"sub_verb", subs[k]},
                {"lemma", lemma},
                {"upos", verb.upos},
                {"xpos", xpos},
                {"bin", std::to_string(*bin)},
                {"root_source", root->heuristic ? "heuristic" : "dependency"}};
      out.pairs.push_back(std::move(p));
    }
  }
  out.stats.distinct_verb_lemmas = lemmas.size();
  return out;
}

// ---------------------------------------------------------------------------
// Agreement lexicon

// lemma -> (upos, xpos) -> attested forms
using LemmaIndex = std::map<std::string, std::map<TagPair, std::set<std::string>>>;

inline LemmaIndex build_lemma_index(const Corpus& corpus) {
  LemmaIndex idx;
  for (const auto& s : corpus.sentences) {
    for (const auto& t : s.tokens) {
      if (t.lemma.empty()) continue;
      idx[t.lemma][TagPair{t.upos, fine_tag(t)}].insert(t.form);
    }
  }
  return idx;
}

struct AgreementEntry {
  std::string lemma;
  std::string singular;  // NN for nouns, VBZ for verbs
  std::string plural;    // NNS for nouns, VBP for verbs
  std::uint64_t frequency = 0;

  bool operator==(const AgreementEntry&) const = default;
};

struct AgreementLexicon {
  std::vector<AgreementEntry> nouns;
  std::vector<AgreementEntry> verbs;
  std::vector<std::string> preps;  // may be multiword, e.g. "in front of"
  std::string relativizer = "that";
};

struct LexiconOptions {
  double pct_lo = 50.0;
  double pct_hi = 95.0;
  std::size_t min_entries = 10;
  std::size_t max_preps = 10;
};

// Linear-interpolated percentile of sorted values (the common "linear" rule).
inline double percentile(const std::vector<double>& sorted, double pct) {
  if (sorted.empty()) return 0.0;
  double rank = pct / 100.0 * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(rank));
  auto hi = std::min(sorted.size() - 1, lo + 1);
  double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace detail {

inline std::vector<AgreementEntry> dual_form_entries(const FrequencyTable& table,
                                                     const LemmaIndex& lemmas,
                                                     const std::string& upos,
                                                     const std::string& sg_tag,
                                                     const std::string& pl_tag) {
  auto most_frequent = [&](const std::set<std::string>& forms, const std::string& xpos) {
    std::string best;
    std::uint64_t best_count = 0;
    for (const auto& f : forms) {
      auto c = table.count(upos, xpos, f);
      if (c > best_count) {
        best = f;
        best_count = c;
      }
    }
    return std::pair{best, best_count};
  };
  std::vector<AgreementEntry> out;
  for (const auto& [lemma, by_tag] : lemmas) {
    auto sg = by_tag.find(TagPair{upos, sg_tag});
    auto pl = by_tag.find(TagPair{upos, pl_tag});
    if (sg == by_tag.end() || pl == by_tag.end()) continue;
    auto [sg_form, sg_count] = most_frequent(sg->second, sg_tag);
    auto [pl_form, pl_count] = most_frequent(pl->second, pl_tag);
    if (sg_count == 0 || pl_count == 0 || sg_form == pl_form) continue;
    out.push_back({lemma, sg_form, pl_form, sg_count + pl_count});
  }
  return out;
}

inline std::vector<AgreementEntry> frequency_band(std::vector<AgreementEntry> entries, double lo,
                                                  double hi) {
  std::vector<double> freqs;
  for (const auto& e : entries) freqs.push_back(static_cast<double>(e.frequency));
  std::sort(freqs.begin(), freqs.end());
  const double lo_v = percentile(freqs, lo), hi_v = percentile(freqs, hi);
  std::erase_if(entries, [&](const AgreementEntry& e) {
    auto f = static_cast<double>(e.frequency);
    return f < lo_v || f > hi_v;
  });
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.frequency != b.frequency ? a.frequency > b.frequency : a.lemma < b.lemma;
  });
  return entries;
}

}  // namespace detail

inline AgreementLexicon extract_agreement_lexicon(const FrequencyTable& train_table,
                                                  const LemmaIndex& lemmas,
                                                  const LexiconOptions& opts = {}) {
  if (!(opts.pct_lo >= 0 && opts.pct_lo <= opts.pct_hi && opts.pct_hi <= 100)) {
    throw Error("percentile band must satisfy 0 <= lo <= hi <= 100");
  }
  AgreementLexicon lex;
  lex.nouns = detail::frequency_band(detail::dual_form_entries(train_table, lemmas, "NOUN", "NN", "NNS"),
                                     opts.pct_lo, opts.pct_hi);
  lex.verbs = detail::frequency_band(detail::dual_form_entries(train_table, lemmas, "VERB", "VBZ", "VBP"),
                                     opts.pct_lo, opts.pct_hi);
  if (lex.nouns.size() < opts.min_entries || lex.verbs.size() < opts.min_entries) {
    throw Error("lexicon too sparse: " + std::to_string(lex.nouns.size()) + " nouns, " +
                std::to_string(lex.verbs.size()) + " verbs (minimum " +
                std::to_string(opts.min_entries) + ")");
  }
  std::map<std::string, std::uint64_t> adp;
  for (const auto& e : train_table.entries()) {
    if (e.upos == "ADP") adp[e.form] += e.count;
  }
  std::vector<std::pair<std::string, std::uint64_t>> ranked(adp.begin(), adp.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (std::size_t i = 0; i < ranked.size() && i < opts.max_preps; ++i) lex.preps.push_back(ranked[i].first);
  return lex;
}

// ---------------------------------------------------------------------------
// Agreement pairs

struct AgreementSlots {
  AgreementEntry subject;
  std::optional<AgreementEntry> noun2;
  AgreementEntry verb;
  std::optional<AgreementEntry> verb2;
  std::string prep;
};

// Renders one template. The good member has a singular subject and 3sg
// verbs; the bad member pluralises the subject (position 1) only.
inline MinimalPair make_agreement_pair(Paradigm paradigm, const AgreementSlots& s,
                                       const std::string& relativizer, std::string pair_id) {
  auto need = [&](const auto& slot, const char* name) -> const AgreementEntry& {
    if (!slot) throw Error(std::string("template ") + to_string(paradigm) + " needs slot " + name);
    return *slot;
  };
  std::vector<std::string> toks{"The", s.subject.singular};
  switch (paradigm) {
    case Paradigm::agr_simple:
      toks.push_back(s.verb.singular);
      break;
    case Paradigm::agr_pp: {
      if (s.prep.empty()) throw Error("template agr-pp needs a preposition");
      for (auto& w : split_ws(s.prep)) toks.push_back(std::move(w));
      toks.push_back("the");
      toks.push_back(need(s.noun2, "noun2").singular);
      toks.push_back(s.verb.singular);
      break;
    }
    case Paradigm::agr_vp_coord:
      toks.push_back(s.verb.singular);
      toks.push_back("and");
      toks.push_back(need(s.verb2, "verb2").singular);
      break;
    case Paradigm::agr_subj_rel:
      toks.push_back(relativizer);
      toks.push_back(need(s.verb2, "verb2").singular);
      toks.push_back("the");
      toks.push_back(need(s.noun2, "noun2").singular);
      toks.push_back(s.verb.singular);
      break;
    case Paradigm::agr_obj_rel:
      toks.push_back(relativizer);
      toks.push_back("the");
      toks.push_back(need(s.noun2, "noun2").singular);
      toks.push_back(need(s.verb2, "verb2").singular);
      toks.push_back(s.verb.singular);
      break;
    case Paradigm::semantic_verb:
      throw Error("semantic-verb is not an agreement paradigm");
  }
  toks.push_back(".");
  MinimalPair p;
  p.pair_id = std::move(pair_id);
  p.paradigm = paradigm;
  p.good = toks;
  p.bad = toks;
  p.bad[1] = s.subject.plural;
  p.diff_index = 1;
  p.meta["subject"] = s.subject.lemma;
  p.meta["verb"] = s.verb.lemma;
  if (s.noun2) p.meta["noun2"] = s.noun2->lemma;
  if (s.verb2) p.meta["verb2"] = s.verb2->lemma;
  if (paradigm == Paradigm::agr_pp) p.meta["prep"] = s.prep;
  return p;
}

inline bool needs_noun2(Paradigm p) {
  return p == Paradigm::agr_pp || p == Paradigm::agr_subj_rel || p == Paradigm::agr_obj_rel;
}
inline bool needs_verb2(Paradigm p) {
  return p == Paradigm::agr_vp_coord || p == Paradigm::agr_subj_rel || p == Paradigm::agr_obj_rel;
}

// n_per_paradigm pairs per requested paradigm; pair i of paradigm p uses
// the stream mix64(mix64(seed, p), i). Slots never repeat within a pair.
inline std::vector<MinimalPair> gen_agreement_pairs(const AgreementLexicon& lex,
                                                    const std::vector<Paradigm>& paradigms,
                                                    std::size_t n_per_paradigm, std::uint64_t seed) {
  std::vector<MinimalPair> out;
  for (auto p : paradigms) {
    if (!is_agreement(p)) throw Error("unknown agreement paradigm '" + to_string(p) + "'");
    if (lex.nouns.size() < (needs_noun2(p) ? 2u : 1u)) throw Error("lexicon has too few nouns for " + to_string(p));
    if (lex.verbs.size() < (needs_verb2(p) ? 2u : 1u)) throw Error("lexicon has too few verbs for " + to_string(p));
    if (p == Paradigm::agr_pp && lex.preps.empty()) throw Error("lexicon has no prepositions");
    const auto stream_seed = mix64(seed, static_cast<std::uint64_t>(p));
    for (std::size_t i = 0; i < n_per_paradigm; ++i) {
      auto rng = stream_for(stream_seed, i);
      AgreementSlots s;
      auto n1 = rng.below(lex.nouns.size());
      s.subject = lex.nouns[n1];
      if (needs_noun2(p)) {
        auto n2 = rng.below(lex.nouns.size() - 1);
        if (n2 >= n1) ++n2;
        s.noun2 = lex.nouns[n2];
      }
      auto v1 = rng.below(lex.verbs.size());
      s.verb = lex.verbs[v1];
      if (needs_verb2(p)) {
        auto v2 = rng.below(lex.verbs.size() - 1);
        if (v2 >= v1) ++v2;
        s.verb2 = lex.verbs[v2];
      }
      if (p == Paradigm::agr_pp) s.prep = lex.preps[rng.below(lex.preps.size())];
      char id[32];
      std::snprintf(id, sizeof id, "%06zu", i + 1);
      out.push_back(make_agreement_pair(p, s, lex.relativizer, to_string(p) + "-" + id));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pair files (JSONL)

inline std::string format_pair(const MinimalPair& p) {
  nlohmann::ordered_json j;
  j["pair_id"] = p.pair_id;
  j["paradigm"] = to_string(p.paradigm);
  j["good"] = join(p.good, " ");
  j["bad"] = join(p.bad, " ");
  j["diff_index"] = p.diff_index;
  nlohmann::json meta = nlohmann::json::object();
  for (const auto& [k, v] : p.meta) meta[k] = v;
  if (p.source_sentence_id) meta["source_sentence_id"] = *p.source_sentence_id;
  j["meta"] = meta;
  return j.dump();
}

inline std::string format_pairs(const std::vector<MinimalPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += format_pair(p);
    out += '\n';
  }
  return out;
}

inline void write_pairs(const std::vector<MinimalPair>& pairs, const std::string& path) {
  write_file(path, format_pairs(pairs));
}

inline std::vector<MinimalPair> parse_pairs(std::string_view text, const std::string& origin = "<pairs>") {
  std::vector<MinimalPair> out;
  std::size_t pos = 0, record = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++record;
    if (line.empty()) continue;
    auto where = origin + ": record " + std::to_string(record);
    try {
      auto j = nlohmann::json::parse(line);
      MinimalPair p;
      p.pair_id = j.at("pair_id").get<std::string>();
      p.paradigm = parse_paradigm(j.at("paradigm").get<std::string>());
      p.good = split_ws(j.at("good").get<std::string>());
      p.bad = split_ws(j.at("bad").get<std::string>());
      p.diff_index = j.at("diff_index").get<std::size_t>();
      if (j.contains("meta")) {
        for (const auto& [k, v] : j.at("meta").items()) {
          if (k == "source_sentence_id") p.source_sentence_id = v.get<std::string>();
          else p.meta[k] = v.get<std::string>();
        }
      }
      validate(p);
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw Error(where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<MinimalPair> read_pairs(const std::string& path) {
  return parse_pairs(read_file(path), path);
}

}  // namespace verbscope
