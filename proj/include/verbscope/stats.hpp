#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "verbscope/corpus.hpp"
#include "verbscope/parallel.hpp"
#include "verbscope/perturb.hpp"
#include "verbscope/util.hpp"

namespace verbscope {

struct CorpusStats {
  std::string domain;
  std::optional<double> ttr_1, ttr_2, ttr_3;  // empty when no n-gram of that order exists
  double avg_sentence_length = 0.0;
  std::size_t n_sentences = 0;
  std::size_t n_tokens = 0;
  std::vector<std::string> warnings;
};

namespace detail {

// N-grams are keyed by their lowercased forms joined with a unit separator.
inline std::string ngram_key(const std::vector<std::string>& lower, std::size_t i, std::size_t n) {
  std::string k = lower[i];
  for (std::size_t j = 1; j < n; ++j) {
    k += '\x1f';
    k += lower[i + j];
  }
  return k;
}

struct NgramTally {
  std::unordered_set<std::string> types[3];
  std::uint64_t total[3] = {0, 0, 0};
};

}  // namespace detail

// Type/token ratios over within-sentence n-grams of lowercased forms.
inline CorpusStats compute_stats(const Corpus& corpus, unsigned threads = 1) {
  if (corpus.sentences.empty()) throw Error("empty corpus");
  CorpusStats s;
  s.domain = corpus.domain;
  s.n_sentences = corpus.sentences.size();
  s.n_tokens = corpus.token_count();
  if (s.n_tokens == 0) throw Error("empty corpus");

  threads = std::max(1u, threads);
  const std::size_t n = corpus.sentences.size();
  const std::size_t shards = std::min<std::size_t>(threads, n);
  const std::size_t chunk = (n + shards - 1) / shards;
  std::vector<detail::NgramTally> tallies(shards);
  parallel_for(shards, threads, [&](std::size_t w) {
    auto& t = tallies[w];
    std::vector<std::string> lower;
    for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) {
      const auto& toks = corpus.sentences[i].tokens;
      lower.clear();
      for (const auto& tok : toks) lower.push_back(ascii_lower(tok.form));
      for (std::size_t order = 1; order <= 3; ++order) {
        if (lower.size() < order) break;
        for (std::size_t p = 0; p + order <= lower.size(); ++p) {
          t.types[order - 1].insert(detail::ngram_key(lower, p, order));
          ++t.total[order - 1];
        }
      }
    }
  });
  for (std::size_t order = 0; order < 3; ++order) {
    std::unordered_set<std::string> types;
    std::uint64_t total = 0;
    for (auto& t : tallies) {
      types.merge(t.types[order]);
      total += t.total[order];
    }
    std::optional<double> v;
    if (total > 0) {
      v = static_cast<double>(types.size()) / static_cast<double>(total);
    } else {
      s.warnings.push_back("ttr_" + std::to_string(order + 1) + " undefined: no " + std::to_string(order + 1) +
                           "-grams in corpus");
    }
    (order == 0 ? s.ttr_1 : order == 1 ? s.ttr_2 : s.ttr_3) = v;
  }
  s.avg_sentence_length = static_cast<double>(s.n_tokens) / static_cast<double>(s.n_sentences);
  return s;
}

inline std::string format_optional(const std::optional<double>& v, int decimals = -1) {
  if (!v) return "NONE";
  return decimals < 0 ? format_double(*v) : format_fixed(*v, decimals);
}

inline constexpr const char* kStatsHeader = "domain,ttr_1,ttr_2,ttr_3,avg_sentence_length,n_sentences,n_tokens";

inline std::string format_stats_csv(const std::vector<CorpusStats>& rows) {
  std::string out = std::string(kStatsHeader) + '\n';
  for (const auto& s : rows) {
    out += csv_field(s.domain) + ',' + format_optional(s.ttr_1) + ',' + format_optional(s.ttr_2) + ',' +
           format_optional(s.ttr_3) + ',' + format_double(s.avg_sentence_length) + ',' +
           std::to_string(s.n_sentences) + ',' + std::to_string(s.n_tokens) + '\n';
  }
  return out;
}

// Rows are statistics, columns are corpora.
inline std::string format_stats_table(const std::vector<CorpusStats>& rows) {
  std::vector<std::pair<std::string, std::vector<std::string>>> lines = {
      {"", {}}, {"TTR (1-gram)", {}}, {"TTR (2-gram)", {}}, {"TTR (3-gram)", {}},
      {"Avg. sentence length", {}}, {"Sentences", {}}, {"Tokens", {}}};
  for (const auto& s : rows) {
    lines[0].second.push_back(s.domain);
    lines[1].second.push_back(format_optional(s.ttr_1, 3));
    lines[2].second.push_back(format_optional(s.ttr_2, 3));
    lines[3].second.push_back(format_optional(s.ttr_3, 3));
    lines[4].second.push_back(format_fixed(s.avg_sentence_length, 2));
    lines[5].second.push_back(std::to_string(s.n_sentences));
    lines[6].second.push_back(std::to_string(s.n_tokens));
  }
  std::size_t w0 = 0;
  for (const auto& l : lines) w0 = std::max(w0, l.first.size());
  std::vector<std::size_t> w(rows.size(), 0);
  for (const auto& l : lines) {
    for (std::size_t c = 0; c < l.second.size(); ++c) w[c] = std::max(w[c], l.second[c].size());
  }
  std::string out;
  for (const auto& l : lines) {
    out += l.first + std::string(w0 - l.first.size(), ' ');
    for (std::size_t c = 0; c < l.second.size(); ++c) {
      out += "  " + std::string(w[c] - l.second[c].size(), ' ') + l.second[c];
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replacement-rate accounting

struct ReplacementRateRow {
  std::string domain;
  double replacement_rate = 0.0;
  std::uint64_t tokens_replaced = 0;
  std::uint64_t tokens_total = 0;
  std::optional<double> avg_sentence_length;
};

struct ReplacementRateTable {
  std::vector<ReplacementRateRow> rows;  // sorted by domain
  std::optional<double> length_correlation;  // Pearson r against average sentence length
};

inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

inline ReplacementRateTable compare_replacement_rates(const std::map<std::string, PerturbReport>& reports,
                                                      const std::map<std::string, CorpusStats>& stats = {}) {
  ReplacementRateTable t;
  std::vector<double> rates, lengths;
  for (const auto& [domain, r] : reports) {
    ReplacementRateRow row{domain, r.replacement_rate, r.tokens_replaced, r.tokens_total, std::nullopt};
    if (auto it = stats.find(domain); it != stats.end()) {
      row.avg_sentence_length = it->second.avg_sentence_length;
      rates.push_back(r.replacement_rate);
      lengths.push_back(it->second.avg_sentence_length);
    }
    t.rows.push_back(row);
  }
  if (rates.size() == reports.size()) t.length_correlation = pearson(rates, lengths);
  return t;
}

inline std::string format_replacement_rates(const ReplacementRateTable& t) {
  std::string out = "domain,replacement_rate,tokens_replaced,tokens_total,avg_sentence_length\n";
  for (const auto& r : t.rows) {
    out += csv_field(r.domain) + ',' + format_double(r.replacement_rate) + ',' + std::to_string(r.tokens_replaced) +
           ',' + std::to_string(r.tokens_total) + ',' + format_optional(r.avg_sentence_length) + '\n';
  }
  if (t.length_correlation) out += "# pearson_r(rate, avg_sentence_length) = " + format_double(*t.length_correlation) + '\n';
  return out;
}

}  // namespace verbscope
