#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "verbscope/pairgen.hpp"
#include "verbscope/scorer.hpp"
#include "verbscope/util.hpp"

namespace verbscope {

struct EvalLabels {
  std::string train_domain;
  std::string eval_domain;
  std::string condition;
  std::string checkpoint;

  auto operator<=>(const EvalLabels&) const = default;
};

struct ParadigmAccuracy {
  double accuracy = 0.0;
  std::size_t n = 0;
  std::size_t ties = 0;
};

struct EvalResult {
  double accuracy = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_wins = 0;
  std::size_t n_ties = 0;
  std::map<std::string, ParadigmAccuracy> per_paradigm;
  EvalLabels labels;
};

using PairParadigms = std::unordered_map<std::string, std::string>;

inline PairParadigms paradigm_index(const std::vector<MinimalPair>& pairs) {
  PairParadigms idx;
  for (const auto& p : pairs) idx[p.pair_id] = to_string(p.paradigm);
  return idx;
}

// Win iff lp_good > lp_bad; exact ties earn half credit.
inline EvalResult evaluate(const std::vector<PairScore>& scored, const PairParadigms& paradigms,
                           EvalLabels labels = {}) {
  if (scored.empty()) throw Error("no pairs");
  EvalResult r;
  r.labels = std::move(labels);
  std::unordered_set<std::string> seen;
  struct Tally {
    std::size_t n = 0, wins = 0, ties = 0;
  };
  std::map<std::string, Tally> by_paradigm;
  for (const auto& s : scored) {
    if (!seen.insert(s.pair_id).second) throw Error("duplicate pair_id '" + s.pair_id + "'");
    auto it = paradigms.find(s.pair_id);
    if (it == paradigms.end()) throw Error("no metadata for pair '" + s.pair_id + "'");
    auto& t = by_paradigm[it->second];
    ++t.n;
    if (s.logprob_good > s.logprob_bad) ++t.wins;
    else if (s.logprob_good == s.logprob_bad) ++t.ties;
  }
  for (const auto& [name, t] : by_paradigm) {
    r.n_pairs += t.n;
    r.n_wins += t.wins;
    r.n_ties += t.ties;
    r.per_paradigm[name] = {(static_cast<double>(t.wins) + 0.5 * static_cast<double>(t.ties)) /
                                static_cast<double>(t.n),
                            t.n, t.ties};
  }
  r.accuracy = (static_cast<double>(r.n_wins) + 0.5 * static_cast<double>(r.n_ties)) /
               static_cast<double>(r.n_pairs);
  return r;
}

// ---------------------------------------------------------------------------
// Result CSV: train_domain,eval_domain,condition,checkpoint,paradigm,accuracy,n,ties
// One row per paradigm plus an "all" row.

struct ResultRow {
  EvalLabels labels;
  std::string paradigm;
  double accuracy = 0.0;
  std::size_t n = 0;
  std::size_t ties = 0;
};

inline constexpr const char* kResultsHeader = "train_domain,eval_domain,condition,checkpoint,paradigm,accuracy,n,ties";

// `aggregate` names the pooled row; nullopt omits it.
inline std::vector<ResultRow> result_rows(const EvalResult& r,
                                          const std::optional<std::string>& aggregate = std::string("all")) {
  std::vector<ResultRow> rows;
  for (const auto& [name, pa] : r.per_paradigm) rows.push_back({r.labels, name, pa.accuracy, pa.n, pa.ties});
  if (aggregate) rows.push_back({r.labels, *aggregate, r.accuracy, r.n_pairs, r.n_ties});
  return rows;
}

inline std::string format_result_row(const ResultRow& row) {
  const auto& l = row.labels;
  return csv_field(l.train_domain) + ',' + csv_field(l.eval_domain) + ',' + csv_field(l.condition) + ',' +
         csv_field(l.checkpoint) + ',' + csv_field(row.paradigm) + ',' + format_double(row.accuracy) + ',' +
         std::to_string(row.n) + ',' + std::to_string(row.ties);
}

inline std::string format_results(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kResultsHeader) + '\n';
  for (const auto& r : rows) out += format_result_row(r) + '\n';
  return out;
}

inline std::vector<ResultRow> parse_results(const CsvTable& t) {
  const auto c_tr = t.column("train_domain"), c_ev = t.column("eval_domain"), c_co = t.column("condition"),
             c_ck = t.column("checkpoint"), c_pa = t.column("paradigm"), c_ac = t.column("accuracy"),
             c_n = t.column("n"), c_ti = t.column("ties");
  std::vector<ResultRow> rows;
  for (const auto& f : t.rows) {
    rows.push_back({{f[c_tr], f[c_ev], f[c_co], f[c_ck]},
                    f[c_pa],
                    parse_double(f[c_ac]),
                    parse_int<std::size_t>(f[c_n]),
                    parse_int<std::size_t>(f[c_ti])});
  }
  return rows;
}

inline std::vector<ResultRow> read_results(const std::string& path) { return parse_results(read_csv(path)); }

// ---------------------------------------------------------------------------
// Cross-domain matrix

struct CrossDomainMatrix {
  std::vector<std::string> train_domains;
  std::vector<std::string> eval_domains;
  std::map<std::pair<std::string, std::string>, std::optional<double>> cells;
  std::optional<double> diagonal_mean;
  std::optional<double> off_diagonal_mean;
  std::vector<std::string> warnings;

  std::optional<double> at(const std::string& train, const std::string& eval) const {
    auto it = cells.find({train, eval});
    return it == cells.end() ? std::nullopt : it->second;
  }
};

// Cells average every result sharing (train_domain, eval_domain). The grid
// spans the union of domains seen on either axis; empty cells are gaps.
inline CrossDomainMatrix cross_domain_matrix(const std::vector<EvalResult>& results) {
  CrossDomainMatrix m;
  std::set<std::string> domains;
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> sums;
  for (const auto& r : results) {
    domains.insert(r.labels.train_domain);
    domains.insert(r.labels.eval_domain);
    auto& s = sums[{r.labels.train_domain, r.labels.eval_domain}];
    s.first += r.accuracy;
    ++s.second;
  }
  m.train_domains.assign(domains.begin(), domains.end());
  m.eval_domains = m.train_domains;
  double diag = 0, off = 0;
  std::size_t n_diag = 0, n_off = 0;
  for (const auto& tr : m.train_domains) {
    for (const auto& ev : m.eval_domains) {
      auto it = sums.find({tr, ev});
      if (it == sums.end()) {
        m.cells[{tr, ev}] = std::nullopt;
        m.warnings.push_back("missing cell train=" + tr + " eval=" + ev);
        continue;
      }
      double v = it->second.first / static_cast<double>(it->second.second);
      m.cells[{tr, ev}] = v;
      if (tr == ev) {
        diag += v;
        ++n_diag;
      } else {
        off += v;
        ++n_off;
      }
    }
  }
  if (n_diag) m.diagonal_mean = diag / static_cast<double>(n_diag);
  if (n_off) m.off_diagonal_mean = off / static_cast<double>(n_off);
  return m;
}

inline std::string format_matrix(const CrossDomainMatrix& m) {
  std::string out = "train_domain";
  for (const auto& ev : m.eval_domains) out += ',' + csv_field(ev);
  out += '\n';
  for (const auto& tr : m.train_domains) {
    out += csv_field(tr);
    for (const auto& ev : m.eval_domains) {
      auto v = m.at(tr, ev);
      out += ',' + (v ? format_double(*v) : std::string("NA"));
    }
    out += '\n';
  }
  return out;
}

}  // namespace verbscope
