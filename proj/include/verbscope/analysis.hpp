#pragma once

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "verbscope/eval.hpp"
#include "verbscope/util.hpp"

namespace verbscope {

// ---------------------------------------------------------------------------
// Student t

// Regularised incomplete beta form of the Student-t CDF.
inline double t_cdf(double t, double df) {
  if (!(df > 0.0)) throw Error("degrees of freedom must be > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * boost::math::ibeta(0.5 * df, 0.5, x);
  return t > 0 ? 1.0 - tail : tail;
}

// 2 * (1 - CDF(|t|)), evaluated without cancellation.
inline double two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw Error("degrees of freedom must be > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  return boost::math::ibeta(0.5 * df, 0.5, df / (df + t * t));
}

// ---------------------------------------------------------------------------
// OLS with Dataset x Condition interactions

struct Observation {
  double accuracy = 0.0;
  std::string dataset;
  std::string condition;
};

struct OlsOptions {
  std::string reference_dataset = "cdl";
  std::string reference_condition = "ORIGINAL";
};

struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> terms;
  std::vector<std::string> datasets;    // reference first
  std::vector<std::string> conditions;  // reference first
};

// Treatment coding: intercept, one dummy per non-reference dataset and
// condition, and one interaction per non-reference (dataset, condition).
inline Design build_design(const std::vector<Observation>& obs, const OlsOptions& opts) {
  std::set<std::string> ds, cs;
  std::map<std::pair<std::string, std::string>, std::size_t> cell_n;
  for (const auto& o : obs) {
    ds.insert(o.dataset);
    cs.insert(o.condition);
    ++cell_n[{o.dataset, o.condition}];
  }
  if (!ds.count(opts.reference_dataset)) throw Error("reference dataset '" + opts.reference_dataset + "' has no observations");
  if (!cs.count(opts.reference_condition)) {
    throw Error("reference condition '" + opts.reference_condition + "' has no observations");
  }
  if (ds.size() < 2) throw Error("need at least 2 datasets");
  if (cs.size() < 2) throw Error("need at least 2 conditions");
  Design d;
  d.datasets.push_back(opts.reference_dataset);
  for (const auto& x : ds) if (x != opts.reference_dataset) d.datasets.push_back(x);
  d.conditions.push_back(opts.reference_condition);
  for (const auto& x : cs) if (x != opts.reference_condition) d.conditions.push_back(x);
  for (const auto& a : d.datasets) {
    for (const auto& c : d.conditions) {
      if (!cell_n.count({a, c})) throw Error("empty cell: dataset=" + a + " condition=" + c);
    }
  }
  d.terms.push_back("Intercept");
  for (std::size_t i = 1; i < d.datasets.size(); ++i) d.terms.push_back("Dataset[" + d.datasets[i] + "]");
  for (std::size_t j = 1; j < d.conditions.size(); ++j) d.terms.push_back("Condition[" + d.conditions[j] + "]");
  for (std::size_t i = 1; i < d.datasets.size(); ++i) {
    for (std::size_t j = 1; j < d.conditions.size(); ++j) {
      d.terms.push_back("Dataset[" + d.datasets[i] + "]:Condition[" + d.conditions[j] + "]");
    }
  }
  const auto n = static_cast<Eigen::Index>(obs.size());
  const auto k = static_cast<Eigen::Index>(d.terms.size());
  const auto nd = d.datasets.size() - 1, nc = d.conditions.size() - 1;
  d.x = Eigen::MatrixXd::Zero(n, k);
  d.y.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& o = obs[static_cast<std::size_t>(r)];
    d.y(r) = o.accuracy;
    d.x(r, 0) = 1.0;
    auto di = static_cast<std::size_t>(std::find(d.datasets.begin(), d.datasets.end(), o.dataset) - d.datasets.begin());
    auto ci = static_cast<std::size_t>(std::find(d.conditions.begin(), d.conditions.end(), o.condition) - d.conditions.begin());
    if (di > 0) d.x(r, static_cast<Eigen::Index>(di)) = 1.0;
    if (ci > 0) d.x(r, static_cast<Eigen::Index>(nd + ci)) = 1.0;
    if (di > 0 && ci > 0) d.x(r, static_cast<Eigen::Index>(1 + nd + nc + (di - 1) * nc + (ci - 1))) = 1.0;
  }
  return d;
}

struct RegressionResult {
  std::vector<std::string> terms;
  std::vector<double> estimates;
  std::vector<double> std_errors;  // NaN when the design leaves no residual df
  std::vector<double> t_values;
  std::vector<double> p_values;
  std::vector<double> fitted;
  std::vector<double> residuals;
  double r_squared = 0.0;
  std::size_t n = 0;
  std::size_t df = 0;
  std::string reference_dataset;
  std::string reference_condition;
};

inline RegressionResult ols_fit(const Design& d) {
  const auto n = d.x.rows(), k = d.x.cols();
  if (n < k) throw Error("fewer observations than coefficients");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.x);
  if (qr.rank() < k) throw Error("rank-deficient design");
  Eigen::VectorXd beta = qr.solve(d.y);
  Eigen::VectorXd fitted = d.x * beta;
  Eigen::VectorXd resid = d.y - fitted;

  RegressionResult r;
  r.terms = d.terms;
  r.n = static_cast<std::size_t>(n);
  r.df = static_cast<std::size_t>(n - k);
  const double ssr = resid.squaredNorm();
  const double mean = d.y.mean();
  const double sst = (d.y.array() - mean).square().sum();
  r.r_squared = sst > 0.0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 1.0;

  // (X'X)^-1 = P R^-1 R^-T P'
  Eigen::MatrixXd rmat = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  Eigen::MatrixXd rinv = rmat.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd perm = qr.colsPermutation();
  Eigen::MatrixXd xtx_inv = perm * rinv * rinv.transpose() * perm.transpose();

  const double sigma2 = r.df > 0 ? ssr / static_cast<double>(r.df) : std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index j = 0; j < k; ++j) {
    const double est = beta(j);
    const double se = std::sqrt(sigma2 * xtx_inv(j, j));
    double t = std::numeric_limits<double>::quiet_NaN();
    double p = std::numeric_limits<double>::quiet_NaN();
    if (r.df > 0) {
      if (se > 0.0) {
        t = est / se;
      } else if (est != 0.0) {
        t = est > 0 ? INFINITY : -INFINITY;
      }
      p = two_sided_p(t, static_cast<double>(r.df));
    }
    r.estimates.push_back(est);
    r.std_errors.push_back(se);
    r.t_values.push_back(t);
    r.p_values.push_back(p);
  }
  r.fitted.assign(fitted.data(), fitted.data() + n);
  r.residuals.assign(resid.data(), resid.data() + n);
  return r;
}

inline RegressionResult ols_interaction(const std::vector<Observation>& obs, const OlsOptions& opts = {}) {
  auto d = build_design(obs, opts);
  auto r = ols_fit(d);
  r.reference_dataset = opts.reference_dataset;
  r.reference_condition = opts.reference_condition;
  return r;
}

inline std::string format_regression_csv(const RegressionResult& r) {
  std::string out = "term,estimate,std_error,t,p\n";
  for (std::size_t j = 0; j < r.terms.size(); ++j) {
    out += csv_field(r.terms[j]) + ',' + format_double(r.estimates[j]) + ',' + format_double(r.std_errors[j]) +
           ',' + format_double(r.t_values[j]) + ',' + format_double(r.p_values[j]) + '\n';
  }
  return out;
}

inline std::string format_regression_table(const RegressionResult& r) {
  std::size_t w = 4;
  for (const auto& t : r.terms) w = std::max(w, t.size());
  auto pad = [](std::string s, std::size_t n, bool left = false) {
    if (s.size() < n) s = left ? s + std::string(n - s.size(), ' ') : std::string(n - s.size(), ' ') + s;
    return s;
  };
  std::string out = pad("term", w, true) + pad("estimate", 12) + pad("std_error", 12) + pad("t", 10) + pad("p", 10) + '\n';
  for (std::size_t j = 0; j < r.terms.size(); ++j) {
    out += pad(r.terms[j], w, true) + pad(format_fixed(r.estimates[j], 5), 12) + pad(format_fixed(r.std_errors[j], 5), 12) +
           pad(format_fixed(r.t_values[j], 3), 10) + pad(format_fixed(r.p_values[j], 4), 10) + '\n';
  }
  out += "n = " + std::to_string(r.n) + ", df = " + std::to_string(r.df) + ", R^2 = " + format_fixed(r.r_squared, 4) +
         ", reference = (" + r.reference_dataset + ", " + r.reference_condition + ")\n";
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories

struct TrajectoryRow {
  std::string checkpoint;
  double semantic_accuracy = 0.0;
  double syntactic_accuracy = 0.0;
  std::optional<double> ratio;  // undefined when syntactic accuracy is 0
};

struct TrajectoryTable {
  std::vector<TrajectoryRow> rows;  // sorted by numeric checkpoint
  double threshold = 0.75;
  std::optional<std::string> semantic_first;   // earliest checkpoint with semantic >= threshold
  std::optional<std::string> syntactic_first;  // same for syntactic
};

inline double checkpoint_value(const std::string& label) {
  try {
    return parse_double(label);
  } catch (const Error&) {
    throw Error("checkpoint label is not numeric: '" + label + "'");
  }
}

inline TrajectoryTable trajectory(const std::map<std::string, double>& semantic,
                                  const std::map<std::string, double>& syntactic, double threshold = 0.75) {
  std::vector<std::string> only_sem, only_syn;
  for (const auto& [k, _] : semantic) if (!syntactic.count(k)) only_sem.push_back(k);
  for (const auto& [k, _] : syntactic) if (!semantic.count(k)) only_syn.push_back(k);
  if (!only_sem.empty() || !only_syn.empty()) {
    throw Error("mismatched checkpoints: semantic only {" + join(only_sem, ", ") + "}, syntactic only {" +
                join(only_syn, ", ") + "}");
  }
  TrajectoryTable t;
  t.threshold = threshold;
  for (const auto& [k, sem] : semantic) {
    checkpoint_value(k);
    double syn = syntactic.at(k);
    for (double a : {sem, syn}) {
      if (!(a >= 0.0 && a <= 1.0)) throw Error("accuracy outside [0,1] at checkpoint " + k);
    }
    TrajectoryRow row{k, sem, syn, std::nullopt};
    if (syn > 0.0) row.ratio = sem / syn;
    t.rows.push_back(row);
  }
  std::stable_sort(t.rows.begin(), t.rows.end(), [](const auto& a, const auto& b) {
    return checkpoint_value(a.checkpoint) < checkpoint_value(b.checkpoint);
  });
  for (const auto& r : t.rows) {
    if (!t.semantic_first && r.semantic_accuracy >= threshold) t.semantic_first = r.checkpoint;
    if (!t.syntactic_first && r.syntactic_accuracy >= threshold) t.syntactic_first = r.checkpoint;
  }
  return t;
}

inline TrajectoryTable trajectory(const std::vector<EvalResult>& semantic, const std::vector<EvalResult>& syntactic,
                                  double threshold = 0.75) {
  std::map<std::string, double> sem, syn;
  for (const auto& r : semantic) sem[r.labels.checkpoint] = r.accuracy;
  for (const auto& r : syntactic) syn[r.labels.checkpoint] = r.accuracy;
  return trajectory(sem, syn, threshold);
}

inline std::string format_trajectory_csv(const TrajectoryTable& t) {
  std::string out = "checkpoint,semantic_acc,syntactic_acc,ratio\n";
  for (const auto& r : t.rows) {
    out += csv_field(r.checkpoint) + ',' + format_double(r.semantic_accuracy) + ',' +
           format_double(r.syntactic_accuracy) + ',' + (r.ratio ? format_double(*r.ratio) : std::string("NA")) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG charts

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct ChartOptions {
  std::string title;
  std::string x_label = "checkpoint";
  std::string y_label = "accuracy";
  int width = 640;
  int height = 400;
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Ticks {
  double lo = 0, hi = 1, step = 0.2;
  int decimals = 1;
};

inline double nice_number(double x, bool round) {
  const double e = std::floor(std::log10(x));
  const double f = x / std::pow(10.0, e);
  double nf;
  if (round) nf = f < 1.5 ? 1 : f < 3 ? 2 : f < 7 ? 5 : 10;
  else nf = f <= 1 ? 1 : f <= 2 ? 2 : f <= 5 ? 5 : 10;
  return nf * std::pow(10.0, e);
}

inline Ticks nice_ticks(double lo, double hi) {
  if (lo >= 0.0 && hi <= 1.0) return Ticks{};
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double range = nice_number(hi - lo, false);
  const double step = nice_number(range / 5.0, true);
  Ticks t;
  t.step = step;
  t.lo = std::floor(lo / step) * step;
  t.hi = std::ceil(hi / step) * step;
  t.decimals = std::max(0, static_cast<int>(-std::floor(std::log10(step))));
  return t;
}

inline const char* series_colour(std::size_t i) {
  static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return palette[i % (sizeof palette / sizeof *palette)];
}

}  // namespace detail

// Standalone SVG 1.1 line chart: axes, tick labels, legend, one polyline per series.
inline std::string render_chart(const std::vector<ChartSeries>& series, const ChartOptions& opts = {}) {
  if (series.empty()) throw Error("empty series");
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series) {
    if (s.points.size() < 2) throw Error("empty series: '" + s.name + "' needs at least 2 points");
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) throw Error("non-finite point in series '" + s.name + "'");
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  const auto xt = detail::nice_ticks(xmin, xmax);
  const auto yt = detail::nice_ticks(ymin, ymax);
  const double left = 60, right = 150, top = 40, bottom = 50;
  const double pw = opts.width - left - right, ph = opts.height - top - bottom;
  auto px = [&](double x) { return left + (x - xt.lo) / (xt.hi - xt.lo) * pw; };
  auto py = [&](double y) { return top + ph - (y - yt.lo) / (yt.hi - yt.lo) * ph; };
  auto num = [](double v) { return format_fixed(v, 2); };

  std::string o;
  o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + std::to_string(opts.width) +
       "\" height=\"" + std::to_string(opts.height) + "\" viewBox=\"0 0 " + std::to_string(opts.width) + " " +
       std::to_string(opts.height) + "\">\n";
  o += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(opts.width) + "\" height=\"" + std::to_string(opts.height) +
       "\" fill=\"white\"/>\n";
  if (!opts.title.empty()) {
    o += "<text x=\"" + num(left + pw / 2) + "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">" + detail::xml_escape(opts.title) + "</text>\n";
  }
  o += "<g stroke=\"black\" stroke-width=\"1\">\n";
  o += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(left + pw) + "\" y2=\"" + num(top + ph) + "\"/>\n";
  o += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" + num(top + ph) + "\"/>\n";
  o += "</g>\n";
  o += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  const int ny = static_cast<int>(std::lround((yt.hi - yt.lo) / yt.step));
  for (int i = 0; i <= ny; ++i) {
    double v = yt.lo + i * yt.step;
    o += "<line x1=\"" + num(left - 4) + "\" y1=\"" + num(py(v)) + "\" x2=\"" + num(left) + "\" y2=\"" + num(py(v)) +
         "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py(v) + 4) + "\" text-anchor=\"end\">" +
         format_fixed(v, yt.decimals) + "</text>\n";
  }
  const int nx = static_cast<int>(std::lround((xt.hi - xt.lo) / xt.step));
  for (int i = 0; i <= nx; ++i) {
    double v = xt.lo + i * xt.step;
    o += "<line x1=\"" + num(px(v)) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(px(v)) + "\" y2=\"" +
         num(top + ph + 4) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + num(px(v)) + "\" y=\"" + num(top + ph + 16) + "\" text-anchor=\"middle\">" +
         format_fixed(v, xt.decimals) + "</text>\n";
  }
  o += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(opts.height - 10.0) + "\" text-anchor=\"middle\">" +
       detail::xml_escape(opts.x_label) + "</text>\n";
  o += "<text x=\"15\" y=\"" + num(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
       num(top + ph / 2) + ")\">" + detail::xml_escape(opts.y_label) + "</text>\n";
  o += "</g>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::string pts;
    for (auto [x, y] : series[i].points) {
      if (!pts.empty()) pts += ' ';
      pts += num(px(x)) + "," + num(py(y));
    }
    o += "<polyline fill=\"none\" stroke=\"" + std::string(detail::series_colour(i)) + "\" stroke-width=\"2\" points=\"" +
         pts + "\"/>\n";
  }
  o += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    double ly = top + 10 + 18.0 * static_cast<double>(i);
    o += "<rect x=\"" + num(left + pw + 15) + "\" y=\"" + num(ly - 8) + "\" width=\"12\" height=\"12\" fill=\"" +
         std::string(detail::series_colour(i)) + "\"/>\n";
    o += "<text x=\"" + num(left + pw + 32) + "\" y=\"" + num(ly + 2) + "\">" + detail::xml_escape(series[i].name) +
         "</text>\n";
  }
  o += "</g>\n</svg>\n";
  return o;
}

inline void emit_chart(const std::vector<ChartSeries>& series, const std::string& path, const ChartOptions& opts = {}) {
  write_file(path, render_chart(series, opts));
}

}  // namespace verbscope
