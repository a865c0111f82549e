#include <gtest/gtest.h>

#include "helpers.hpp"
#include "verbscope/eval.hpp"
#include "verbscope/rng.hpp"

using namespace verbscope;
using namespace vs_test;

namespace {

PairParadigms all_as(const std::vector<PairScore>& s, const std::string& paradigm) {
  PairParadigms p;
  for (const auto& x : s) p[x.pair_id] = paradigm;
  return p;
}

EvalResult cell(const std::string& tr, const std::string& ev, double acc) {
  EvalResult r;
  r.accuracy = acc;
  r.n_pairs = 10;
  r.labels = {tr, ev, "ORIGINAL", "final"};
  return r;
}

std::vector<PairScore> random_scores(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<PairScore> s;
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back({"p" + std::to_string(i), -1.0 - 20.0 * rng.uniform(), -1.0 - 20.0 * rng.uniform()});
  }
  return s;
}

}  // namespace

TEST(Evaluate, WinWinLossTie) {
  std::vector<PairScore> s{{"a", -1, -2}, {"b", -3, -4}, {"c", -5, -1}, {"d", -2, -2}};
  auto r = evaluate(s, all_as(s, "semantic-verb"));
  EXPECT_DOUBLE_EQ(r.accuracy, 0.625);
  EXPECT_EQ(r.n_pairs, 4u);
  EXPECT_EQ(r.n_ties, 1u);
  EXPECT_EQ(r.n_wins, 2u);
}

TEST(Evaluate, AllTiesGiveOneHalf) {
  std::vector<PairScore> s;
  for (int i = 0; i < 9; ++i) s.push_back({std::to_string(i), -3, -3});
  EXPECT_DOUBLE_EQ(evaluate(s, all_as(s, "x")).accuracy, 0.5);
}

TEST(Evaluate, ErrorsOnEmptyDuplicateOrUnknown) {
  try {
    evaluate({}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "no pairs");
  }
  std::vector<PairScore> dup{{"a", -1, -2}, {"a", -1, -2}};
  EXPECT_THROW(evaluate(dup, all_as(dup, "x")), Error);
  std::vector<PairScore> one{{"a", -1, -2}};
  EXPECT_THROW(evaluate(one, {}), Error);
}

TEST(Evaluate, PerParadigmBreakdownSumsToTotal) {
  auto s = random_scores(3, 300);
  PairParadigms p;
  for (std::size_t i = 0; i < s.size(); ++i) p[s[i].pair_id] = i % 3 == 0 ? "agr-pp" : i % 3 == 1 ? "agr-simple" : "semantic-verb";
  auto r = evaluate(s, p);
  std::size_t n = 0;
  double credit = 0;
  for (const auto& [_, pa] : r.per_paradigm) {
    n += pa.n;
    credit += pa.accuracy * static_cast<double>(pa.n);
  }
  EXPECT_EQ(n, r.n_pairs);
  EXPECT_NEAR(credit / static_cast<double>(n), r.accuracy, 1e-12);
  EXPECT_NEAR(r.accuracy, (static_cast<double>(r.n_wins) + 0.5 * static_cast<double>(r.n_ties)) / 300.0, 1e-12);
}

TEST(Evaluate, ReversingPairsComplementsAccuracy) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = random_scores(seed, 101);
    auto rev = s;
    for (auto& x : rev) std::swap(x.logprob_good, x.logprob_bad);
    auto p = all_as(s, "x");
    EXPECT_NEAR(evaluate(rev, p).accuracy, 1.0 - evaluate(s, p).accuracy, 1e-12);
  }
}

TEST(Evaluate, InvariantUnderPositiveAffineTransform) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = random_scores(seed, 101);
    s[0].logprob_bad = s[0].logprob_good;
    auto t = s;
    for (auto& x : t) {
      x.logprob_good = 2.5 * x.logprob_good - 7.0;
      x.logprob_bad = 2.5 * x.logprob_bad - 7.0;
    }
    auto p = all_as(s, "x");
    EXPECT_EQ(evaluate(t, p).accuracy, evaluate(s, p).accuracy);
  }
}

TEST(CrossDomain, TwoByTwoMeans) {
  auto m = cross_domain_matrix({cell("a", "a", 0.9), cell("a", "b", 0.6), cell("b", "a", 0.6), cell("b", "b", 0.9)});
  EXPECT_DOUBLE_EQ(*m.diagonal_mean, 0.9);
  EXPECT_DOUBLE_EQ(*m.off_diagonal_mean, 0.6);
  EXPECT_TRUE(m.warnings.empty());
  EXPECT_EQ(format_matrix(m), "train_domain,a,b\na,0.9,0.6\nb,0.6,0.9\n");
}

TEST(CrossDomain, SingleDomain) {
  auto m = cross_domain_matrix({cell("cdl", "cdl", 0.8)});
  EXPECT_EQ(m.train_domains.size(), 1u);
  EXPECT_EQ(m.cells.size(), 1u);
  EXPECT_DOUBLE_EQ(*m.at("cdl", "cdl"), 0.8);
  EXPECT_FALSE(m.off_diagonal_mean.has_value());
}

TEST(CrossDomain, MissingCellMarkedAndWarned) {
  auto m = cross_domain_matrix({cell("a", "a", 0.9), cell("a", "b", 0.6), cell("b", "b", 0.9)});
  EXPECT_FALSE(m.at("b", "a").has_value());
  ASSERT_EQ(m.warnings.size(), 1u);
  EXPECT_NE(m.warnings[0].find("train=b eval=a"), std::string::npos);
  EXPECT_NE(format_matrix(m).find("b,NA,0.9"), std::string::npos);
}

TEST(ResultsCsv, RoundTrip) {
  std::vector<PairScore> s{{"a", -1, -2}, {"b", -3, -3}};
  PairParadigms p{{"a", "agr-pp"}, {"b", "agr-simple"}};
  auto r = evaluate(s, p, {"cdl", "wiki", "SHUFFLE.ORDER", "0.5"});
  auto rows = result_rows(r);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows.back().paradigm, "all");
  EXPECT_EQ(result_rows(r, std::nullopt).size(), 2u);
  TempDir dir;
  write_file(dir.file("r.csv"), format_results(rows));
  auto back = read_results(dir.file("r.csv"));
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].labels.condition, "SHUFFLE.ORDER");
  EXPECT_EQ(back[1].accuracy, 0.5);
  EXPECT_EQ(back[1].ties, 1u);
  EXPECT_EQ(back[2].accuracy, 0.75);
}
