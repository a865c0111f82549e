#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "helpers.hpp"
#include "verbscope/ingest.hpp"
#include "verbscope/pairgen.hpp"
#include "verbscope/scorer.hpp"

using namespace verbscope;
using namespace vs_test;

namespace {

using Gram = std::vector<std::string>;

// Straightforward interpolated Kneser-Ney written from the definition,
// recounting everything from the padded sentences on each query.
class NaiveKN {
 public:
  NaiveKN(const std::vector<std::vector<std::string>>& sentences, int order, double d)
      : n_(static_cast<std::size_t>(order)), d_(d) {
    std::set<std::string> vocab{"</s>", "<unk>"};
    for (const auto& s : sentences) {
      Gram padded(n_ - 1, "<s>");
      for (const auto& w : s) {
        padded.push_back(w);
        vocab.insert(w);
      }
      padded.push_back("</s>");
      for (std::size_t e = n_; e <= padded.size(); ++e) windows_.emplace_back(padded.begin() + (e - n_), padded.begin() + e);
    }
    vocab_size_ = vocab.size();
  }

  double prob(const std::string& w, const Gram& ctx) const { return p(ctx.size() + 1, w, ctx); }

 private:
  double count(std::size_t k, const Gram& g) const {
    if (k == n_) {
      double c = 0;
      for (const auto& win : windows_) c += win == g;
      return c;
    }
    if (g[0] == "<s>") {
      double c = 0;
      for (const auto& win : windows_) c += Gram(win.end() - static_cast<std::ptrdiff_t>(k), win.end()) == g;
      return c;
    }
    std::set<Gram> left;
    for (const auto& win : windows_) {
      Gram ext(win.end() - static_cast<std::ptrdiff_t>(k + 1), win.end());
      if (Gram(ext.begin() + 1, ext.end()) == g) left.insert(ext);
    }
    return static_cast<double>(left.size());
  }

  double p(std::size_t k, const std::string& w, const Gram& ctx) const {
    if (k == 0) return 1.0 / static_cast<double>(vocab_size_);
    Gram shorter = ctx.empty() ? Gram{} : Gram(ctx.begin() + 1, ctx.end());
    double lower = p(k - 1, w, shorter);
    std::set<Gram> grams;
    for (const auto& win : windows_) {
      Gram g(win.end() - static_cast<std::ptrdiff_t>(k), win.end());
      if (Gram(g.begin(), g.end() - 1) == ctx) grams.insert(g);
    }
    if (grams.empty()) return lower;
    double total = 0;
    for (const auto& g : grams) total += count(k, g);
    Gram full = ctx;
    full.push_back(w);
    double a = grams.count(full) ? count(k, full) : 0.0;
    return (std::max(a - d_, 0.0) + d_ * static_cast<double>(grams.size()) * lower) / total;
  }

  std::size_t n_;
  double d_;
  std::size_t vocab_size_ = 0;
  std::vector<Gram> windows_;
};

Corpus text_corpus(const std::vector<std::string>& lines) { return corpus_from_lines(lines, "toy"); }

const NGramLM& fixture_lm() {
  static const NGramLM lm = [] {
    auto c = read_conllu(data_path("conversational.conllu"));
    c.sentences.resize(4000);
    return train_ngram(c, {3, {}, 1});
  }();
  return lm;
}

}  // namespace

TEST(NGram, UnigramOnAAB) {
  auto lm = train_ngram(text_corpus({"a a b"}), {1, {}, 1});
  const double pa = lm.prob(lm.id("a"), {}), pb = lm.prob(lm.id("b"), {});
  const double pe = lm.prob(NGramLM::kEos, {}), pu = lm.prob(NGramLM::kUnk, {});
  EXPECT_NEAR(pa, 0.453125, 1e-15);
  EXPECT_NEAR(pb, 0.203125, 1e-15);
  EXPECT_NEAR(pe, 0.203125, 1e-15);
  EXPECT_NEAR(pu, 0.140625, 1e-15);
  EXPECT_NEAR(pa + pb + pe + pu, 1.0, 1e-12);
}

TEST(NGram, TrainingIsDeterministic) {
  auto c = text_corpus({"you want it .", "do you want it ?", "it is here ."});
  EXPECT_EQ(format_ngram(train_ngram(c)), format_ngram(train_ngram(c)));
}

TEST(NGram, Errors) {
  EXPECT_THROW(train_ngram(Corpus{}), Error);
  EXPECT_THROW(train_ngram(text_corpus({"a"}), {0, {}, 1}), Error);
  EXPECT_THROW(train_ngram(text_corpus({"a"}), {2, {0.5}, 1}), Error);
}

TEST(NGram, EmptySentenceScoresOnlyEos) {
  auto lm = train_ngram(text_corpus({"a b", "b a c"}), {3, {}, 1});
  auto s = lm.score({});
  EXPECT_EQ(s.num_tokens, 1u);
  EXPECT_DOUBLE_EQ(s.logprob, std::log(lm.prob(NGramLM::kEos, {NGramLM::kBos, NGramLM::kBos})));
}

TEST(NGram, UnseenWordScoresAsUnk) {
  auto lm = train_ngram(text_corpus({"a b", "b a c"}), {3, {}, 1});
  EXPECT_DOUBLE_EQ(lm.score({"a", "zebra", "c"}).logprob, lm.score({"a", "<unk>", "c"}).logprob);
}

TEST(NGram, MatchesNaiveOracleStepByStep) {
  const std::vector<std::string> lines{"a b c", "b c", "c a b", "a a"};
  std::vector<std::vector<std::string>> toks;
  for (const auto& l : lines) toks.push_back(split_ws(l));
  for (int order : {1, 2, 3}) {
    auto lm = train_ngram(text_corpus(lines), {order, {}, 1});
    NaiveKN oracle(toks, order, 0.75);
    for (const auto& sent : std::vector<Gram>{{"a", "b", "c"}, {"c", "c", "a", "b"}, {"b"}, {}}) {
      Gram ctx(static_cast<std::size_t>(order - 1), "<s>");
      double expected = 0;
      auto step = [&](const std::string& w) {
        expected += std::log(oracle.prob(w, ctx));
        if (!ctx.empty()) {
          ctx.erase(ctx.begin());
          ctx.push_back(w);
        }
      };
      for (const auto& w : sent) step(w);
      step("</s>");
      EXPECT_NEAR(lm.score(sent).logprob, expected, 1e-12) << "order " << order << " " << join(sent, " ");
    }
  }
}

TEST(NGram, NormalizesOverObservedContexts) {
  const auto& lm = fixture_lm();
  for (int k = 1; k <= lm.order(); ++k) {
    auto ctxs = lm.observed_contexts(k);
    ASSERT_FALSE(ctxs.empty());
    const std::size_t step = std::max<std::size_t>(1, ctxs.size() / 25);
    for (std::size_t i = 0; i < ctxs.size(); i += step) {
      std::vector<std::uint32_t> ctx(ctxs[i].begin(), ctxs[i].end());
      double sum = 0;
      for (std::uint32_t w = 1; w < lm.vocab_size(); ++w) sum += lm.prob(w, ctx);
      ASSERT_NEAR(sum, 1.0, 1e-6) << "order " << k;
    }
  }
}

TEST(NGram, ProbabilitiesInUnitInterval) {
  const auto& lm = fixture_lm();
  auto ctxs = lm.observed_contexts(3);
  std::vector<std::uint32_t> ctx(ctxs[0].begin(), ctxs[0].end());
  for (std::uint32_t w = 1; w < lm.vocab_size(); ++w) {
    double p = lm.prob(w, ctx);
    ASSERT_GT(p, 0.0);
    ASSERT_LE(p, 1.0);
  }
}

TEST(NGram, TrainingPerplexityBeatsUniform) {
  auto c = read_conllu(data_path("written.conllu"));
  c.sentences.resize(1000);
  for (int order : {1, 2, 3}) {
    auto lm = train_ngram(c, {order, {}, 1});
    EXPECT_LE(perplexity(lm, c), static_cast<double>(lm.predictable_size()));
  }
}

TEST(NGram, DoublingCorpusKeepsArgmax) {
  std::vector<std::string> lines{"you want it .", "you want the ball .", "do you want it ?", "we see it ."};
  auto once = train_ngram(text_corpus(lines), {2, {}, 1});
  auto doubled_lines = lines;
  doubled_lines.insert(doubled_lines.end(), lines.begin(), lines.end());
  auto twice = train_ngram(text_corpus(doubled_lines), {2, {}, 1});
  for (const auto& prev : {"you", "want", "it", "<s>"}) {
    auto argmax = [&](const NGramLM& lm) {
      std::uint32_t best = 1;
      for (std::uint32_t w = 1; w < lm.vocab_size(); ++w) {
        if (lm.prob(w, {lm.id(prev)}) > lm.prob(best, {lm.id(prev)})) best = w;
      }
      return lm.form(best);
    };
    EXPECT_EQ(argmax(once), argmax(twice)) << prev;
  }
}

TEST(NGram, SerializationRoundTrip) {
  auto lm = train_ngram(text_corpus({"a b c", "b c", "c a b"}), {3, {0.5, 0.6, 0.7}, 1});
  auto back = parse_ngram(format_ngram(lm));
  EXPECT_EQ(format_ngram(back), format_ngram(lm));
  EXPECT_EQ(back.score({"a", "c"}).logprob, lm.score({"a", "c"}).logprob);
}

TEST(ScorePairs, PreferFamiliarContinuation) {
  std::vector<std::string> lines;
  for (int i = 0; i < 20; ++i) lines.push_back("you want it .");
  lines.push_back("a xylophone .");
  auto lm = train_ngram(text_corpus(lines), {3, {}, 2});
  EXPECT_EQ(lm.id("xylophone"), NGramLM::kUnk);
  MinimalPair p{"x", Paradigm::semantic_verb, {"you", "want", "it", "."}, {"you", "want", "xylophone", "."}, 2, {}, {}};
  NGramScorer scorer(lm);
  auto r = score_pairs(scorer, {p});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_GT(r[0].logprob_good, r[0].logprob_bad);
}

TEST(ScorePairs, IdenticalMembersAndRowCount) {
  auto lm = train_ngram(text_corpus({"a b c", "c b a"}));
  NGramScorer scorer(lm);
  std::vector<MinimalPair> pairs;
  for (int i = 0; i < 17; ++i) {
    pairs.push_back({"p" + std::to_string(i), Paradigm::agr_simple, {"a", "b"}, {"a", "b"}, 0, {}, {}});
  }
  auto r = score_pairs(scorer, pairs);
  ASSERT_EQ(r.size(), 17u);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_EQ(r[i].pair_id, pairs[i].pair_id);
    EXPECT_EQ(r[i].logprob_good, r[i].logprob_bad);
  }
  EXPECT_EQ(score_pairs(scorer, pairs), r);
}

TEST(ScoreFiles, RoundTrip) {
  TempDir dir;
  std::vector<SentenceScore> s{{"a:good", -3.25, 4, "", std::nullopt}, {"a:bad", -1e-300, 1, "", std::nullopt}};
  write_scores(s, dir.file("s.tsv"));
  auto back = read_scores(dir.file("s.tsv"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].logprob, -3.25);
  EXPECT_EQ(back[1].logprob, -1e-300);
  EXPECT_EQ(back[1].num_tokens, 1u);
}
