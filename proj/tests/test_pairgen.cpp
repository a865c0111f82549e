#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <set>

#include "helpers.hpp"
#include "verbscope/ingest.hpp"
#include "verbscope/pairgen.hpp"
#include "verbscope/tagger.hpp"

using namespace verbscope;
using namespace vs_test;

namespace {

std::string what(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

AgreementLexicon painter_lexicon() {
  AgreementLexicon lex;
  lex.nouns = {{"painter", "painter", "painters", 20}, {"waiter", "waiter", "waiters", 18}};
  lex.verbs = {{"enjoy", "enjoys", "enjoy", 30}};
  lex.preps = {"in front of"};
  return lex;
}

// Sentence of `n` tokens whose root verb is "walks".
AnnotatedSentence verb_sentence(const std::string& id, std::size_t n) {
  AnnotatedSentence s;
  s.sentence_id = id;
  s.tokens.push_back(tok("she", "PRON", "PRP", "", 1, "nsubj"));
  s.tokens.push_back(tok("walks", "VERB", "VBZ", "walk", std::nullopt, "root"));
  while (s.tokens.size() + 1 < n) s.tokens.push_back(tok("far", "ADV", "RB", "", 1, "advmod"));
  s.tokens.push_back(tok(".", "PUNCT", ".", "", 1, "punct"));
  return s;
}

FrequencyTable eight_verb_table() {
  std::vector<FrequencyTable::Entry> e;
  for (const auto& v : {"walks", "runs", "jumps", "sings", "reads", "cooks", "swims", "talks"}) {
    e.push_back({"VERB", "VBZ", v, 20});
  }
  e.push_back({"VERB", "VBZ", "goes", 200});
  return FrequencyTable::from_entries(e);
}

}  // namespace

TEST(MinimalPair, ValidationRejectsBrokenPairs) {
  MinimalPair p{"p", Paradigm::agr_simple, {"The", "dog", "runs", "."}, {"The", "dogs", "runs", "."}, 1, {}, {}};
  EXPECT_NO_THROW(validate(p));
  auto q = p;
  q.bad[2] = "run";
  EXPECT_THROW(validate(q), Error);
  q = p;
  q.bad.pop_back();
  EXPECT_THROW(validate(q), Error);
  q = p;
  q.diff_index = 2;
  EXPECT_THROW(validate(q), Error);
  q = p;
  q.bad = q.good;
  EXPECT_THROW(validate(q), Error);
}

TEST(SemanticPairs, NineTokenSentenceGivesNone) {
  auto test = corpus_of({verb_sentence("s9", 9)});
  auto r = gen_semantic_pairs(test, eight_verb_table());
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_EQ(r.stats.skipped_length, 1u);
}

TEST(SemanticPairs, SevenAlternativesCappedAtFive) {
  auto test = corpus_of({verb_sentence("s12", 12)});
  auto r = gen_semantic_pairs(test, eight_verb_table());
  ASSERT_EQ(r.pairs.size(), 5u);
  std::set<std::string> subs;
  for (const auto& p : r.pairs) {
    EXPECT_NO_THROW(validate(p));
    EXPECT_EQ(p.diff_index, 1u);
    EXPECT_NE(p.bad[1], "walks");
    EXPECT_NE(p.bad[1], "goes");
    subs.insert(p.bad[1]);
    EXPECT_EQ(p.source_sentence_id, std::optional<std::string>("s12"));
  }
  EXPECT_EQ(subs.size(), 5u);
}

TEST(SemanticPairs, StoolSentenceWithTry) {
  auto test = corpus_of({stool_sentence()});
  auto table = FrequencyTable::from_entries({{"VERB", "VB", "sit", 5}, {"VERB", "VB", "try", 6}});
  auto r = gen_semantic_pairs(test, table);
  ASSERT_EQ(r.pairs.size(), 1u);
  const auto& p = r.pairs[0];
  EXPECT_EQ(join(p.good, " "), "You can sit out here by me on the other stool .");
  EXPECT_EQ(join(p.bad, " "), "You can try out here by me on the other stool .");
  EXPECT_EQ(p.diff_index, 2u);
  EXPECT_EQ(p.meta.at("bin"), "2");
}

TEST(SemanticPairs, ContractOnFixture) {
  auto train = read_conllu(data_path("written.conllu"));
  auto parts = split_corpus(train, SplitSpec::standard());
  auto table = build_frequency_table(parts.train);
  auto r = gen_semantic_pairs(parts.test, table, {5, 10, 30, 3});
  ASSERT_GT(r.pairs.size(), 100u);
  std::map<std::string, std::size_t> per_source;
  std::map<std::string, const AnnotatedSentence*> by_id;
  for (const auto& s : parts.test.sentences) by_id[s.sentence_id] = &s;
  for (const auto& p : r.pairs) {
    ASSERT_NO_THROW(validate(p));
    ASSERT_GE(p.good.size(), 10u);
    ASSERT_LE(p.good.size(), 30u);
    ++per_source[*p.source_sentence_id];
    const auto& orig = by_id.at(*p.source_sentence_id)->tokens[p.diff_index];
    const auto& sub = p.bad[p.diff_index];
    EXPECT_NE(sub, orig.form);
    auto ob = table.bin_of(orig.upos, fine_tag(orig), orig.form);
    auto sb = table.bin_of(orig.upos, fine_tag(orig), sub);
    ASSERT_TRUE(ob && sb);
    EXPECT_EQ(*ob, *sb);
  }
  for (const auto& [_, n] : per_source) EXPECT_LE(n, 5u);
  EXPECT_GT(r.stats.distinct_verb_lemmas, 5u);
  auto again = gen_semantic_pairs(parts.test, table, {5, 10, 30, 3});
  EXPECT_EQ(again.pairs, r.pairs);
}

TEST(AgreementLexicon, PainterEntryAndSingleFormExclusion) {
  auto c = corpus_of({tagged("1", "painter/NOUN/NN painters/NOUN/NNS painter/NOUN/NN"),
                      tagged("2", "dog/NOUN/NN enjoys/VERB/VBZ enjoy/VERB/VBP")});
  c.sentences[0].tokens[1].lemma = "painter";
  c.sentences[1].tokens[1].lemma = "enjoy";
  auto table = build_frequency_table(c);
  auto lemmas = build_lemma_index(c);
  LexiconOptions o;
  o.pct_lo = 0;
  o.pct_hi = 100;
  o.min_entries = 1;
  auto lex = extract_agreement_lexicon(table, lemmas, o);
  ASSERT_EQ(lex.nouns.size(), 1u);
  EXPECT_EQ(lex.nouns[0], (AgreementEntry{"painter", "painter", "painters", 3}));
  ASSERT_EQ(lex.verbs.size(), 1u);
  EXPECT_EQ(lex.verbs[0].singular, "enjoys");
  EXPECT_EQ(lex.verbs[0].plural, "enjoy");
}

TEST(AgreementLexicon, FullBandIncludesEveryDualFormLemma) {
  std::vector<AnnotatedSentence> ss;
  const std::vector<std::pair<std::string, int>> nouns{{"cup", 1}, {"box", 2}, {"hat", 5}, {"pen", 9}};
  int id = 0;
  for (const auto& [n, k] : nouns) {
    for (int i = 0; i < k; ++i) ss.push_back(tagged(std::to_string(id++), n + "/NOUN/NN " + n + "s/NOUN/NNS"));
  }
  ss.push_back(tagged(std::to_string(id++), "sky/NOUN/NN"));
  for (const auto& v : {"run", "sing"}) {
    ss.push_back(tagged(std::to_string(id++), std::string(v) + "s/VERB/VBZ " + v + "/VERB/VBP"));
  }
  auto c = corpus_of(ss);
  for (auto& s : c.sentences) {
    for (auto& t : s.tokens) {
      if (t.xpos == "NNS") t.lemma = t.form.substr(0, t.form.size() - 1);
      if (t.xpos == "VBZ") t.lemma = t.form.substr(0, t.form.size() - 1);
    }
  }
  auto table = build_frequency_table(c);
  auto lemmas = build_lemma_index(c);
  LexiconOptions o{0, 100, 1, 10};
  auto lex = extract_agreement_lexicon(table, lemmas, o);
  std::vector<std::string> got;
  for (const auto& e : lex.nouns) got.push_back(e.lemma);
  EXPECT_EQ(got, (std::vector<std::string>{"pen", "hat", "box", "cup"}));
  EXPECT_EQ(lex.verbs.size(), 2u);

  // Default 50-95 band on the same nouns: frequencies {2,4,10,18},
  // 50th percentile 7, 95th 16.8, so only "hat" (10) survives.
  o.pct_lo = 50;
  o.pct_hi = 95;
  auto banded = extract_agreement_lexicon(table, lemmas, o);
  ASSERT_EQ(banded.nouns.size(), 1u);
  EXPECT_EQ(banded.nouns[0].lemma, "hat");

  o.min_entries = 10;
  EXPECT_NE(what([&] { extract_agreement_lexicon(table, lemmas, o); }).find("lexicon too sparse"),
            std::string::npos);
}

TEST(AgreementPairs, PainterInFrontOfWaiter) {
  AgreementSlots s;
  s.subject = {"painter", "painter", "painters", 1};
  s.noun2 = AgreementEntry{"waiter", "waiter", "waiters", 1};
  s.verb = {"enjoy", "enjoys", "enjoy", 1};
  s.prep = "in front of";
  auto p = make_agreement_pair(Paradigm::agr_pp, s, "that", "x");
  EXPECT_EQ(join(p.good, " "), "The painter in front of the waiter enjoys .");
  EXPECT_EQ(join(p.bad, " "), "The painters in front of the waiter enjoys .");
  EXPECT_EQ(p.diff_index, 1u);
}

TEST(AgreementPairs, GeneratorReproducesPainterShape) {
  auto pairs = gen_agreement_pairs(painter_lexicon(), {Paradigm::agr_pp}, 20, 1);
  ASSERT_EQ(pairs.size(), 20u);
  std::set<std::string> goods;
  for (const auto& p : pairs) {
    goods.insert(join(p.good, " "));
    EXPECT_EQ(p.bad[1], p.good[1] + "s");
  }
  EXPECT_TRUE(goods.count("The painter in front of the waiter enjoys ."));
  for (const auto& g : goods) {
    EXPECT_TRUE(g == "The painter in front of the waiter enjoys ." || g == "The waiter in front of the painter enjoys .")
        << g;
  }
}

TEST(AgreementPairs, TemplatesAndCounts) {
  AgreementLexicon lex;
  for (const auto& n : {"dog", "cat", "bird", "fox"}) lex.nouns.push_back({n, n, std::string(n) + "s", 5});
  for (const auto& v : {"run", "sing", "eat"}) lex.verbs.push_back({v, std::string(v) + "s", v, 5});
  lex.preps = {"near", "behind"};
  std::vector<Paradigm> all(kAgreementParadigms.begin(), kAgreementParadigms.end());
  auto pairs = gen_agreement_pairs(lex, all, 100, 9);
  ASSERT_EQ(pairs.size(), 500u);
  std::map<Paradigm, std::size_t> counts;
  for (const auto& p : pairs) {
    ++counts[p.paradigm];
    ASSERT_NO_THROW(validate(p));
    EXPECT_EQ(p.diff_index, 1u);
    EXPECT_EQ(p.good.front(), "The");
    EXPECT_EQ(p.good.back(), ".");
    EXPECT_EQ(p.bad[1], p.good[1] + "s");
    if (p.paradigm == Paradigm::agr_simple) EXPECT_EQ(p.good.size(), 4u);
    if (p.paradigm == Paradigm::agr_vp_coord) {
      EXPECT_EQ(p.good[3], "and");
      EXPECT_NE(p.good[2], p.good[4]);
    }
    if (p.paradigm == Paradigm::agr_subj_rel || p.paradigm == Paradigm::agr_obj_rel) {
      EXPECT_EQ(p.good[2], "that");
      EXPECT_NE(p.meta.at("subject"), p.meta.at("noun2"));
    }
  }
  for (auto p : all) EXPECT_EQ(counts[p], 100u);
  EXPECT_EQ(gen_agreement_pairs(lex, all, 100, 9), pairs);
  EXPECT_NE(gen_agreement_pairs(lex, all, 100, 10), pairs);
  EXPECT_THROW(gen_agreement_pairs(lex, {Paradigm::semantic_verb}, 1, 1), Error);
  EXPECT_THROW(parse_paradigm("agr-passive"), Error);
}

TEST(PairFiles, RoundTrip) {
  AgreementLexicon lex;
  for (const auto& n : {"dog", "cat", "bird"}) lex.nouns.push_back({n, n, std::string(n) + "s", 5});
  for (const auto& v : {"run", "sing"}) lex.verbs.push_back({v, std::string(v) + "s", v, 5});
  lex.preps = {"in front of"};
  std::vector<Paradigm> all(kAgreementParadigms.begin(), kAgreementParadigms.end());
  auto pairs = gen_agreement_pairs(lex, all, 200, 4);
  pairs[0].source_sentence_id = "sent-1";
  ASSERT_EQ(pairs.size(), 1000u);
  TempDir dir;
  write_pairs(pairs, dir.file("p.jsonl"));
  EXPECT_EQ(read_pairs(dir.file("p.jsonl")), pairs);
  EXPECT_TRUE(parse_pairs("").empty());
}

TEST(PairFiles, TwoDifferencesRejectedWithRecordNumber) {
  std::string text =
      R"({"pair_id":"a","paradigm":"agr-simple","good":"The dog runs .","bad":"The dogs runs .","diff_index":1})"
      "\n"
      R"({"pair_id":"b","paradigm":"agr-simple","good":"The dog runs .","bad":"The dogs run .","diff_index":1})"
      "\n";
  auto msg = what([&] { parse_pairs(text, "pairs.jsonl"); });
  EXPECT_NE(msg.find("pairs.jsonl: record 2"), std::string::npos) << msg;
  EXPECT_NE(what([] { parse_pairs("{not json}\n"); }).find("record 1"), std::string::npos);
}
