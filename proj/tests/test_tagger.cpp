#include <gtest/gtest.h>

#include "helpers.hpp"
#include "verbscope/ingest.hpp"
#include "verbscope/rng.hpp"
#include "verbscope/tagger.hpp"

using namespace verbscope;
using namespace vs_test;

namespace {

Corpus unique_tag_corpus() {
  return corpus_of({tagged("1", "the/DET/DT dog/NOUN/NN runs/VERB/VBZ ./PUNCT/."),
                    tagged("2", "a/DET/DT cat/NOUN/NN sleeps/VERB/VBZ ./PUNCT/."),
                    tagged("3", "dogs/NOUN/NNS run/VERB/VBP quickly/ADV/RB ./PUNCT/."),
                    tagged("4", "big/ADJ/JJ cats/NOUN/NNS sleep/VERB/VBP ./PUNCT/.")});
}

const TaggerModel& bundled() {
  static const TaggerModel m = read_tagger(data_path("tagger.model"));
  return m;
}

}  // namespace

TEST(TrainTagger, MemorizesUniqueTagCorpus) {
  auto r = train_tagger(unique_tag_corpus(), {5, 1, 0.0});
  EXPECT_DOUBLE_EQ(r.train_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(tagging_accuracy(r.model, unique_tag_corpus()), 1.0);
}

TEST(TrainTagger, SameSeedSameModel) {
  auto a = train_tagger(unique_tag_corpus(), {3, 9, 0.0});
  auto b = train_tagger(unique_tag_corpus(), {3, 9, 0.0});
  EXPECT_EQ(format_tagger(a.model), format_tagger(b.model));
}

TEST(TrainTagger, ZeroEpochsFallsBackToMostFrequentTag) {
  auto r = train_tagger(unique_tag_corpus(), {0, 1, 0.0});
  EXPECT_TRUE(r.model.weights.empty());
  // Four sentence-final periods make PUNCT/. the most frequent tag.
  auto s = tag(r.model, tagged("x", "dog/X/X runs/X/X"));
  for (const auto& t : s.tokens) EXPECT_EQ(t.upos + "/" + t.xpos, "PUNCT/.");
}

TEST(TrainTagger, UntaggedCorpusErrors) {
  auto c = corpus_of({tagged("1", "a/UNK/UNK")});
  EXPECT_THROW(train_tagger(c, {}), Error);
}

TEST(TrainTagger, HeldoutAccuracyReported) {
  auto c = unique_tag_corpus();
  auto r = train_tagger(c, {5, 1, 0.25});
  ASSERT_TRUE(r.heldout_accuracy.has_value());
  EXPECT_GE(*r.heldout_accuracy, 0.0);
  EXPECT_LE(*r.heldout_accuracy, 1.0);
}

TEST(Tag, OverwritesTagsAndKeepsEverythingElse) {
  auto s = tagged("t", "the/PRON/XX cat/PRON/XX sat/PRON/XX");
  s.tokens[2].deprel = "root";
  s.tokens[0].head = 2;
  auto out = tag(bundled(), s);
  ASSERT_EQ(out.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(out.tokens[i].form, s.tokens[i].form);
    EXPECT_EQ(out.tokens[i].head, s.tokens[i].head);
    EXPECT_EQ(out.tokens[i].deprel, s.tokens[i].deprel);
    EXPECT_NE(out.tokens[i].upos, "PRON");
  }
}

TEST(Tag, BundledModelFixtureOutput) {
  AnnotatedSentence s;
  for (const auto& w : split_ws("You can sit out here by me on the other stool .")) s.tokens.push_back(tok(w, "", ""));
  auto out = tag(bundled(), s);
  std::vector<std::string> got;
  for (const auto& t : out.tokens) got.push_back(t.upos + "/" + t.xpos);
  EXPECT_EQ(got, (std::vector<std::string>{"PRON/PRP", "AUX/MD", "VERB/VB", "ADV/RB", "ADV/RB", "ADP/IN",
                                           "PRON/PRP", "ADP/IN", "DET/DT", "ADJ/JJ", "NOUN/NN", "PUNCT/."}));
}

TEST(Tag, EmptyWeightModelUsesGlobalMostFrequentTag) {
  TaggerModel m;
  m.tag_set = {{"NOUN", "NN"}, {"VERB", "VB"}};
  m.tag_counts = {10, 3};
  auto out = tag(m, tagged("e", "x/A/A y/B/B"));
  for (const auto& t : out.tokens) EXPECT_EQ(t.upos, "NOUN");
}

TEST(Tag, NeverChangesCountOrForms) {
  auto gold = read_conllu(data_path("written.conllu"));
  for (std::size_t i = 0; i < 200; ++i) {
    const auto& s = gold.sentences[i];
    auto out = tag(bundled(), s);
    ASSERT_EQ(out.forms(), s.forms());
  }
}

TEST(TaggerModel, SerializationRoundTrip) {
  auto r = train_tagger(unique_tag_corpus(), {2, 1, 0.0});
  auto text = format_tagger(r.model);
  auto back = parse_tagger(text);
  EXPECT_EQ(format_tagger(back), text);
  EXPECT_THROW(parse_tagger("not a model\n"), Error);
  EXPECT_THROW(parse_tagger("verbscope-tagger\t1\n"), Error);
}

TEST(HeuristicRoot, ParsedVerbRoot) {
  auto s = stool_sentence();
  EXPECT_EQ(heuristic_root(s), std::optional<std::size_t>(2));
  auto r = find_root_verb(s);
  ASSERT_TRUE(r);
  EXPECT_FALSE(r->heuristic);
}

TEST(HeuristicRoot, CopularNounRootIsNone) {
  auto s = tagged("c", "he/PRON/PRP is/AUX/VBZ teacher/NOUN/NN");
  s.tokens[2].deprel = "root";
  s.tokens[0].head = 2;
  s.tokens[0].deprel = "nsubj";
  s.tokens[1].head = 2;
  s.tokens[1].deprel = "cop";
  EXPECT_FALSE(heuristic_root(s).has_value());
}

TEST(HeuristicRoot, UntaggedUnparsedIsNone) {
  AnnotatedSentence s;
  for (const auto& w : {"you", "want", "it"}) s.tokens.push_back(tok(w, "UNK", "UNK"));
  EXPECT_FALSE(heuristic_root(s).has_value());
}

TEST(HeuristicRoot, LeftmostVerbWithoutDependencies) {
  auto s = tagged("h", "I/PRON/PRP want/VERB/VBP to/PART/TO go/VERB/VB");
  auto r = find_root_verb(s);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->index, 1u);
  EXPECT_TRUE(r->heuristic);
}

TEST(HeuristicRoot, AlwaysIndexesAVerb) {
  const std::vector<std::string> tags{"VERB", "NOUN", "AUX", "PRON", "ADJ"};
  Rng rng(5);
  for (int i = 0; i < 3000; ++i) {
    AnnotatedSentence s;
    auto n = 1 + rng.below(8);
    for (std::uint64_t k = 0; k < n; ++k) s.tokens.push_back(tok("w", tags[rng.below(tags.size())], "X"));
    if (rng.below(2)) s.tokens[rng.below(n)].deprel = "root";
    auto r = heuristic_root(s);
    if (r) ASSERT_EQ(s.tokens[*r].upos, "VERB");
  }
}
