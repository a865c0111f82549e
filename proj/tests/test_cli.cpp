#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "helpers.hpp"
#include "verbscope/analysis.hpp"
#include "verbscope/eval.hpp"
#include "verbscope/ingest.hpp"
#include "verbscope/pairgen.hpp"
#include "verbscope/stats.hpp"

using namespace verbscope;
using namespace vs_test;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run cli(const TempDir& dir, const std::string& args) {
  auto log = dir.file("cli.log");
  std::string cmd = std::string("'") + VERBSCOPE_CLI + "' " + args + " > '" + log + "' 2>&1";
  int rc = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = fs::exists(log) ? read_file(log) : "";
  return r;
}

std::string q(const std::string& s) { return "'" + s + "'"; }

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  TempDir dir;
  EXPECT_EQ(cli(dir, "").status, 2);
  EXPECT_EQ(cli(dir, "no-such-command").status, 2);
  EXPECT_EQ(cli(dir, "train-lm --in x.conllu").status, 2);
  EXPECT_EQ(cli(dir, "run").status, 2);
  EXPECT_EQ(cli(dir, "score --pairs x --out y").status, 2);
  EXPECT_EQ(cli(dir, "--help").status, 0);
}

TEST(Cli, RuntimeErrorsExitOne) {
  TempDir dir;
  auto r = cli(dir, "train-lm --in " + q(dir.file("missing.conllu")) + " --out " + q(dir.file("m")));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("error:"), std::string::npos);
}

TEST(Cli, RunHelpListsConfigKeys) {
  TempDir dir;
  auto r = cli(dir, "run --help");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("n_per_paradigm"), std::string::npos);
  EXPECT_NE(r.out.find("checkpoints"), std::string::npos);
}

TEST(Cli, Pipeline) {
  TempDir dir;
  auto conv = read_conllu(data_path("conversational.conllu"));
  conv.sentences.resize(3000);
  write_corpus(conv, dir.file("cdl.conllu"), CorpusFormat::conllu);

  auto r = cli(dir, "ingest --in " + q(dir.file("cdl.conllu")) + " --split 2/3,1/6,1/6 --out-dir " + q(dir.file("split")));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("train 2000, dev 500, test 500"), std::string::npos) << r.out;

  const auto train = q(dir.file("split/train.conllu")), test = q(dir.file("split/test.conllu"));
  r = cli(dir, "stats --in " + train + " --csv " + q(dir.file("stats.csv")) + " --table-out " + q(dir.file("table.tsv")));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(read_file(dir.file("stats.csv")).rfind(kStatsHeader, 0), 0u);

  r = cli(dir, "perturb --seed 4 --in " + train + " --condition SHUFFLE.ORDER --out " + q(dir.file("shuf.conllu")) +
                   " --report " + q(dir.file("rep.json")));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(read_conllu(dir.file("shuf.conllu")).sentences.size(), 2000u);

  r = cli(dir, "train-lm --in " + train + " --out " + q(dir.file("lm.txt")));
  ASSERT_EQ(r.status, 0) << r.out;

  r = cli(dir, "genpairs semantic --test " + test + " --table " + q(dir.file("table.tsv")) + " --out " +
                   q(dir.file("sem.jsonl")) + " --len-min 6");
  ASSERT_EQ(r.status, 0) << r.out;
  auto pairs = read_pairs(dir.file("sem.jsonl"));
  ASSERT_FALSE(pairs.empty());

  r = cli(dir, "score --pairs " + q(dir.file("sem.jsonl")) + " --lm " + q(dir.file("lm.txt")) + " --out " +
                   q(dir.file("scores.tsv")));
  ASSERT_EQ(r.status, 0) << r.out;

  r = cli(dir, "eval --pairs " + q(dir.file("sem.jsonl")) + " --scores " + q(dir.file("scores.tsv")) +
                   " --train-domain cdl --eval-domain cdl --condition ORIGINAL --checkpoint final --out " +
                   q(dir.file("results.csv")));
  ASSERT_EQ(r.status, 0) << r.out;
  auto rows = read_results(dir.file("results.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows.back().n, pairs.size());

  const std::string ext = std::string(VERBSCOPE_ECHO_SCORER);
  r = cli(dir, "score --pairs " + q(dir.file("sem.jsonl")) + " --external \"'" + ext + "' ok\" --out " +
                   q(dir.file("ext.tsv")));
  ASSERT_EQ(r.status, 0) << r.out;
  r = cli(dir, "score --pairs " + q(dir.file("sem.jsonl")) + " --external \"'" + ext + "' positive\" --out " +
                   q(dir.file("bad.tsv")));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("logprob must be finite"), std::string::npos) << r.out;
}

TEST(Cli, RegressTrajectoryAndPlot) {
  TempDir dir;
  std::string csv = std::string(kResultsHeader) + "\n";
  const double acc[2][2] = {{0.9, 0.75}, {0.8, 0.7}};
  const char* ds[] = {"cdl", "wiki"};
  const char* cs[] = {"ORIGINAL", "SHUFFLE.ORDER"};
  for (int rep = 0; rep < 3; ++rep) {
    for (int d = 0; d < 2; ++d) {
      for (int c = 0; c < 2; ++c) {
        csv += std::string(ds[d]) + "," + ds[d] + "," + cs[c] + ",final,semantic-verb," +
               format_double(acc[d][c] + 0.01 * rep) + ",100,0\n";
      }
    }
  }
  for (const auto* ck : {"0.25", "0.5", "1"}) {
    double x = checkpoint_value(ck);
    csv += std::string("cdl,cdl,ORIGINAL,") + ck + ",semantic-verb," + format_double(0.5 + 0.4 * x) + ",100,0\n";
    csv += std::string("cdl,cdl,ORIGINAL,") + ck + ",agreement," + format_double(0.5 + 0.2 * x) + ",100,0\n";
  }
  write_file(dir.file("results.csv"), csv);

  auto r = cli(dir, "regress --in " + q(dir.file("results.csv")) + " --out " + q(dir.file("reg.csv")));
  ASSERT_EQ(r.status, 0) << r.out;
  auto reg = read_file(dir.file("reg.csv"));
  EXPECT_NE(reg.find("Dataset[wiki]:Condition[SHUFFLE.ORDER]"), std::string::npos);

  r = cli(dir, "trajectory --in " + q(dir.file("results.csv")) + " --domain cdl --out " + q(dir.file("traj.csv")) +
                   " --chart " + q(dir.file("traj.svg")));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(read_file(dir.file("traj.csv")).find("1,0.9,0.7,"), std::string::npos);
  EXPECT_NE(r.out.find("semantic reaches 0.75 at 1; syntactic at never"), std::string::npos) << r.out;

  r = cli(dir, "plot --in " + q(dir.file("traj.csv")) + " --x checkpoint --y semantic_acc syntactic_acc --out " +
                   q(dir.file("plot.svg")));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(read_file(dir.file("plot.svg")).rfind("<?xml", 0), 0u);
}

TEST(Cli, RunAndReplay) {
  TempDir dir;
  auto conv = read_conllu(data_path("conversational.conllu"));
  conv.sentences.resize(1200);
  write_corpus(conv, dir.file("cdl.conllu"), CorpusFormat::conllu);
  write_file(dir.file("exp.toml"), "corpora = cdl:cdl.conllu\nconditions = ORIGINAL\nlen_min = 6\nn_per_paradigm = 10\nout = out\n");
  auto r = cli(dir, "run --quiet --config " + q(dir.file("exp.toml")));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir.file("out/results.csv")));
  r = cli(dir, "run --quiet --replay " + q(dir.file("out/manifest.json")) + " --out " + q(dir.file("again")));
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(read_file(dir.file("again/results.csv")), read_file(dir.file("out/results.csv")));
  r = cli(dir, "run --quiet --config " + q(dir.file("exp.toml")) + " --set bogus=1");
  EXPECT_NE(r.status, 0);
}
