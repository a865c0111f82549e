// verbscope command-line interface.
//
// Exit status: 0 success, 1 failure (including failed experiment cells),
// 2 usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "verbscope.hpp"

using namespace verbscope;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string config;
};

std::string detect_format(const std::string& path, const std::string& format) {
  if (!format.empty() && format != "auto") return format;
  auto ext = fs::path(path).extension().string();
  if (ext == ".conllu") return "conllu";
  if (ext == ".cha") return "chat";
  return "text";
}

// conllu, chat (cleaned CHILDES transcript) or text (one sentence per line).
Corpus load_corpus(const std::string& path, const std::string& format = "auto",
                   const std::string& tagger_path = {}) {
  auto fmt = detect_format(path, format);
  Corpus c;
  if (fmt == "conllu") {
    c = read_conllu(path);
  } else if (fmt == "chat" || fmt == "text") {
    auto lines = read_lines(path);
    if (fmt == "chat") lines = clean_childes(lines);
    c = corpus_from_lines(lines, path);
    c.domain = fs::path(path).stem().string();
    if (!tagger_path.empty()) c = tag_corpus(read_tagger(tagger_path), std::move(c));
  } else {
    throw Error("unknown input format '" + fmt + "'");
  }
  validate(c);
  return c;
}

// A frequency table from a saved table or from an annotated corpus.
FrequencyTable load_table(const std::string& path) {
  if (detect_format(path, "auto") == "conllu") return build_frequency_table(read_conllu(path));
  return read_frequency_table(path);
}

void print_rows(const std::vector<ResultRow>& rows) {
  for (const auto& r : rows) {
    std::cout << r.paradigm << "\t" << format_fixed(r.accuracy, 4) << "\t(n=" << r.n << ", ties=" << r.ties << ")\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verbscope: verb-learning minimal-pair experiments with n-gram models"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads")->capture_default_str();
  app.add_option("--config", g.config, "experiment config file (key = value lines)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Read a corpus (CoNLL-U, CHAT or text), clean and optionally split it");
  std::string in_path, in_format = "auto", out_path, out_format = "conllu", split_arg, out_dir, tagger_path;
  bool shuffle_split = false;
  ingest->add_option("--in", in_path, "input file")->required();
  ingest->add_option("--format", in_format, "auto, conllu, chat or text")->capture_default_str();
  ingest->add_option("--tagger", tagger_path, "tag text input with this model");
  ingest->add_option("--out", out_path, "write the whole corpus here");
  ingest->add_option("--out-format", out_format, "conllu or text")->capture_default_str();
  ingest->add_option("--split", split_arg, "train,dev,test proportions, e.g. 2/3,1/6,1/6");
  ingest->add_option("--out-dir", out_dir, "directory for train/dev/test files when splitting");
  ingest->add_flag("--shuffle", shuffle_split, "shuffle sentences (with --seed) before splitting");

  // train-tagger
  auto* train_tag = app.add_subcommand("train-tagger", "Train the averaged-perceptron tagger on CoNLL-U");
  std::string model_path;
  int epochs = 5;
  double heldout = 0.0;
  train_tag->add_option("--in", in_path, "annotated CoNLL-U")->required();
  train_tag->add_option("--out", model_path, "model file")->required();
  train_tag->add_option("--epochs", epochs, "training epochs")->capture_default_str();
  train_tag->add_option("--heldout", heldout, "trailing fraction held out for accuracy")->capture_default_str();

  // tag
  auto* tag_cmd = app.add_subcommand("tag", "Tag plain text (one sentence per line)");
  tag_cmd->add_option("--model", model_path, "tagger model")->required();
  tag_cmd->add_option("--in", in_path, "text input")->required();
  tag_cmd->add_option("--out", out_path, "CoNLL-U output")->required();

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Type-token ratios and sentence lengths");
  std::vector<std::string> inputs;
  std::string csv_out, table_out;
  stats_cmd->add_option("--in", inputs, "corpus files")->required();
  stats_cmd->add_option("--tagger", tagger_path, "tag text input with this model");
  stats_cmd->add_option("--csv", csv_out, "also write CSV here");
  stats_cmd->add_option("--table-out", table_out, "write the frequency table of the (single) input here");

  // perturb
  auto* perturb_cmd = app.add_subcommand("perturb", "Apply ORIGINAL, REPLACE.WORD or SHUFFLE.ORDER to a corpus");
  std::string condition_arg, table_path, report_path;
  bool include_propn = false, pin_punct = false;
  perturb_cmd->add_option("--in", in_path, "annotated corpus")->required();
  perturb_cmd->add_option("--condition", condition_arg, "ORIGINAL, REPLACE.WORD or SHUFFLE.ORDER")->required();
  perturb_cmd->add_option("--table", table_path, "frequency table (TSV) or CoNLL-U; default: the input itself");
  perturb_cmd->add_option("--out", out_path, "output corpus")->required();
  perturb_cmd->add_option("--out-format", out_format, "conllu or text")->capture_default_str();
  perturb_cmd->add_option("--report", report_path, "write the perturbation report (JSON)");
  perturb_cmd->add_flag("--include-propn", include_propn, "treat PROPN as replaceable");
  perturb_cmd->add_flag("--pin-final-punct", pin_punct, "keep sentence-final punctuation in place");

  // train-lm
  auto* train_lm = app.add_subcommand("train-lm", "Train an interpolated Kneser-Ney n-gram model");
  int order = 3;
  double discount = 0.75;
  std::uint64_t min_count = 1;
  train_lm->add_option("--in", in_path, "training corpus")->required();
  train_lm->add_option("--out", model_path, "model file")->required();
  train_lm->add_option("--order", order, "n-gram order")->capture_default_str();
  train_lm->add_option("--discount", discount, "discount for every order")->capture_default_str();
  train_lm->add_option("--min-count", min_count, "forms seen fewer times map to <unk>")->capture_default_str();

  // genpairs
  auto* genpairs = app.add_subcommand("genpairs", "Generate minimal pairs");
  genpairs->require_subcommand(1);
  auto* gen_sem = genpairs->add_subcommand("semantic", "Root-verb substitution pairs from a test split");
  std::size_t max_alts = 5, len_min = 10, len_max = 30, n_per = 100;
  gen_sem->add_option("--test", in_path, "annotated test split")->required();
  gen_sem->add_option("--table", table_path, "training frequency table (TSV) or training CoNLL-U")->required();
  gen_sem->add_option("--out", out_path, "pairs (JSONL)")->required();
  gen_sem->add_option("--max-alts", max_alts, "pairs per source sentence")->capture_default_str();
  gen_sem->add_option("--len-min", len_min, "minimum sentence length")->capture_default_str();
  gen_sem->add_option("--len-max", len_max, "maximum sentence length")->capture_default_str();
  auto* gen_agr = genpairs->add_subcommand("agreement", "Subject-verb agreement pairs from a training lexicon");
  std::vector<std::string> paradigms;
  double pct_lo = 50, pct_hi = 95;
  std::size_t min_entries = 10;
  gen_agr->add_option("--train", in_path, "annotated training split")->required();
  gen_agr->add_option("--out", out_path, "pairs (JSONL)")->required();
  gen_agr->add_option("--n", n_per, "pairs per paradigm")->capture_default_str();
  gen_agr->add_option("--paradigms", paradigms, "subset of agr-simple agr-pp agr-vp-coord agr-subj-rel agr-obj-rel");
  gen_agr->add_option("--pct-lo", pct_lo, "lower frequency percentile")->capture_default_str();
  gen_agr->add_option("--pct-hi", pct_hi, "upper frequency percentile")->capture_default_str();
  gen_agr->add_option("--min-entries", min_entries, "minimum nouns and verbs in the lexicon")->capture_default_str();

  // score
  auto* score_cmd = app.add_subcommand("score", "Score both members of every pair");
  std::string lm_path, external_cmd, checkpoint;
  double timeout_s = 300;
  score_cmd->add_option("--pairs", in_path, "pairs (JSONL)")->required();
  score_cmd->add_option("--out", out_path, "scores (TSV: id, logprob, num_tokens)")->required();
  auto* lm_opt = score_cmd->add_option("--lm", lm_path, "n-gram model file");
  auto* ext_opt = score_cmd->add_option("--external", external_cmd, "shell command speaking the JSONL protocol");
  lm_opt->excludes(ext_opt);
  score_cmd->add_option("--timeout", timeout_s, "external scorer timeout in seconds")->capture_default_str();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Pair accuracy from pair and score files");
  std::string scores_path;
  EvalLabels labels;
  bool append = false;
  eval_cmd->add_option("--pairs", in_path, "pairs (JSONL)")->required();
  eval_cmd->add_option("--scores", scores_path, "scores (TSV)")->required();
  eval_cmd->add_option("--out", out_path, "results CSV");
  eval_cmd->add_flag("--append", append, "append rows to an existing results CSV");
  eval_cmd->add_option("--train-domain", labels.train_domain, "label");
  eval_cmd->add_option("--eval-domain", labels.eval_domain, "label");
  eval_cmd->add_option("--condition", labels.condition, "label");
  eval_cmd->add_option("--checkpoint", labels.checkpoint, "label");

  // regress
  auto* regress_cmd = app.add_subcommand("regress", "OLS of accuracy on Dataset x Condition");
  std::string ref_dataset, ref_condition = "ORIGINAL", paradigm = "semantic-verb", cond_b = "SHUFFLE.ORDER";
  regress_cmd->add_option("--in", in_path, "results CSV (optionally with a seed column)")->required();
  regress_cmd->add_option("--out", out_path, "regression CSV");
  regress_cmd->add_option("--ref-dataset", ref_dataset, "reference dataset (default cdl if present, else first)");
  regress_cmd->add_option("--ref-condition", ref_condition, "reference condition")->capture_default_str();
  regress_cmd->add_option("--contrast", cond_b, "condition compared against the reference")->capture_default_str();
  regress_cmd->add_option("--paradigm", paradigm, "paradigm rows to use")->capture_default_str();
  regress_cmd->add_option("--checkpoint", checkpoint, "checkpoint rows to use (default: final)");

  // trajectory
  auto* traj_cmd = app.add_subcommand("trajectory", "Semantic vs syntactic accuracy across checkpoints");
  std::string domain, sem_paradigm = "semantic-verb", syn_paradigm = "agreement", chart_path;
  double threshold = 0.75;
  traj_cmd->add_option("--in", in_path, "results CSV")->required();
  traj_cmd->add_option("--domain", domain, "train (and eval) domain")->required();
  traj_cmd->add_option("--semantic", sem_paradigm, "semantic paradigm name")->capture_default_str();
  traj_cmd->add_option("--syntactic", syn_paradigm, "syntactic paradigm name")->capture_default_str();
  traj_cmd->add_option("--threshold", threshold, "accuracy threshold for the first-reached summary")->capture_default_str();
  traj_cmd->add_option("--out", out_path, "trajectory CSV");
  traj_cmd->add_option("--chart", chart_path, "SVG chart");

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "Line chart (SVG) from CSV columns");
  std::string x_col, title;
  std::vector<std::string> y_cols;
  plot_cmd->add_option("--in", in_path, "CSV input")->required();
  plot_cmd->add_option("--x", x_col, "x column")->required();
  plot_cmd->add_option("--y", y_cols, "one or more y columns")->required();
  plot_cmd->add_option("--out", out_path, "SVG output")->required();
  plot_cmd->add_option("--title", title, "chart title");

  // run
  std::string keys_help = "Run the full experiment grid from --config\n\nConfig keys:\n";
  for (const auto& [k, h] : config_keys()) keys_help += "  " + k + ": " + h + "\n";
  auto* run_cmd = app.add_subcommand("run", keys_help);
  std::vector<std::string> overrides;
  std::string replay_path;
  bool quiet = false;
  run_cmd->add_option("--set", overrides, "override a config key (key=value), repeatable");
  run_cmd->add_option("--out", out_dir, "output directory (overrides the config)");
  run_cmd->add_option("--replay", replay_path, "re-run a manifest.json and verify every output hash");
  run_cmd->add_flag("--quiet", quiet, "no progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) {
      auto corpus = load_corpus(in_path, in_format, tagger_path);
      auto fmt = out_format == "text" ? CorpusFormat::text : CorpusFormat::conllu;
      if (!out_path.empty()) write_corpus(corpus, out_path, fmt);
      if (!split_arg.empty()) {
        if (out_dir.empty()) throw Error("--split needs --out-dir");
        fs::create_directories(out_dir);
        auto parts = split_corpus(corpus, SplitSpec::parse(split_arg), {shuffle_split, g.seed});
        auto ext = fmt == CorpusFormat::text ? ".txt" : ".conllu";
        write_corpus(parts.train, out_dir + "/train" + ext, fmt);
        write_corpus(parts.dev, out_dir + "/dev" + ext, fmt);
        write_corpus(parts.test, out_dir + "/test" + ext, fmt);
        std::cout << "train " << parts.train.sentences.size() << ", dev " << parts.dev.sentences.size() << ", test "
                  << parts.test.sentences.size() << " sentences\n";
      }
      std::cout << corpus.sentences.size() << " sentences, " << corpus.token_count() << " tokens\n";
    } else if (*train_tag) {
      auto r = train_tagger(read_conllu(in_path), {epochs, g.seed, heldout});
      write_tagger(r.model, model_path);
      std::cout << "train accuracy " << format_fixed(r.train_accuracy, 4);
      if (r.heldout_accuracy) std::cout << ", held-out accuracy " << format_fixed(*r.heldout_accuracy, 4);
      std::cout << "\n";
    } else if (*tag_cmd) {
      auto corpus = read_plaintext(in_path);
      auto model = read_tagger(model_path);
      write_corpus(tag_corpus(model, std::move(corpus)), out_path, CorpusFormat::conllu);
    } else if (*stats_cmd) {
      std::vector<CorpusStats> rows;
      for (const auto& p : inputs) {
        auto c = load_corpus(p, "auto", tagger_path);
        auto s = compute_stats(c, g.threads);
        for (const auto& w : s.warnings) std::cerr << "warning: " << c.domain << ": " << w << "\n";
        rows.push_back(std::move(s));
        if (!table_out.empty()) {
          if (inputs.size() != 1) throw Error("--table-out needs exactly one input");
          write_frequency_table(build_frequency_table(c), table_out);
        }
      }
      std::cout << format_stats_table(rows);
      if (!csv_out.empty()) write_file(csv_out, format_stats_csv(rows));
    } else if (*perturb_cmd) {
      auto corpus = load_corpus(in_path);
      auto cond = parse_condition(condition_arg);
      std::optional<FrequencyTable> table;
      if (cond == Condition::replace_word) table = table_path.empty() ? build_frequency_table(corpus) : load_table(table_path);
      PerturbOptions po{include_propn, pin_punct, g.threads};
      auto r = perturb_corpus(corpus, cond, table ? &*table : nullptr, g.seed, po);
      write_corpus(r.corpus, out_path, out_format == "text" ? CorpusFormat::text : CorpusFormat::conllu);
      if (!report_path.empty()) write_report(report_path, r.report);
      std::cout << format_report(r.report);
    } else if (*train_lm) {
      NGramOptions o;
      o.order = order;
      o.discounts.assign(static_cast<std::size_t>(std::max(order, 1)), discount);
      o.min_count_unk = min_count;
      auto lm = train_ngram(load_corpus(in_path), o);
      write_ngram(lm, model_path);
      std::cout << "vocabulary " << lm.vocab_size() << ", order " << lm.order() << "\n";
    } else if (*gen_sem) {
      auto test = load_corpus(in_path);
      auto table = load_table(table_path);
      auto r = gen_semantic_pairs(test, table, {max_alts, len_min, len_max, g.seed});
      write_pairs(r.pairs, out_path);
      const auto& s = r.stats;
      std::cout << r.pairs.size() << " pairs from " << s.used << " of " << s.sentences << " sentences"
                << " (skipped: length " << s.skipped_length << ", no root verb " << s.skipped_no_root
                << ", unseen verb " << s.skipped_unseen_verb << ", empty bin " << s.skipped_empty_bin
                << "; heuristic roots " << s.heuristic_roots << "; verb lemmas " << s.distinct_verb_lemmas << ")\n";
    } else if (*gen_agr) {
      auto train = load_corpus(in_path);
      auto table = build_frequency_table(train);
      LexiconOptions lo;
      lo.pct_lo = pct_lo;
      lo.pct_hi = pct_hi;
      lo.min_entries = min_entries;
      auto lex = extract_agreement_lexicon(table, build_lemma_index(train), lo);
      std::vector<Paradigm> ps;
      for (const auto& p : paradigms) ps.push_back(parse_paradigm(p));
      if (ps.empty()) ps.assign(kAgreementParadigms.begin(), kAgreementParadigms.end());
      auto pairs = gen_agreement_pairs(lex, ps, n_per, g.seed);
      write_pairs(pairs, out_path);
      std::cout << pairs.size() << " pairs; lexicon " << lex.nouns.size() << " nouns, " << lex.verbs.size()
                << " verbs, " << lex.preps.size() << " prepositions\n";
    } else if (*score_cmd) {
      if (lm_path.empty() == external_cmd.empty()) throw CLI::RequiredError("exactly one of --lm or --external");
      auto pairs = read_pairs(in_path);
      std::vector<SentenceScore> scores;
      if (!lm_path.empty()) {
        auto lm = read_ngram(lm_path);
        NGramScorer s(lm);
        scores = s.score(pair_requests(pairs));
      } else {
        ExternalScorer s(external_cmd, std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000)));
        scores = s.score(pair_requests(pairs));
      }
      write_scores(scores, out_path);
      std::cout << scores.size() << " sentences scored\n";
    } else if (*eval_cmd) {
      auto pairs = read_pairs(in_path);
      auto scored = assemble_pair_scores(pairs, read_scores(scores_path));
      auto r = evaluate(scored, paradigm_index(pairs), labels);
      auto rows = result_rows(r);
      print_rows(rows);
      if (!out_path.empty()) {
        if (append && fs::exists(out_path)) {
          std::string text;
          for (const auto& row : rows) text += format_result_row(row) + "\n";
          auto existing = read_file(out_path);
          write_file(out_path, existing + text);
        } else {
          write_file(out_path, format_results(rows));
        }
      }
    } else if (*regress_cmd) {
      auto t = read_csv(in_path);
      auto rows = parse_results(t);
      std::vector<Observation> obs;
      std::vector<std::string> order_seen;
      const std::string ck = checkpoint.empty() ? "final" : checkpoint;
      for (const auto& r : rows) {
        if (r.paradigm != paradigm || r.labels.checkpoint != ck || r.labels.train_domain != r.labels.eval_domain) continue;
        if (r.labels.condition != ref_condition && r.labels.condition != cond_b) continue;
        obs.push_back({r.accuracy, r.labels.train_domain, r.labels.condition});
        if (std::find(order_seen.begin(), order_seen.end(), r.labels.train_domain) == order_seen.end()) {
          order_seen.push_back(r.labels.train_domain);
        }
      }
      if (obs.empty()) throw Error("no in-domain '" + paradigm + "' rows at checkpoint '" + ck + "' in " + in_path);
      OlsOptions oo;
      oo.reference_condition = ref_condition;
      oo.reference_dataset = ref_dataset;
      if (oo.reference_dataset.empty()) {
        oo.reference_dataset = std::find(order_seen.begin(), order_seen.end(), "cdl") != order_seen.end()
                                   ? "cdl"
                                   : order_seen.front();
      }
      auto res = ols_interaction(obs, oo);
      std::cout << format_regression_table(res);
      if (!out_path.empty()) write_file(out_path, format_regression_csv(res));
    } else if (*traj_cmd) {
      auto rows = read_results(in_path);
      std::map<std::string, std::vector<double>> sem, syn;
      for (const auto& r : rows) {
        if (r.labels.train_domain != domain || r.labels.eval_domain != domain || r.labels.checkpoint == "final") continue;
        if (r.paradigm == sem_paradigm) sem[r.labels.checkpoint].push_back(r.accuracy);
        if (r.paradigm == syn_paradigm) syn[r.labels.checkpoint].push_back(r.accuracy);
      }
      auto mean = [](const std::map<std::string, std::vector<double>>& m) {
        std::map<std::string, double> out;
        for (const auto& [k, v] : m) {
          double s = 0;
          for (double x : v) s += x;
          out[k] = s / static_cast<double>(v.size());
        }
        return out;
      };
      auto t = trajectory(mean(sem), mean(syn), threshold);
      auto csv = format_trajectory_csv(t);
      std::cout << csv;
      std::cout << "semantic reaches " << threshold << " at " << t.semantic_first.value_or("never")
                << "; syntactic at " << t.syntactic_first.value_or("never") << "\n";
      if (!out_path.empty()) write_file(out_path, csv);
      if (!chart_path.empty()) {
        ChartSeries a{domain + " semantic", {}}, b{domain + " syntactic", {}};
        for (const auto& r : t.rows) {
          a.points.emplace_back(checkpoint_value(r.checkpoint), r.semantic_accuracy);
          b.points.emplace_back(checkpoint_value(r.checkpoint), r.syntactic_accuracy);
        }
        emit_chart({a, b}, chart_path, {domain, "checkpoint", "accuracy"});
      }
    } else if (*plot_cmd) {
      auto t = read_csv(in_path);
      auto xc = t.column(x_col);
      std::vector<ChartSeries> series;
      for (const auto& y : y_cols) {
        auto yc = t.column(y);
        ChartSeries s{y, {}};
        for (const auto& row : t.rows) {
          if (row[yc] == "NA" || row[yc] == "NONE" || row[yc].empty()) continue;
          s.points.emplace_back(parse_double(row[xc]), parse_double(row[yc]));
        }
        series.push_back(std::move(s));
      }
      emit_chart(series, out_path, {title, x_col, y_cols.size() == 1 ? y_cols.front() : "value"});
    } else if (*run_cmd) {
      RunOptions ro;
      if (!quiet) ro.log = [](const std::string& m) { std::cerr << m << "\n"; };
      if (!replay_path.empty()) {
        auto r = replay_manifest(replay_path, out_dir, g.threads, ro);
        for (const auto& m : r.mismatches) std::cerr << "mismatch: " << m << "\n";
        if (!r.mismatches.empty()) {
          std::cerr << r.mismatches.size() << " outputs differ from the manifest\n";
          return 1;
        }
        std::cerr << "replay reproduced every recorded output\n";
        return r.summary.exit_status();
      }
      if (g.config.empty()) throw CLI::RequiredError("--config");
      auto cfg = read_config(g.config);
      if (app.count("--threads")) cfg.threads = g.threads;
      for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value, got '" + kv + "'");
        set_config_value(cfg, trim(kv.substr(0, eq)), kv.substr(eq + 1), fs::current_path().string());
      }
      if (!out_dir.empty()) cfg.out = out_dir;
      auto s = run_experiment(cfg, ro);
      std::cerr << s.cells.size() - s.failed << " of " << s.cells.size() << " cells succeeded; results in "
                << cfg.out << "\n";
      return s.exit_status();
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
