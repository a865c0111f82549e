#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "verbscope/analysis.hpp"
#include "verbscope/corpus.hpp"
#include "verbscope/eval.hpp"
#include "verbscope/hash.hpp"
#include "verbscope/ingest.hpp"
#include "verbscope/pairgen.hpp"
#include "verbscope/perturb.hpp"
#include "verbscope/scorer.hpp"
#include "verbscope/stats.hpp"
#include "verbscope/tagger.hpp"
#include "verbscope/util.hpp"

namespace verbscope {

namespace fs = std::filesystem;

struct CorpusSpec {
  std::string domain;
  std::string path;
  CorpusFormat format = CorpusFormat::conllu;
};

struct ExperimentConfig {
  std::vector<CorpusSpec> corpora;
  std::vector<Condition> conditions{Condition::original, Condition::replace_word, Condition::shuffle_order};
  int lm_order = 3;
  double discount = 0.75;
  std::vector<std::uint64_t> seeds{1};
  std::size_t max_alts = 5;
  std::size_t len_min = 10;
  std::size_t len_max = 30;
  std::size_t n_per_paradigm = 100;
  std::vector<std::string> checkpoints;  // training-data fractions, e.g. "0.25"
  std::string out = "verbscope-out";
  unsigned threads = 1;
  std::string reference_domain;  // regression reference; default "cdl" if present, else the first corpus
  std::string tagger;            // model used to tag text-format corpora
  std::string split = "2/3,1/6,1/6";
  bool include_propn = false;
  bool pin_final_punct = false;
  bool cache = true;
};

// One-line help per key, printed by `verbscope run --help`.
inline const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"corpora", "comma list of domain:path[:conllu|text] (required)"},
      {"conditions", "comma list of ORIGINAL, REPLACE.WORD, SHUFFLE.ORDER (default: all three)"},
      {"lm_order", "n-gram order (default 3)"},
      {"discount", "Kneser-Ney discount for every order (default 0.75)"},
      {"seeds", "comma list of 64-bit seeds (default 1)"},
      {"max_alts", "semantic pairs per source sentence (default 5)"},
      {"len_min", "minimum source sentence length in tokens (default 10)"},
      {"len_max", "maximum source sentence length in tokens (default 30)"},
      {"n_per_paradigm", "agreement pairs per paradigm (default 100)"},
      {"checkpoints", "comma list of training-data fractions in (0,1] for trajectories (default none)"},
      {"out", "output directory (default verbscope-out)"},
      {"threads", "cells run in parallel (default 1)"},
      {"reference_domain", "regression reference dataset (default cdl if present, else first corpus)"},
      {"tagger", "tagger model for text-format corpora"},
      {"split", "train,dev,test proportions (default 2/3,1/6,1/6)"},
      {"include_propn", "replace PROPN under REPLACE.WORD (default false)"},
      {"pin_final_punct", "keep sentence-final punctuation in place under SHUFFLE.ORDER (default false)"},
      {"cache", "reuse cached cell results under out/cache (default true)"},
  };
  return keys;
}

namespace detail {

inline std::string unquote(std::string v) {
  v = trim(v);
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
    v = v.substr(1, v.size() - 2);
  }
  return v;
}

inline std::vector<std::string> config_list(const std::string& value) {
  auto v = trim(value);
  if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<std::string> out;
  for (auto& item : split_on(v, ',')) {
    auto u = unquote(item);
    if (!u.empty()) out.push_back(u);
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  auto t = ascii_lower(unquote(v));
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw Error("config key '" + key + "': expected true or false, got '" + v + "'");
}

inline std::string resolve_path(const std::string& p, const std::string& base_dir) {
  if (p.empty() || base_dir.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

inline CorpusFormat parse_format(const std::string& s) {
  if (s == "conllu") return CorpusFormat::conllu;
  if (s == "text" || s == "txt") return CorpusFormat::text;
  throw Error("unknown corpus format '" + s + "'");
}

inline std::string format_name(CorpusFormat f) { return f == CorpusFormat::conllu ? "conllu" : "text"; }

}  // namespace detail

// Applies one key. Relative paths resolve against base_dir.
inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value,
                             const std::string& base_dir = {}) {
  auto scalar = detail::unquote(value);
  auto as_size = [&] {
    try {
      return parse_int<std::size_t>(scalar);
    } catch (const Error&) {
      throw Error("config key '" + key + "': expected a non-negative integer, got '" + scalar + "'");
    }
  };
  if (key == "corpora") {
    c.corpora.clear();
    for (const auto& item : detail::config_list(value)) {
      // domain:path[:format]; the path itself may not contain ':'
      auto parts = split_on(item, ':');
      if (parts.size() < 2 || parts.size() > 3 || parts[0].empty() || parts[1].empty()) {
        throw Error("config key 'corpora': expected domain:path[:format], got '" + item + "'");
      }
      CorpusSpec s{parts[0], detail::resolve_path(parts[1], base_dir), CorpusFormat::conllu};
      if (parts.size() == 3) s.format = detail::parse_format(parts[2]);
      c.corpora.push_back(s);
    }
  } else if (key == "conditions") {
    c.conditions.clear();
    for (const auto& item : detail::config_list(value)) c.conditions.push_back(parse_condition(item));
  } else if (key == "lm_order") {
    c.lm_order = static_cast<int>(as_size());
  } else if (key == "discount") {
    c.discount = parse_double(scalar);
  } else if (key == "seeds") {
    c.seeds.clear();
    for (const auto& item : detail::config_list(value)) c.seeds.push_back(parse_int<std::uint64_t>(item));
  } else if (key == "max_alts") {
    c.max_alts = as_size();
  } else if (key == "len_min") {
    c.len_min = as_size();
  } else if (key == "len_max") {
    c.len_max = as_size();
  } else if (key == "n_per_paradigm") {
    c.n_per_paradigm = as_size();
  } else if (key == "checkpoints") {
    c.checkpoints = detail::config_list(value);
  } else if (key == "out") {
    c.out = detail::resolve_path(scalar, base_dir);
  } else if (key == "threads") {
    c.threads = static_cast<unsigned>(as_size());
  } else if (key == "reference_domain") {
    c.reference_domain = scalar;
  } else if (key == "tagger") {
    c.tagger = detail::resolve_path(scalar, base_dir);
  } else if (key == "split") {
    c.split = scalar;
  } else if (key == "include_propn") {
    c.include_propn = detail::parse_bool(key, value);
  } else if (key == "pin_final_punct") {
    c.pin_final_punct = detail::parse_bool(key, value);
  } else if (key == "cache") {
    c.cache = detail::parse_bool(key, value);
  } else {
    throw Error("unknown config key '" + key + "'");
  }
}

// Flat `key = value` lines; '#' starts a comment outside quotes.
inline ExperimentConfig parse_config(std::string_view text, const std::string& base_dir = {},
                                     const std::string& origin = "<config>") {
  ExperimentConfig c;
  std::size_t lineno = 0;
  for (auto& raw : split_on(text, '\n')) {
    ++lineno;
    std::string line;
    bool quoted = false;
    for (char ch : raw) {
      if (ch == '"') quoted = !quoted;
      if (ch == '#' && !quoted) break;
      line += ch;
    }
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;  // section headers are ignored
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(origin + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set_config_value(c, trim(line.substr(0, eq)), line.substr(eq + 1), base_dir);
    } catch (const Error& e) {
      throw Error(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

inline ExperimentConfig read_config(const std::string& path) {
  auto base = fs::absolute(path).parent_path().string();
  return parse_config(read_file(path), base, path);
}

inline void validate(const ExperimentConfig& c) {
  if (c.corpora.empty()) throw Error("config: at least one corpus required");
  if (c.conditions.empty()) throw Error("config: at least one condition required");
  if (c.seeds.empty()) throw Error("config: at least one seed required");
  std::set<std::string> domains;
  for (const auto& s : c.corpora) {
    if (!domains.insert(s.domain).second) throw Error("config: duplicate domain '" + s.domain + "'");
    if (s.format == CorpusFormat::text && c.tagger.empty()) {
      throw Error("config: text corpus '" + s.domain + "' needs a tagger");
    }
  }
  std::set<Condition> conds(c.conditions.begin(), c.conditions.end());
  if (conds.size() != c.conditions.size()) throw Error("config: duplicate condition");
  std::set<std::uint64_t> seeds(c.seeds.begin(), c.seeds.end());
  if (seeds.size() != c.seeds.size()) throw Error("config: duplicate seed");
  if (c.lm_order < 1) throw Error("config: lm_order must be >= 1");
  if (!(c.discount > 0.0 && c.discount < 1.0)) throw Error("config: discount must lie in (0,1)");
  if (c.max_alts < 1) throw Error("config: max_alts must be >= 1");
  if (c.len_min > c.len_max) throw Error("config: len_min exceeds len_max");
  if (c.threads < 1) throw Error("config: threads must be >= 1");
  for (const auto& k : c.checkpoints) {
    double f = checkpoint_value(k);
    if (!(f > 0.0 && f <= 1.0)) throw Error("config: checkpoint fraction must lie in (0,1], got " + k);
  }
  SplitSpec::parse(c.split);
  if (!c.reference_domain.empty() && !domains.count(c.reference_domain)) {
    throw Error("config: reference_domain '" + c.reference_domain + "' is not a configured corpus");
  }
  if (c.out.empty()) throw Error("config: output directory required");
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  auto corpora = nlohmann::ordered_json::array();
  for (const auto& s : c.corpora) {
    corpora.push_back({{"domain", s.domain}, {"path", s.path}, {"format", detail::format_name(s.format)}});
  }
  j["corpora"] = corpora;
  auto conds = nlohmann::ordered_json::array();
  for (auto k : c.conditions) conds.push_back(to_string(k));
  j["conditions"] = conds;
  j["lm_order"] = c.lm_order;
  j["discount"] = c.discount;
  j["seeds"] = c.seeds;
  j["max_alts"] = c.max_alts;
  j["len_min"] = c.len_min;
  j["len_max"] = c.len_max;
  j["n_per_paradigm"] = c.n_per_paradigm;
  j["checkpoints"] = c.checkpoints;
  j["reference_domain"] = c.reference_domain;
  j["tagger"] = c.tagger;
  j["split"] = c.split;
  j["include_propn"] = c.include_propn;
  j["pin_final_punct"] = c.pin_final_punct;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.corpora.clear();
  for (const auto& s : j.at("corpora")) {
    c.corpora.push_back({s.at("domain").get<std::string>(), s.at("path").get<std::string>(),
                         detail::parse_format(s.at("format").get<std::string>())});
  }
  c.conditions.clear();
  for (const auto& k : j.at("conditions")) c.conditions.push_back(parse_condition(k.get<std::string>()));
  c.lm_order = j.at("lm_order").get<int>();
  c.discount = j.at("discount").get<double>();
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.max_alts = j.at("max_alts").get<std::size_t>();
  c.len_min = j.at("len_min").get<std::size_t>();
  c.len_max = j.at("len_max").get<std::size_t>();
  c.n_per_paradigm = j.at("n_per_paradigm").get<std::size_t>();
  c.checkpoints = j.at("checkpoints").get<std::vector<std::string>>();
  c.reference_domain = j.at("reference_domain").get<std::string>();
  c.tagger = j.at("tagger").get<std::string>();
  c.split = j.at("split").get<std::string>();
  c.include_propn = j.at("include_propn").get<bool>();
  c.pin_final_punct = j.at("pin_final_punct").get<bool>();
  return c;
}

// Independent sub-seeds per purpose, so perturbation and pair sampling do
// not share streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : purpose) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return mix64(seed, h);
}

struct RunOptions {
  std::function<void(const std::string&)> log;  // progress; never affects outputs
};

struct CellRecord {
  std::string train_domain;
  std::string condition;
  std::uint64_t seed = 0;
  std::string checkpoint;
  std::string key;
  bool cached = false;
  std::optional<std::string> error;
};

struct RunSummary {
  std::vector<CellRecord> cells;
  std::vector<std::string> warnings;
  std::vector<std::string> outputs;  // relative to the output directory
  std::size_t failed = 0;
  int exit_status() const { return failed ? 1 : 0; }
};

namespace detail {

struct DomainData {
  CorpusSpec spec;
  std::string input_hash;
  CorpusSplits splits;
  FrequencyTable table;
  std::optional<AgreementLexicon> lexicon;
};

struct CellJob {
  std::size_t domain = 0;
  Condition condition = Condition::original;
  std::size_t seed_idx = 0;
  std::string checkpoint = "final";
  double fraction = 1.0;
  bool cross_domain = true;
};

struct CellOutput {
  std::vector<ResultRow> rows;
  std::optional<PerturbReport> report;
};

inline std::string seed_rows_csv(const std::vector<std::pair<std::uint64_t, ResultRow>>& rows) {
  std::string out = std::string("seed,") + kResultsHeader + '\n';
  for (const auto& [seed, r] : rows) out += std::to_string(seed) + ',' + format_result_row(r) + '\n';
  return out;
}

inline std::string cell_cache_blob(const CellOutput& o) {
  nlohmann::ordered_json j;
  j["results"] = format_results(o.rows);
  j["report"] = o.report ? nlohmann::ordered_json::parse(format_report(*o.report)) : nlohmann::ordered_json();
  return j.dump() + "\n";
}

inline CellOutput parse_cell_cache(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  CellOutput o;
  auto csv = j.at("results").get<std::string>();
  CsvTable t;
  auto lines = split_on(csv, '\n');
  t.header = parse_csv_line(lines.at(0));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (!lines[i].empty()) t.rows.push_back(parse_csv_line(lines[i]));
  }
  o.rows = parse_results(t);
  if (!j.at("report").is_null()) o.report = parse_report(j.at("report").dump());
  return o;
}

}  // namespace detail

inline RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& ropts = {}) {
  validate(cfg);
  std::mutex log_mu;
  auto log = [&](const std::string& msg) {
    if (!ropts.log) return;
    std::lock_guard<std::mutex> lock(log_mu);
    ropts.log(msg);
  };
  RunSummary summary;
  auto warn = [&](const std::string& msg) {
    summary.warnings.push_back(msg);
    log("warning: " + msg);
  };

  const fs::path out(cfg.out);
  fs::create_directories(out / "pairs");
  if (cfg.cache) fs::create_directories(out / "cache");
  auto emit = [&](const std::string& rel, const std::string& content) {
    write_file((out / rel).string(), content);
    summary.outputs.push_back(rel);
  };

  // Load, split and index every corpus.
  const auto split_spec = SplitSpec::parse(cfg.split);
  std::optional<TaggerModel> tagger;
  if (!cfg.tagger.empty()) tagger = read_tagger(cfg.tagger);
  std::vector<detail::DomainData> domains;
  for (const auto& spec : cfg.corpora) {
    detail::DomainData d;
    d.spec = spec;
    auto raw = read_file(spec.path);
    d.input_hash = sha256_hex(raw);
    Corpus corpus;
    if (spec.format == CorpusFormat::conllu) {
      corpus = parse_conllu(raw, spec.path);
    } else {
      std::vector<std::string> lines;
      for (auto& l : split_on(raw, '\n')) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
        lines.push_back(l);
      }
      corpus = tag_corpus(*tagger, corpus_from_lines(lines, spec.path));
    }
    corpus.domain = spec.domain;
    validate(corpus);
    d.splits = split_corpus(corpus, split_spec);
    d.table = build_frequency_table(d.splits.train);
    try {
      d.lexicon = extract_agreement_lexicon(d.table, build_lemma_index(d.splits.train));
    } catch (const Error& e) {
      warn(spec.domain + ": agreement pairs skipped: " + e.what());
    }
    log("loaded " + spec.domain + ": " + std::to_string(corpus.sentences.size()) + " sentences, " +
        std::to_string(d.splits.train.token_count()) + " training tokens");
    domains.push_back(std::move(d));
  }

  // Pairs come from the untouched splits and depend only on (domain, seed).
  const std::size_t nd = domains.size(), ns = cfg.seeds.size();
  std::vector<std::vector<std::vector<MinimalPair>>> semantic(nd, std::vector<std::vector<MinimalPair>>(ns));
  std::vector<std::vector<std::vector<MinimalPair>>> agreement(nd, std::vector<std::vector<MinimalPair>>(ns));
  std::vector<std::vector<std::string>> pair_hashes(nd, std::vector<std::string>(ns));
  for (std::size_t di = 0; di < nd; ++di) {
    const auto& d = domains[di];
    for (std::size_t si = 0; si < ns; ++si) {
      const auto seed = cfg.seeds[si];
      SemanticPairOptions so{cfg.max_alts, cfg.len_min, cfg.len_max, derive_seed(seed, "semantic-pairs")};
      auto sem = gen_semantic_pairs(d.splits.test, d.table, so);
      if (sem.pairs.empty()) warn(d.spec.domain + " seed " + std::to_string(seed) + ": no semantic pairs");
      semantic[di][si] = std::move(sem.pairs);
      if (d.lexicon) {
        agreement[di][si] = gen_agreement_pairs(*d.lexicon, {kAgreementParadigms.begin(), kAgreementParadigms.end()}, cfg.n_per_paradigm,
                                                derive_seed(seed, "agreement-pairs"));
      }
      const auto stem = "pairs/" + d.spec.domain + ".s" + std::to_string(seed);
      auto sem_text = format_pairs(semantic[di][si]);
      auto agr_text = format_pairs(agreement[di][si]);
      emit(stem + ".semantic.jsonl", sem_text);
      if (d.lexicon) emit(stem + ".agreement.jsonl", agr_text);
      pair_hashes[di][si] = sha256_hex(sem_text + '\0' + agr_text);
    }
  }

  // Grid: corpus x condition x seed, then ORIGINAL data-fraction checkpoints.
  std::vector<detail::CellJob> jobs;
  for (std::size_t di = 0; di < nd; ++di) {
    for (auto cond : cfg.conditions) {
      for (std::size_t si = 0; si < ns; ++si) jobs.push_back({di, cond, si, "final", 1.0, true});
    }
  }
  for (std::size_t di = 0; di < nd; ++di) {
    for (std::size_t si = 0; si < ns; ++si) {
      for (const auto& ck : cfg.checkpoints) {
        jobs.push_back({di, Condition::original, si, ck, checkpoint_value(ck), false});
      }
    }
  }

  auto cell_key = [&](const detail::CellJob& job) {
    nlohmann::ordered_json k;
    k["format"] = 1;
    k["train_input"] = domains[job.domain].input_hash;
    k["train_domain"] = domains[job.domain].spec.domain;
    k["condition"] = to_string(job.condition);
    k["seed"] = cfg.seeds[job.seed_idx];
    k["checkpoint"] = job.checkpoint;
    k["lm_order"] = cfg.lm_order;
    k["discount"] = cfg.discount;
    k["split"] = cfg.split;
    k["include_propn"] = cfg.include_propn;
    k["pin_final_punct"] = cfg.pin_final_punct;
    auto evals = nlohmann::ordered_json::array();
    for (std::size_t di = 0; di < nd; ++di) {
      if (job.cross_domain || di == job.domain) {
        evals.push_back({domains[di].spec.domain, pair_hashes[di][job.seed_idx]});
      }
    }
    k["eval"] = evals;
    return sha256_hex(k.dump());
  };

  auto run_cell = [&](const detail::CellJob& job) {
    const auto& d = domains[job.domain];
    const auto seed = cfg.seeds[job.seed_idx];
    detail::CellOutput o;
    Corpus train = d.splits.train;
    if (job.fraction < 1.0) {
      auto keep = std::max<std::size_t>(
          1, static_cast<std::size_t>(job.fraction * static_cast<double>(train.sentences.size())));
      train.sentences.resize(std::min(keep, train.sentences.size()));
    }
    PerturbOptions po{cfg.include_propn, cfg.pin_final_punct, 1};
    auto pr = perturb_corpus(train, job.condition, &d.table, derive_seed(seed, "perturb"), po);
    if (job.condition == Condition::replace_word) o.report = pr.report;
    NGramOptions lo;
    lo.order = cfg.lm_order;
    lo.discounts.assign(static_cast<std::size_t>(cfg.lm_order), cfg.discount);
    auto lm = train_ngram(pr.corpus, lo);
    NGramScorer scorer(lm, job.checkpoint);
    for (std::size_t di = 0; di < nd; ++di) {
      if (!job.cross_domain && di != job.domain) continue;
      const auto& pairs = semantic[di][job.seed_idx];
      if (pairs.empty()) continue;
      auto r = evaluate(score_pairs(scorer, pairs), paradigm_index(pairs),
                        {d.spec.domain, domains[di].spec.domain, to_string(job.condition), job.checkpoint});
      for (auto& row : result_rows(r, std::nullopt)) o.rows.push_back(std::move(row));
    }
    const auto& agr = agreement[job.domain][job.seed_idx];
    if (!agr.empty()) {
      auto r = evaluate(score_pairs(scorer, agr), paradigm_index(agr),
                        {d.spec.domain, d.spec.domain, to_string(job.condition), job.checkpoint});
      for (auto& row : result_rows(r, std::string("agreement"))) o.rows.push_back(std::move(row));
    }
    return o;
  };

  std::vector<detail::CellOutput> outputs(jobs.size());
  summary.cells.resize(jobs.size());
  std::atomic<std::size_t> next{0}, finished{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      auto& rec = summary.cells[i];
      rec.train_domain = domains[job.domain].spec.domain;
      rec.condition = to_string(job.condition);
      rec.seed = cfg.seeds[job.seed_idx];
      rec.checkpoint = job.checkpoint;
      try {
        rec.key = cell_key(job);
        const auto cache_path = (out / "cache" / (rec.key + ".json")).string();
        if (cfg.cache && fs::exists(cache_path)) {
          outputs[i] = detail::parse_cell_cache(read_file(cache_path));
          rec.cached = true;
        } else {
          outputs[i] = run_cell(job);
          if (cfg.cache) {
            auto tmp = cache_path + ".tmp" + std::to_string(i);
            write_file(tmp, detail::cell_cache_blob(outputs[i]));
            fs::rename(tmp, cache_path);
          }
        }
      } catch (const std::exception& e) {
        rec.error = e.what();
        outputs[i] = {};
      }
      auto done = ++finished;
      log("[" + std::to_string(done) + "/" + std::to_string(jobs.size()) + "] " + rec.train_domain + " " +
          rec.condition + " seed=" + std::to_string(rec.seed) + " checkpoint=" + rec.checkpoint + " " +
          (rec.error ? "FAILED: " + *rec.error : rec.cached ? "cached" : "ok"));
    }
  };
  {
    const unsigned n_workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }
  for (const auto& c : summary.cells) summary.failed += c.error.has_value();

  // Per-seed rows, then seed averages in first-appearance order.
  std::vector<std::pair<std::uint64_t, ResultRow>> by_seed;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    for (const auto& r : outputs[i].rows) by_seed.emplace_back(cfg.seeds[jobs[i].seed_idx], r);
  }
  emit("results_by_seed.csv", detail::seed_rows_csv(by_seed));

  using GroupKey = std::pair<EvalLabels, std::string>;
  std::vector<GroupKey> order;
  std::map<GroupKey, std::vector<const ResultRow*>> groups;
  for (const auto& [seed, r] : by_seed) {
    GroupKey k{r.labels, r.paradigm};
    if (!groups.count(k)) order.push_back(k);
    groups[k].push_back(&r);
  }
  std::vector<ResultRow> averaged;
  for (const auto& k : order) {
    const auto& g = groups[k];
    ResultRow row{k.first, k.second, 0.0, 0, 0};
    for (const auto* r : g) {
      row.accuracy += r->accuracy;
      row.n += r->n;
      row.ties += r->ties;
    }
    row.accuracy /= static_cast<double>(g.size());
    averaged.push_back(row);
  }
  emit("results.csv", format_results(averaged));

  auto has_condition = [&](Condition c) {
    return std::find(cfg.conditions.begin(), cfg.conditions.end(), c) != cfg.conditions.end();
  };
  const auto matrix_condition = has_condition(Condition::original) ? Condition::original : cfg.conditions.front();
  {
    std::vector<EvalResult> cells;
    for (const auto& [seed, r] : by_seed) {
      if (r.paradigm != to_string(Paradigm::semantic_verb) || r.labels.checkpoint != "final" ||
          r.labels.condition != to_string(matrix_condition)) {
        continue;
      }
      EvalResult e;
      e.accuracy = r.accuracy;
      e.labels = r.labels;
      cells.push_back(e);
    }
    if (!cells.empty()) {
      auto m = cross_domain_matrix(cells);
      for (const auto& w : m.warnings) warn("cross-domain: " + w);
      emit("cross_domain.csv", format_matrix(m));
    }
  }

  // Regression: in-domain semantic accuracy ~ Dataset * Condition, seeds as replicates.
  if (nd >= 2 && has_condition(Condition::original) && has_condition(Condition::shuffle_order)) {
    std::vector<Observation> obs;
    for (const auto& [seed, r] : by_seed) {
      if (r.paradigm != to_string(Paradigm::semantic_verb) || r.labels.checkpoint != "final" ||
          r.labels.train_domain != r.labels.eval_domain) {
        continue;
      }
      if (r.labels.condition != "ORIGINAL" && r.labels.condition != "SHUFFLE.ORDER") continue;
      obs.push_back({r.accuracy, r.labels.train_domain, r.labels.condition});
    }
    OlsOptions oo;
    oo.reference_dataset = cfg.reference_domain;
    if (oo.reference_dataset.empty()) {
      oo.reference_dataset = cfg.corpora.front().domain;
      for (const auto& c : cfg.corpora) {
        if (c.domain == "cdl") oo.reference_dataset = "cdl";
      }
    }
    try {
      emit("regression.csv", format_regression_csv(ols_interaction(obs, oo)));
    } catch (const Error& e) {
      warn(std::string("regression skipped: ") + e.what());
    }
  }

  // Descriptive statistics of the training splits and replacement rates.
  {
    std::vector<CorpusStats> st;
    std::map<std::string, CorpusStats> by_domain;
    for (const auto& d : domains) {
      auto s = compute_stats(d.splits.train);
      by_domain[s.domain] = s;
      st.push_back(std::move(s));
    }
    emit("stats.csv", format_stats_csv(st));
    if (has_condition(Condition::replace_word)) {
      std::map<std::string, PerturbReport> reports;
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!outputs[i].report) continue;
        auto& agg = reports[domains[jobs[i].domain].spec.domain];
        agg.condition = Condition::replace_word;
        agg.tokens_total += outputs[i].report->tokens_total;
        agg.tokens_replaced += outputs[i].report->tokens_replaced;
      }
      for (auto& [_, r] : reports) {
        r.replacement_rate =
            r.tokens_total ? static_cast<double>(r.tokens_replaced) / static_cast<double>(r.tokens_total) : 0.0;
      }
      if (!reports.empty()) emit("replacement_rates.csv", format_replacement_rates(compare_replacement_rates(reports, by_domain)));
    }
  }

  // Trajectories over training-data fractions.
  if (!cfg.checkpoints.empty()) {
    std::vector<ChartSeries> acc_series, ratio_series;
    for (const auto& d : domains) {
      std::map<std::string, double> sem, syn;
      for (const auto& r : averaged) {
        if (r.labels.train_domain != d.spec.domain || r.labels.eval_domain != d.spec.domain ||
            r.labels.checkpoint == "final") {
          continue;
        }
        if (r.paradigm == to_string(Paradigm::semantic_verb)) sem[r.labels.checkpoint] = r.accuracy;
        if (r.paradigm == "agreement") syn[r.labels.checkpoint] = r.accuracy;
      }
      if (sem.empty() || syn.empty()) {
        warn(d.spec.domain + ": trajectory skipped (missing semantic or agreement results)");
        continue;
      }
      try {
        auto t = trajectory(sem, syn);
        emit("trajectory_" + d.spec.domain + ".csv", format_trajectory_csv(t));
        ChartSeries s_sem{d.spec.domain + " semantic", {}}, s_syn{d.spec.domain + " syntactic", {}},
            s_ratio{d.spec.domain + " sem/syn", {}};
        for (const auto& row : t.rows) {
          double x = checkpoint_value(row.checkpoint);
          s_sem.points.emplace_back(x, row.semantic_accuracy);
          s_syn.points.emplace_back(x, row.syntactic_accuracy);
          if (row.ratio) s_ratio.points.emplace_back(x, *row.ratio);
        }
        if (s_sem.points.size() >= 2) {
          acc_series.push_back(std::move(s_sem));
          acc_series.push_back(std::move(s_syn));
        }
        if (s_ratio.points.size() >= 2) ratio_series.push_back(std::move(s_ratio));
      } catch (const Error& e) {
        warn(d.spec.domain + ": trajectory failed: " + e.what());
      }
    }
    if (!acc_series.empty()) {
      emit("trajectory.svg", render_chart(acc_series, {"Accuracy by training-data fraction", "fraction of training data", "accuracy"}));
    }
    if (!ratio_series.empty()) {
      emit("trajectory_ratio.svg", render_chart(ratio_series, {"Semantic / syntactic accuracy", "fraction of training data", "ratio"}));
    }
  }

  // Manifest: everything needed to re-run and check the outputs.
  {
    nlohmann::ordered_json m;
    m["tool"] = "verbscope";
    m["manifest_version"] = 1;
    auto cj = config_to_json(cfg);
    m["config"] = cj;
    m["config_sha256"] = sha256_hex(cj.dump());
    auto inputs = nlohmann::ordered_json::array();
    for (const auto& d : domains) inputs.push_back({{"domain", d.spec.domain}, {"path", d.spec.path}, {"sha256", d.input_hash}});
    if (!cfg.tagger.empty()) inputs.push_back({{"domain", ""}, {"path", cfg.tagger}, {"sha256", sha256_file(cfg.tagger)}});
    m["inputs"] = inputs;
    auto cells = nlohmann::ordered_json::array();
    for (const auto& c : summary.cells) {
      nlohmann::ordered_json cj2{{"train_domain", c.train_domain}, {"condition", c.condition}, {"seed", c.seed},
                                 {"checkpoint", c.checkpoint}, {"key", c.key},
                                 {"status", c.error ? "failed" : "ok"}};
      if (c.error) cj2["error"] = *c.error;
      cells.push_back(cj2);
    }
    m["cells"] = cells;
    auto outs = nlohmann::ordered_json::array();
    for (const auto& rel : summary.outputs) outs.push_back({{"path", rel}, {"sha256", sha256_file((out / rel).string())}});
    m["outputs"] = outs;
    auto warns = nlohmann::ordered_json::array();
    for (const auto& w : summary.warnings) warns.push_back(w);
    m["warnings"] = warns;
    write_file((out / "manifest.json").string(), m.dump(2) + "\n");
  }
  if (summary.failed) {
    log(std::to_string(summary.failed) + " of " + std::to_string(jobs.size()) + " cells failed:");
    for (const auto& c : summary.cells) {
      if (c.error) log("  " + c.train_domain + " " + c.condition + " seed=" + std::to_string(c.seed) + ": " + *c.error);
    }
  }
  return summary;
}

struct ReplayResult {
  RunSummary summary;
  std::vector<std::string> mismatches;  // outputs whose hash differs from the manifest
};

// Re-runs the manifest's config without the cache and compares every
// recorded output hash. `out_override` redirects the outputs.
inline ReplayResult replay_manifest(const std::string& manifest_path, const std::string& out_override = {},
                                    unsigned threads = 1, const RunOptions& ropts = {}) {
  auto m = nlohmann::json::parse(read_file(manifest_path));
  auto cfg = config_from_json(m.at("config"));
  for (const auto& in : m.at("inputs")) {
    auto path = in.at("path").get<std::string>();
    if (sha256_file(path) != in.at("sha256").get<std::string>()) throw Error("input changed since manifest: " + path);
  }
  cfg.out = out_override.empty() ? fs::path(manifest_path).parent_path().string() : out_override;
  if (cfg.out.empty()) cfg.out = ".";
  cfg.threads = threads;
  cfg.cache = false;
  ReplayResult r;
  r.summary = run_experiment(cfg, ropts);
  for (const auto& o : m.at("outputs")) {
    auto rel = o.at("path").get<std::string>();
    auto p = (fs::path(cfg.out) / rel).string();
    if (!fs::exists(p) || sha256_file(p) != o.at("sha256").get<std::string>()) r.mismatches.push_back(rel);
  }
  return r;
}

}  // namespace verbscope
