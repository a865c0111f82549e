#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "verbscope/corpus.hpp"
#include "verbscope/rng.hpp"
#include "verbscope/util.hpp"

namespace verbscope {

// ---------------------------------------------------------------------------
// CoNLL-U

namespace detail {

inline std::string conllu_field(const std::string& v) { return v.empty() ? "_" : v; }
inline std::string conllu_value(const std::string& v) { return v == "_" ? std::string() : v; }

}  // namespace detail

// Parses CoNLL-U text. Heads are converted from 1-based to 0-based;
// multiword-token ranges (1-2) and empty nodes (1.1) are skipped.
// `# sent_id` becomes the sentence id, `# source` the source tag, and all
// other comments are appended to the source tag.
inline Corpus parse_conllu(std::string_view text, const std::string& origin = "<input>") {
  Corpus corpus;
  AnnotatedSentence cur;
  std::vector<std::string> comments;
  std::vector<std::size_t> ids;  // original 1-based ids
  std::vector<std::string> raw_heads;
  std::vector<std::size_t> head_lines;
  std::size_t lineno = 0;

  auto fail = [&](std::size_t line, const std::string& msg) -> Error {
    return Error(origin + ":" + std::to_string(line) + ": " + msg);
  };

  auto flush = [&]() {
    if (cur.tokens.empty()) {
      comments.clear();
      cur = {};
      return;
    }
    for (std::size_t i = 0; i < cur.tokens.size(); ++i) {
      const auto& h = raw_heads[i];
      if (h == "_") continue;
      std::size_t head1 = 0;
      try {
        head1 = parse_int<std::size_t>(h);
      } catch (const Error&) {
        throw fail(head_lines[i], "non-integer head '" + h + "'");
      }
      if (head1 == 0) continue;
      auto pos = std::find(ids.begin(), ids.end(), head1);
      if (pos == ids.end()) throw fail(head_lines[i], "head " + h + " out of range");
      auto idx = static_cast<std::size_t>(pos - ids.begin());
      if (idx == i) throw fail(head_lines[i], "token is its own head");
      cur.tokens[i].head = idx;
    }
    std::vector<std::string> extra;
    for (const auto& c : comments) {
      auto body = trim(c.substr(1));
      if (starts_with(body, "sent_id")) {
        auto eq = body.find('=');
        if (eq != std::string::npos) cur.sentence_id = trim(body.substr(eq + 1));
      } else if (starts_with(body, "source =")) {
        cur.source = trim(body.substr(8));
      } else if (!body.empty()) {
        extra.push_back(body);
      }
    }
    if (!extra.empty()) {
      if (!cur.source.empty()) extra.insert(extra.begin(), cur.source);
      cur.source = join(extra, " | ");
    }
    if (cur.sentence_id.empty()) cur.sentence_id = std::to_string(corpus.sentences.size() + 1);
    int roots = 0;
    for (const auto& t : cur.tokens) roots += t.deprel == "root";
    if (roots > 1) throw fail(lineno, "sentence '" + cur.sentence_id + "' has more than one root");
    corpus.sentences.push_back(std::move(cur));
    cur = {};
    comments.clear();
    ids.clear();
    raw_heads.clear();
    head_lines.clear();
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      comments.emplace_back(line);
      continue;
    }
    auto cols = split_on(line, '\t');
    if (cols.size() != 10) {
      throw fail(lineno, "expected 10 tab-separated columns, got " + std::to_string(cols.size()));
    }
    const auto& id = cols[0];
    if (id.find('-') != std::string::npos || id.find('.') != std::string::npos) continue;
    std::size_t id1 = 0;
    try {
      id1 = parse_int<std::size_t>(id);
    } catch (const Error&) {
      throw fail(lineno, "non-integer token id '" + id + "'");
    }
    if (cols[1].empty()) throw fail(lineno, "empty form");
    Token t;
    t.form = cols[1];
    t.lemma = detail::conllu_value(cols[2]);
    t.upos = detail::conllu_value(cols[3]);
    t.xpos = detail::conllu_value(cols[4]);
    t.deprel = detail::conllu_value(cols[7]);
    cur.tokens.push_back(std::move(t));
    ids.push_back(id1);
    raw_heads.push_back(cols[6]);
    head_lines.push_back(lineno);
  }
  flush();
  validate(corpus);
  return corpus;
}

inline Corpus read_conllu(const std::string& path) {
  auto corpus = parse_conllu(read_file(path), path);
  corpus.domain = std::filesystem::path(path).stem().string();
  return corpus;
}

inline std::string format_conllu(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.sentences) {
    out += "# sent_id = " + s.sentence_id + '\n';
    if (!s.source.empty()) out += "# source = " + s.source + '\n';
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const auto& t = s.tokens[i];
      std::string head;
      if (t.head) {
        head = std::to_string(*t.head + 1);
      } else {
        head = t.deprel.empty() ? "_" : "0";
      }
      out += std::to_string(i + 1) + '\t' + t.form + '\t' + detail::conllu_field(t.lemma) + '\t' +
             detail::conllu_field(t.upos) + '\t' + detail::conllu_field(t.xpos) + "\t_\t" + head +
             '\t' + detail::conllu_field(t.deprel) + "\t_\t_\n";
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plain text

inline std::string format_text(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.sentences) {
    out += join(s.forms(), " ");
    out += '\n';
  }
  return out;
}

// One sentence per line, whitespace tokens, untagged. Empty lines skipped.
inline Corpus corpus_from_lines(const std::vector<std::string>& lines, const std::string& source) {
  Corpus corpus;
  for (const auto& line : lines) {
    auto forms = split_ws(line);
    if (forms.empty()) continue;
    AnnotatedSentence s;
    s.sentence_id = std::to_string(corpus.sentences.size() + 1);
    s.source = source;
    for (auto& f : forms) {
      Token t;
      t.form = std::move(f);
      t.upos = std::string(kUnknownTag);
      t.xpos = std::string(kUnknownTag);
      s.tokens.push_back(std::move(t));
    }
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

enum class CorpusFormat { conllu, text };

inline void write_corpus(const Corpus& corpus, const std::string& path, CorpusFormat format) {
  write_file(path, format == CorpusFormat::conllu ? format_conllu(corpus) : format_text(corpus));
}

// ---------------------------------------------------------------------------
// CHAT cleaning

namespace detail {

// Removes <...> retrace spans and [...] annotations (nesting-aware).
// Unbalanced openers are left in place.
inline std::string strip_bracketed(const std::string& s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == '<' || c == '[') {
      std::vector<char> stack{c == '<' ? '>' : ']'};
      std::size_t j = i + 1;
      while (j < s.size() && !stack.empty()) {
        if (s[j] == '<') stack.push_back('>');
        else if (s[j] == '[') stack.push_back(']');
        else if (s[j] == stack.back()) stack.pop_back();
        ++j;
      }
      if (stack.empty()) {
        out += ' ';
        i = j;
        continue;
      }
    }
    out += c;
    ++i;
  }
  return out;
}

// One cleaning pass. nullopt means the line is dropped.
inline std::optional<std::string> clean_chat_pass(const std::string& line) {
  auto t = trim(line);
  if (t.empty()) return std::nullopt;
  if (t[0] == '%' || t[0] == '@') return std::nullopt;  // dependent tiers, headers
  if (t[0] == '*') {
    auto colon = t.find(':');
    bool speaker = colon != std::string::npos && colon > 1;
    for (std::size_t k = 1; speaker && k < colon; ++k) {
      auto ch = static_cast<unsigned char>(t[k]);
      speaker = std::isalnum(ch) || ch == '_' || ch == '-';
    }
    if (speaker) t = t.substr(colon + 1);
  }
  t = strip_bracketed(t);
  std::vector<std::string> kept;
  for (auto& tok : split_ws(t)) {
    if (tok[0] == '&') continue;
    if (tok == "xxx" || tok == "yyy" || tok == "www") continue;
    kept.push_back(std::move(tok));
  }
  if (kept.empty()) return std::nullopt;
  return join(kept, " ");
}

}  // namespace detail

// CHAT-lite cleaning: speaker prefixes stripped; %-tiers and @-headers
// dropped; <...> and [...] spans, &-codes and xxx/yyy/www removed; empty
// results dropped. Each line is cleaned to a fixpoint, which makes the
// operation idempotent.
inline std::vector<std::string> clean_childes(const std::vector<std::string>& lines) {
  std::vector<std::string> out;
  for (const auto& line : lines) {
    std::optional<std::string> cur = line;
    for (;;) {
      auto next = detail::clean_chat_pass(*cur);
      if (!next || *next == *cur) {
        cur = next;
        break;
      }
      cur = std::move(next);
    }
    if (cur) out.push_back(std::move(*cur));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t n, std::int64_t d) {
    if (d == 0) throw Error("zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    auto g = std::gcd(n < 0 ? -n : n, d);
    if (g == 0) g = 1;
    return Rational{n / g, d / g};
  }
  // Accepts "a/b" or a decimal literal such as "0.667".
  static Rational parse(std::string_view s) {
    auto t = trim(s);
    auto slash = t.find('/');
    if (slash != std::string::npos) {
      return make(parse_int<std::int64_t>(t.substr(0, slash)),
                  parse_int<std::int64_t>(t.substr(slash + 1)));
    }
    auto dot = t.find('.');
    if (dot == std::string::npos) return make(parse_int<std::int64_t>(t), 1);
    auto frac = t.substr(dot + 1);
    if (frac.size() > 15) throw Error("too many decimals: " + t);
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    auto whole = t.substr(0, dot);
    std::int64_t w = whole.empty() ? 0 : parse_int<std::int64_t>(whole);
    std::int64_t f = frac.empty() ? 0 : parse_int<std::int64_t>(frac);
    return make(w * den + f, den);
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

struct SplitSpec {
  Rational train, dev, test;

  // Exact fractions; each in (0,1) and summing to exactly 1.
  static SplitSpec exact(Rational tr, Rational dv, Rational te) {
    SplitSpec s{tr, dv, te};
    for (const auto& r : {tr, dv, te}) {
      if (r.num <= 0 || r.num >= r.den) throw Error("split fractions must lie in (0,1)");
    }
    // a/b + c/d + e/f == 1  <=>  a*d*f + c*b*f + e*b*d == b*d*f
    __int128 lhs = static_cast<__int128>(tr.num) * dv.den * te.den +
                   static_cast<__int128>(dv.num) * tr.den * te.den +
                   static_cast<__int128>(te.num) * tr.den * dv.den;
    __int128 rhs = static_cast<__int128>(tr.den) * dv.den * te.den;
    if (lhs != rhs) throw Error("split fractions must sum to exactly 1");
    return s;
  }

  // Proportions normalised by their sum, so "0.667,0.167,0.167" is accepted.
  static SplitSpec proportions(Rational a, Rational b, Rational c) {
    auto na = static_cast<__int128>(a.num) * b.den * c.den;
    auto nb = static_cast<__int128>(b.num) * a.den * c.den;
    auto nc = static_cast<__int128>(c.num) * a.den * b.den;
    auto sum = na + nb + nc;
    if (na <= 0 || nb <= 0 || nc <= 0) throw Error("split proportions must be positive");
    auto reduce = [&](__int128 n) {
      __int128 x = n, y = sum;
      while (y) {
        auto r = x % y;
        x = y;
        y = r;
      }
      if (n / x > INT64_MAX || sum / x > INT64_MAX) throw Error("split proportions too precise");
      return Rational{static_cast<std::int64_t>(n / x), static_cast<std::int64_t>(sum / x)};
    };
    return exact(reduce(na), reduce(nb), reduce(nc));
  }

  static SplitSpec parse(std::string_view s) {
    auto parts = split_on(s, ',');
    if (parts.size() != 3) throw Error("split needs three comma-separated values");
    return proportions(Rational::parse(parts[0]), Rational::parse(parts[1]),
                       Rational::parse(parts[2]));
  }

  static SplitSpec standard() { return exact({2, 3}, {1, 6}, {1, 6}); }
};

// Block sizes for N sentences: floor(frac * N) per split, then the leftover
// sentences handed out one at a time starting with train.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
  std::array<Rational, 3> fr{spec.train, spec.dev, spec.test};
  std::array<std::size_t, 3> sizes{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    sizes[i] = static_cast<std::size_t>(static_cast<__int128>(n) * fr[i].num / fr[i].den);
    assigned += sizes[i];
  }
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[k % 3];
  return sizes;
}

struct SplitOptions {
  bool shuffle = false;
  std::uint64_t seed = 0;
};

struct CorpusSplits {
  Corpus train, dev, test;
};

inline CorpusSplits split_corpus(const Corpus& corpus, const SplitSpec& spec,
                                 const SplitOptions& opts = {}) {
  const auto n = corpus.sentences.size();
  if (n < 3) throw Error("need at least 3 sentences to split, got " + std::to_string(n));
  auto sizes = split_sizes(n, spec);
  static constexpr std::array<const char*, 3> names{"train", "dev", "test"};
  for (int i = 0; i < 3; ++i) {
    if (sizes[i] == 0) throw Error(std::string("empty ") + names[i] + " split");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (opts.shuffle) {
    Rng rng(mix64(opts.seed, 0x73706c6974ULL));
    rng.shuffle(order);
  }
  CorpusSplits out;
  std::array<Corpus*, 3> parts{&out.train, &out.dev, &out.test};
  std::array<Split, 3> labels{Split::train, Split::dev, Split::test};
  std::size_t k = 0;
  for (int i = 0; i < 3; ++i) {
    parts[i]->domain = corpus.domain;
    parts[i]->split = labels[i];
    for (std::size_t j = 0; j < sizes[i]; ++j) parts[i]->sentences.push_back(corpus.sentences[order[k++]]);
  }
  return out;
}

}  // namespace verbscope
