#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "verbscope/rng.hpp"
#include "verbscope/util.hpp"

namespace verbscope {

// Tag written by read_plaintext when no tagger is supplied.
inline constexpr std::string_view kUnknownTag = "UNK";

struct Token {
  std::string form;
  std::string lemma;
  std::string upos;
  std::string xpos;
  std::optional<std::size_t> head;  // 0-based; nullopt for the root or unparsed
  std::string deprel;               // empty means none

  bool operator==(const Token&) const = default;
};

// xpos with the degraded-mode fallback: untagged fine tags bin under upos.
inline const std::string& fine_tag(const Token& t) {
  return (t.xpos.empty() || t.xpos == "_") ? t.upos : t.xpos;
}

inline bool is_tagged(const Token& t) {
  return !t.upos.empty() && t.upos != "_" && t.upos != kUnknownTag;
}

struct AnnotatedSentence {
  std::vector<Token> tokens;
  std::string sentence_id;
  std::string source;

  std::size_t size() const { return tokens.size(); }
  bool has_dependencies() const {
    for (const auto& t : tokens) {
      if (!t.deprel.empty()) return true;
    }
    return false;
  }
  std::vector<std::string> forms() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.form);
    return out;
  }

  bool operator==(const AnnotatedSentence&) const = default;
};

// Throws on a violated sentence invariant.
inline void validate(const AnnotatedSentence& s) {
  if (s.tokens.empty()) throw Error("sentence '" + s.sentence_id + "' has no tokens");
  int roots = 0;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    const auto& t = s.tokens[i];
    if (t.form.empty()) {
      throw Error("sentence '" + s.sentence_id + "': empty form at token " + std::to_string(i));
    }
    if (t.head && (*t.head >= s.tokens.size() || *t.head == i)) {
      throw Error("sentence '" + s.sentence_id + "': invalid head at token " + std::to_string(i));
    }
    if (t.deprel == "root") ++roots;
  }
  if (roots > 1) throw Error("sentence '" + s.sentence_id + "' has more than one root");
}

enum class Split { train, dev, test, unsplit };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
    case Split::unsplit: return "unsplit";
  }
  return "unsplit";
}

struct Corpus {
  std::vector<AnnotatedSentence> sentences;
  std::string domain;
  Split split = Split::unsplit;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }
  bool empty() const { return sentences.empty(); }

  bool operator==(const Corpus&) const = default;
};

inline void validate(const Corpus& c) {
  std::set<std::string> ids;
  for (const auto& s : c.sentences) {
    validate(s);
    if (!ids.insert(s.sentence_id).second) {
      throw Error("duplicate sentence id '" + s.sentence_id + "'");
    }
  }
}

struct TagPair {
  std::string upos;
  std::string xpos;

  auto operator<=>(const TagPair&) const = default;
};

// floor(log2(count)) for count >= 1, computed on integers.
constexpr int frequency_bin(std::uint64_t count) noexcept {
  return count == 0 ? -1 : static_cast<int>(std::bit_width(count)) - 1;
}

// Per (upos, xpos) word counts with power-of-two frequency bins.
class FrequencyTable {
 public:
  struct Entry {
    std::string upos;
    std::string xpos;
    std::string form;
    std::uint64_t count = 0;
  };

  FrequencyTable() = default;

  static FrequencyTable from_entries(const std::vector<Entry>& entries) {
    FrequencyTable t;
    for (const auto& e : entries) {
      if (e.count == 0) throw Error("frequency table entry with zero count: " + e.form);
      t.tags_[TagPair{e.upos, e.xpos}].counts[e.form] += e.count;
    }
    t.index();
    return t;
  }

  std::uint64_t count(const std::string& upos, const std::string& xpos,
                      const std::string& form) const {
    auto it = tags_.find(TagPair{upos, xpos});
    if (it == tags_.end()) return 0;
    auto c = it->second.counts.find(form);
    return c == it->second.counts.end() ? 0 : c->second;
  }

  std::optional<int> bin_of(const std::string& upos, const std::string& xpos,
                            const std::string& form) const {
    auto c = count(upos, xpos, form);
    if (c == 0) return std::nullopt;
    return frequency_bin(c);
  }

  // Forms sharing (upos, xpos, bin), lexicographic, without `exclude`.
  std::vector<std::pair<std::string, std::uint64_t>> bin_candidates(
      const std::string& upos, const std::string& xpos, int bin,
      const std::string& exclude) const {
    std::vector<std::pair<std::string, std::uint64_t>> out;
    const Bin* b = find_bin(upos, xpos, bin);
    if (!b) return out;
    for (std::size_t i = 0; i < b->forms.size(); ++i) {
      if (b->forms[i] != exclude) out.emplace_back(b->forms[i], b->counts[i]);
    }
    return out;
  }

  // Frequency-weighted draw from the bin of `form`, never returning `form`.
  // nullopt when the form is absent or alone in its bin.
  std::optional<std::string> sample_same_bin(const std::string& upos, const std::string& xpos,
                                             const std::string& form, Rng& rng) const {
    auto c = count(upos, xpos, form);
    if (c == 0) return std::nullopt;
    const Bin* b = find_bin(upos, xpos, frequency_bin(c));
    if (!b || b->forms.size() < 2) return std::nullopt;
    auto pos = static_cast<std::size_t>(
        std::lower_bound(b->forms.begin(), b->forms.end(), form) - b->forms.begin());
    const std::uint64_t total = b->cum.back() - c;
    std::uint64_t u = rng.below(total);
    const std::uint64_t start = b->cum[pos] - c;
    if (u >= start) u += c;
    auto idx = static_cast<std::size_t>(
        std::upper_bound(b->cum.begin(), b->cum.end(), u) - b->cum.begin());
    return b->forms[idx];
  }

  std::uint64_t total_tokens() const {
    std::uint64_t n = 0;
    for (const auto& [_, e] : tags_) n += e.total;
    return n;
  }

  std::uint64_t tag_total(const std::string& upos, const std::string& xpos) const {
    auto it = tags_.find(TagPair{upos, xpos});
    return it == tags_.end() ? 0 : it->second.total;
  }

  std::vector<TagPair> tag_pairs() const {
    std::vector<TagPair> out;
    for (const auto& [k, _] : tags_) out.push_back(k);
    return out;
  }

  // All entries sorted by (upos, xpos, form).
  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    for (const auto& [k, e] : tags_) {
      std::vector<std::pair<std::string, std::uint64_t>> sorted(e.counts.begin(), e.counts.end());
      std::sort(sorted.begin(), sorted.end());
      for (auto& [form, c] : sorted) out.push_back(Entry{k.upos, k.xpos, form, c});
    }
    return out;
  }

  bool empty() const { return tags_.empty(); }

 private:
  struct Bin {
    std::vector<std::string> forms;     // sorted
    std::vector<std::uint64_t> counts;  // parallel to forms
    std::vector<std::uint64_t> cum;     // inclusive prefix sums of counts
  };
  struct TagEntry {
    std::unordered_map<std::string, std::uint64_t> counts;
    std::map<int, Bin> bins;
    std::uint64_t total = 0;
  };

  const Bin* find_bin(const std::string& upos, const std::string& xpos, int bin) const {
    auto it = tags_.find(TagPair{upos, xpos});
    if (it == tags_.end()) return nullptr;
    auto b = it->second.bins.find(bin);
    return b == it->second.bins.end() ? nullptr : &b->second;
  }

  void index() {
    for (auto& [_, e] : tags_) {
      e.bins.clear();
      e.total = 0;
      std::vector<std::pair<std::string, std::uint64_t>> sorted(e.counts.begin(), e.counts.end());
      std::sort(sorted.begin(), sorted.end());
      for (const auto& [form, c] : sorted) {
        auto& b = e.bins[frequency_bin(c)];
        b.forms.push_back(form);
        b.counts.push_back(c);
        b.cum.push_back((b.cum.empty() ? 0 : b.cum.back()) + c);
        e.total += c;
      }
    }
  }

  friend FrequencyTable build_frequency_table(const Corpus& corpus);

  std::map<TagPair, TagEntry> tags_;
};

inline FrequencyTable build_frequency_table(const Corpus& corpus) {
  if (corpus.token_count() == 0) throw Error("empty corpus");
  FrequencyTable t;
  for (const auto& s : corpus.sentences) {
    for (const auto& tok : s.tokens) {
      ++t.tags_[TagPair{tok.upos, fine_tag(tok)}].counts[tok.form];
    }
  }
  t.index();
  return t;
}

inline void write_frequency_table(const FrequencyTable& table, const std::string& path) {
  std::string out = "# verbscope-frequency-table 1\n";
  for (const auto& e : table.entries()) {
    out += e.upos + '\t' + e.xpos + '\t' + e.form + '\t' + std::to_string(e.count) + '\n';
  }
  write_file(path, out);
}

inline FrequencyTable read_frequency_table(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "# verbscope-frequency-table 1") {
    throw Error(path + ": not a verbscope frequency table");
  }
  std::vector<FrequencyTable::Entry> entries;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = split_on(lines[i], '\t');
    if (f.size() != 4) throw Error(path + ":" + std::to_string(i + 1) + ": expected 4 columns");
    entries.push_back({f[0], f[1], f[2], parse_int<std::uint64_t>(f[3])});
  }
  return FrequencyTable::from_entries(entries);
}

}  // namespace verbscope
