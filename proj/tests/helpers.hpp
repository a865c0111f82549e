#pragma once

#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "verbscope/corpus.hpp"
#include "verbscope/util.hpp"

namespace vs_test {

using namespace verbscope;

inline Token tok(std::string form, std::string upos, std::string xpos, std::string lemma = {},
                 std::optional<std::size_t> head = std::nullopt, std::string deprel = {}) {
  return Token{std::move(form), std::move(lemma), std::move(upos), std::move(xpos), head, std::move(deprel)};
}

// "the/DET/DT cat/NOUN/NN" -> tagged sentence without dependencies.
inline AnnotatedSentence tagged(const std::string& id, const std::string& spec) {
  AnnotatedSentence s;
  s.sentence_id = id;
  for (const auto& w : split_ws(spec)) {
    auto parts = split_on(w, '/');
    if (parts.size() != 3) throw Error("bad token spec " + w);
    s.tokens.push_back(tok(parts[0], parts[1], parts[2], ascii_lower(parts[0])));
  }
  return s;
}

inline Corpus corpus_of(std::vector<AnnotatedSentence> sentences, std::string domain = "test") {
  Corpus c;
  c.sentences = std::move(sentences);
  c.domain = std::move(domain);
  return c;
}

// "You can sit out here by me on the other stool ." with "sit" as root.
inline AnnotatedSentence stool_sentence() {
  auto s = tagged("stool",
                  "You/PRON/PRP can/AUX/MD sit/VERB/VB out/ADV/RB here/ADV/RB by/ADP/IN me/PRON/PRP "
                  "on/ADP/IN the/DET/DT other/ADJ/JJ stool/NOUN/NN ./PUNCT/.");
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (i == 2) {
      s.tokens[i].deprel = "root";
    } else {
      s.tokens[i].head = 2;
      s.tokens[i].deprel = "dep";
    }
  }
  return s;
}

inline std::string data_path(const std::string& name) { return std::string(VERBSCOPE_DATA_DIR) + "/" + name; }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("verbscope-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace vs_test
