// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FIRO_TESTS_SUPPORT_HPP
#define FIRO_TESTS_SUPPORT_HPP

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "firo/firo.hpp"

namespace firo::testing {

// Full dynamic-programming Levenshtein distance over code points.
inline std::size_t levenshtein(std::string_view a8, std::string_view b8) {
  const std::u32string a = utf8::decode(a8), b = utf8::decode(b8);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Brute-force cluster: ids of every vocabulary word within distance 1.
inline std::vector<WordId> brute_cluster(const Vocabulary& vocab, std::string_view word) {
  std::vector<WordId> out;
  for (WordId id = 0; id < vocab.size(); ++id)
    if (levenshtein(vocab.word(id), word) <= 1) out.push_back(id);
  return out;
}

inline std::string random_word(Rng& rng, std::size_t min_len, std::size_t max_len,
                               std::string_view alphabet = "abcdefghijklmnopqrstuvwxyz") {
  const std::size_t len = min_len + rng.index(max_len - min_len + 1);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w += alphabet[rng.index(alphabet.size())];
  return w;
}

inline Vocabulary vocab_of(const std::vector<std::string>& words) {
  std::vector<VocabEntry> entries;
  std::uint64_t count = words.size() + 1;
  for (const auto& w : words) entries.push_back({w, count--});
  return Vocabulary(entries);
}

// A distinct scratch directory per test, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() / ("firo_test_" + name);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<Sentence> sentences_of(const std::vector<std::vector<Token>>& lines) {
  std::vector<Sentence> out;
  for (const auto& l : lines) out.push_back(make_sentence(l));
  return out;
}

inline LabeledData labeled_of(const std::vector<toybench::LabeledLine>& lines) {
  LabeledData data;
  data.labels.assign(toybench::kLabels.begin(), toybench::kLabels.end());
  for (const auto& l : lines) data.examples.push_back({l.tokens, l.label});
  return data;
}

}  // namespace firo::testing

#endif  // FIRO_TESTS_SUPPORT_HPP
