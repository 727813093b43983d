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

// Restricted output space: for a query word, every vocabulary word within
// Levenshtein distance 1.
//
// Each vocabulary word is filed under itself and each of its single-character
// deletions. Two strings are at most one edit apart only if they share such a
// key, so a query looks up its own keys and then checks the candidates
// exactly.

#ifndef FIRO_CLUSTER_INDEX_HPP
#define FIRO_CLUSTER_INDEX_HPP

#include <algorithm>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "firo/binary_io.hpp"
#include "firo/error.hpp"
#include "firo/text.hpp"

namespace firo {

// Exact test for unit-cost Levenshtein distance <= 1, in linear time.
inline bool within_one_edit(std::u32string_view a, std::u32string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (b.size() - a.size() > 1) return false;
  std::size_t prefix = 0;
  while (prefix < a.size() && a[prefix] == b[prefix]) ++prefix;
  if (a.size() == b.size()) {
    if (prefix == a.size()) return true;
    return a.substr(prefix + 1) == b.substr(prefix + 1);
  }
  return a.substr(prefix) == b.substr(prefix + 1);
}

inline bool within_one_edit(std::string_view a, std::string_view b) {
  return within_one_edit(utf8::decode(a), utf8::decode(b));
}

// The word itself followed by its distinct single-character deletions. A
// one-character word yields the empty key, which is how "a" meets "b".
inline std::vector<std::string> deletion_keys(std::string_view word) {
  const std::u32string cps = utf8::decode(word);
  std::vector<std::string> keys;
  keys.reserve(cps.size() + 1);
  keys.emplace_back(word);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    // Deleting either of two equal neighbours gives the same key.
    if (i > 0 && cps[i] == cps[i - 1]) continue;
    std::u32string del = cps;
    del.erase(i, 1);
    keys.push_back(utf8::encode(del));
  }
  return keys;
}

struct Cluster {
  std::vector<WordId> candidates;  // ascending id

  std::size_t size() const { return candidates.size(); }
  bool empty() const { return candidates.empty(); }
  bool operator==(const Cluster&) const = default;
};

class ClusterIndex {
 public:
  using DeletionMap = std::unordered_map<std::string, std::vector<WordId>>;

  ClusterIndex() = default;

  explicit ClusterIndex(Vocabulary vocab) : vocab_(std::move(vocab)) {
    if (vocab_.empty()) throw ContractViolation("cannot index an empty vocabulary");
    for (WordId id = 0; id < vocab_.size(); ++id) {
      const Token& w = vocab_.word(id);
      max_word_len_ = std::max(max_word_len_, utf8::length(w));
      for (std::string& key : deletion_keys(w)) deletion_map_[std::move(key)].push_back(id);
    }
  }

  const Vocabulary& vocab() const { return vocab_; }
  const DeletionMap& deletion_map() const { return deletion_map_; }
  std::size_t max_word_len() const { return max_word_len_; }
  std::uint64_t fingerprint() const { return vocab_.fingerprint(); }

  // Memoization is on by default; results never depend on it.
  void set_cache_enabled(bool enabled) { cache_ = enabled ? std::make_shared<Cache>() : nullptr; }

  Cluster query(std::string_view word) const {
    if (word.empty()) throw ContractViolation("query word must be non-empty");
    if (cache_) {
      std::shared_lock lock(cache_->mutex);
      auto it = cache_->entries.find(std::string(word));
      if (it != cache_->entries.end()) return it->second;
    }
    Cluster result = compute(word);
    if (cache_) {
      std::unique_lock lock(cache_->mutex);
      cache_->entries.emplace(std::string(word), result);
    }
    return result;
  }

  // Union of the clusters of every vocabulary word.
  std::vector<WordId> effective_vocabulary() const {
    std::vector<bool> seen(vocab_.size(), false);
    for (WordId id = 0; id < vocab_.size(); ++id)
      for (WordId c : compute(vocab_.word(id)).candidates) seen[c] = true;
    std::vector<WordId> ids;
    for (WordId id = 0; id < vocab_.size(); ++id)
      if (seen[id]) ids.push_back(id);
    return ids;
  }

 private:
  struct Cache {
    std::shared_mutex mutex;
    std::unordered_map<std::string, Cluster> entries;
  };

  Cluster compute(std::string_view word) const {
    const std::u32string query = utf8::decode(word);
    Cluster out;
    if (query.size() > max_word_len_ + 1) return out;
    for (const std::string& key : deletion_keys(word)) {
      auto it = deletion_map_.find(key);
      if (it == deletion_map_.end()) continue;
      out.candidates.insert(out.candidates.end(), it->second.begin(), it->second.end());
    }
    std::sort(out.candidates.begin(), out.candidates.end());
    out.candidates.erase(std::unique(out.candidates.begin(), out.candidates.end()),
                         out.candidates.end());
    std::erase_if(out.candidates, [&](WordId id) {
      return !within_one_edit(query, utf8::decode(vocab_.word(id)));
    });
    return out;
  }

  Vocabulary vocab_;
  DeletionMap deletion_map_;
  std::size_t max_word_len_ = 0;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

inline ClusterIndex build_index(Vocabulary vocab) { return ClusterIndex(std::move(vocab)); }

namespace index_format {
inline constexpr std::string_view kMagic = "FIRX";
inline constexpr std::uint8_t kVersion = 1;
}  // namespace index_format

// Layout: magic "FIRX", u8 version, u32 entry count, then per entry
// (u32 byte length, word bytes, u64 count), then the u64 vocabulary
// fingerprint. The deletion map is rebuilt on load.
inline std::string serialize_index(const ClusterIndex& index) {
  binary::Writer w;
  w.bytes(index_format::kMagic);
  w.u8(index_format::kVersion);
  const Vocabulary& v = index.vocab();
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const VocabEntry& e : v.entries()) {
    w.u32(static_cast<std::uint32_t>(e.word.size()));
    w.bytes(e.word);
    w.u64(e.count);
  }
  w.u64(v.fingerprint());
  return w.buffer();
}

inline ClusterIndex deserialize_index(std::string_view data) {
  binary::Reader r(data);
  if (r.remaining() < index_format::kMagic.size() ||
      r.bytes(index_format::kMagic.size()) != index_format::kMagic)
    throw FormatError(FormatError::Kind::kBadMagic, "not a FiRo index");
  if (r.u8() != index_format::kVersion)
    throw FormatError(FormatError::Kind::kVersionMismatch, "unsupported index version");
  const std::uint32_t n = r.u32();
  r.need(static_cast<std::size_t>(n) * 12);
  std::vector<VocabEntry> entries;
  entries.reserve(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::uint32_t len = r.u32();
    std::string word(r.bytes(len));
    entries.push_back({std::move(word), r.u64()});
  }
  const std::uint64_t fingerprint = r.u64();
  Vocabulary vocab(std::move(entries));
  if (vocab.fingerprint() != fingerprint)
    throw ConfigError("index fingerprint does not match its vocabulary");
  return ClusterIndex(std::move(vocab));
}

inline void save_index(const ClusterIndex& index, const std::string& path) {
  write_file(path, serialize_index(index));
}

inline ClusterIndex load_index(const std::string& path) {
  return deserialize_index(read_file(path));
}

}  // namespace firo

#endif  // FIRO_CLUSTER_INDEX_HPP
