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

// Tokenization, UTF-8 helpers, corpus and vocabulary I/O.

#ifndef FIRO_TEXT_HPP
#define FIRO_TEXT_HPP

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "firo/error.hpp"

namespace firo {

// A lowercase, whitespace-free, non-empty UTF-8 word.
using Token = std::string;

struct Sentence {
  std::vector<Token> tokens;
  std::string original;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Sentence& other) const { return tokens == other.tokens; }
};

namespace utf8 {

inline std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = b0;
    if (b0 >= 0xF0 && b0 < 0xF8) {
      len = 4;
      cp = b0 & 0x07;
    } else if (b0 >= 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if (b0 >= 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    }
    bool ok = len == 1 || i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      // Stray byte: keep it as a Latin-1 code point so nothing is dropped.
      out.push_back(b0);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append(out, cp);
  return out;
}

// Simple case folding for Latin, Greek and Cyrillic capitals.
inline char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c < 0xC0) return c;
  if (c <= 0xDE && c != 0xD7) return c + 32;
  if (c >= 0x100 && c <= 0x17F) {
    if (c == 0x178) return 0xFF;
    if ((c <= 0x137 || (c >= 0x14A && c <= 0x177)) && c % 2 == 0) return c + 1;
    if (((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) && c % 2 == 1)
      return c + 1;
    return c;
  }
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

inline bool is_space(char32_t c) {
  return c == U' ' || (c >= 0x09 && c <= 0x0D) || c == 0x85 || c == 0xA0 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 ||
         c == 0x202F || c == 0x205F || c == 0x3000;
}

inline std::size_t length(std::string_view s) { return decode(s).size(); }

}  // namespace utf8

inline std::string lowercase(std::string_view s) {
  std::u32string cps = utf8::decode(s);
  for (char32_t& c : cps) c = utf8::to_lower(c);
  return utf8::encode(cps);
}

// Characters that are split off the start and end of a word.
inline bool is_edge_punct(char32_t c) {
  switch (c) {
    case U'.': case U',': case U'!': case U'?': case U';': case U':':
    case U'"': case U'\'': case U'(': case U')': case U'[': case U']':
      return true;
    default:
      return false;
  }
}

// True for tokens made only of detachable punctuation, e.g. "," or ").".
inline bool is_punct_token(std::string_view token) {
  if (token.empty()) return false;
  for (char32_t c : utf8::decode(token))
    if (!is_edge_punct(c)) return false;
  return true;
}

// Splits on whitespace, lowercases, and detaches the leading and trailing
// punctuation runs of each chunk as tokens of their own.
inline std::vector<Token> tokenize(std::string_view raw) {
  std::vector<Token> out;
  const std::u32string cps = utf8::decode(raw);
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && utf8::is_space(cps[i])) ++i;
    std::size_t end = i;
    while (end < cps.size() && !utf8::is_space(cps[end])) ++end;
    if (end == i) break;

    std::size_t lead = i;
    while (lead < end && is_edge_punct(cps[lead])) ++lead;
    std::size_t trail = end;
    while (trail > lead && is_edge_punct(cps[trail - 1])) --trail;

    auto emit = [&](std::size_t a, std::size_t b) {
      if (a >= b) return;
      std::u32string piece(cps.begin() + a, cps.begin() + b);
      for (char32_t& c : piece) c = utf8::to_lower(c);
      out.push_back(utf8::encode(piece));
    };
    if (lead == end) {
      emit(i, end);  // all punctuation
    } else {
      emit(i, lead);
      emit(lead, trail);
      emit(trail, end);
    }
    i = end;
  }
  return out;
}

inline std::string join(const std::vector<Token>& tokens, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

inline Sentence make_sentence(std::string_view raw) {
  return Sentence{tokenize(raw), std::string(raw)};
}

inline Sentence make_sentence(std::vector<Token> tokens) {
  Sentence s;
  s.original = join(tokens);
  s.tokens = std::move(tokens);
  return s;
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed: " + path);
}

// Splits on LF. A final newline does not start an extra line; a CR before
// the LF is dropped.
inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = nl + 1;
  }
  return lines;
}

// One sentence per line.
inline std::vector<Sentence> load_corpus(const std::string& path) {
  std::vector<Sentence> corpus;
  for (const std::string& line : split_lines(read_file(path)))
    corpus.push_back(make_sentence(line));
  return corpus;
}

struct VocabEntry {
  Token word;
  std::uint64_t count = 0;

  bool operator==(const VocabEntry&) const = default;
};

using WordId = std::uint32_t;

// Frequency-ranked word list; a word's id is its rank.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Sorts by count descending (ties lexicographic). Duplicate words are an
  // error here; load_vocabulary merges them before construction.
  explicit Vocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](const VocabEntry& a, const VocabEntry& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.word < b.word;
    });
    ids_.reserve(entries_.size());
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      if (entries_[k].word.empty()) throw ContractViolation("empty vocabulary word");
      if (!ids_.emplace(entries_[k].word, static_cast<WordId>(k)).second)
        throw ContractViolation("duplicate vocabulary word: " + entries_[k].word);
    }
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<VocabEntry>& entries() const { return entries_; }
  const Token& word(WordId id) const { return entries_.at(id).word; }
  std::uint64_t count(WordId id) const { return entries_.at(id).count; }

  std::optional<WordId> id(std::string_view word) const {
    auto it = ids_.find(std::string(word));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view word) const { return id(word).has_value(); }

  // FNV-1a 64 of the newline-joined words in id order.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      if (k) h = fnv1a64("\n", h);
      h = fnv1a64(entries_[k].word, h);
    }
    return h;
  }

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, WordId> ids_;
};

// Parses `word<TAB>count` lines, lowercases and merges duplicates, keeps the
// top max_size entries.
inline Vocabulary parse_vocabulary(std::string_view text, std::size_t max_size) {
  std::map<std::string, std::uint64_t> merged;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(text)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw ParseError("expected word<TAB>count", line_no);
    const std::string word = lowercase(line.substr(0, tab));
    const std::string_view count_text = std::string_view(line).substr(tab + 1);
    if (word.empty()) throw ParseError("empty word", line_no);
    for (char32_t c : utf8::decode(word))
      if (utf8::is_space(c)) throw ParseError("word contains whitespace", line_no);
    std::uint64_t count = 0;
    const auto [ptr, ec] =
        std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
    if (count_text.empty() || ec != std::errc() || ptr != count_text.data() + count_text.size())
      throw ParseError("count is not a non-negative integer: '" + std::string(count_text) + "'",
                       line_no);
    merged[word] += count;
  }
  std::vector<VocabEntry> entries;
  entries.reserve(merged.size());
  for (auto& [word, count] : merged) entries.push_back({word, count});
  Vocabulary sorted(std::move(entries));
  if (sorted.size() <= max_size) return sorted;
  std::vector<VocabEntry> top(sorted.entries().begin(),
                              sorted.entries().begin() + static_cast<std::ptrdiff_t>(max_size));
  return Vocabulary(std::move(top));
}

inline Vocabulary load_vocabulary(const std::string& path, std::size_t max_size = 100000) {
  return parse_vocabulary(read_file(path), max_size);
}

inline std::string format_vocabulary(const Vocabulary& vocab) {
  std::string out;
  for (const VocabEntry& e : vocab.entries()) {
    out += e.word;
    out += '\t';
    out += std::to_string(e.count);
    out += '\n';
  }
  return out;
}

}  // namespace firo

#endif  // FIRO_TEXT_HPP
