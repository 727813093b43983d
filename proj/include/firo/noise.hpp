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

// Character-level perturbations confined to a single word, and budgeted
// sentence noising.

#ifndef FIRO_NOISE_HPP
#define FIRO_NOISE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "firo/error.hpp"
#include "firo/random.hpp"
#include "firo/text.hpp"

namespace firo {

enum class OpKind : std::uint8_t { kSubstitute, kDelete, kInsert, kSwapAdjacent };

inline constexpr std::array<OpKind, 4> kAllOpKinds = {
    OpKind::kSubstitute, OpKind::kDelete, OpKind::kInsert, OpKind::kSwapAdjacent};

inline constexpr std::u32string_view kNoiseAlphabet = U"abcdefghijklmnopqrstuvwxyz";

struct PerturbOp {
  OpKind kind = OpKind::kSubstitute;
  std::size_t position = 0;  // in code points
  std::optional<char32_t> replacement;

  bool operator==(const PerturbOp&) const = default;
};

class OpSet {
 public:
  OpSet() = default;
  OpSet(std::initializer_list<OpKind> kinds) {
    for (OpKind k : kinds) insert(k);
  }

  static OpSet all() { return {OpKind::kSubstitute, OpKind::kDelete, OpKind::kInsert,
                               OpKind::kSwapAdjacent}; }

  void insert(OpKind k) { bits_ |= bit(k); }
  bool contains(OpKind k) const { return (bits_ & bit(k)) != 0; }
  bool empty() const { return bits_ == 0; }
  bool operator==(const OpSet&) const = default;

 private:
  static std::uint8_t bit(OpKind k) { return static_cast<std::uint8_t>(1u << static_cast<int>(k)); }
  std::uint8_t bits_ = 0;
};

// Parses a comma list of swap, sub, del, ins.
inline OpSet parse_ops(std::string_view text) {
  OpSet ops;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view name = text.substr(start, comma - start);
    if (name == "swap") ops.insert(OpKind::kSwapAdjacent);
    else if (name == "sub") ops.insert(OpKind::kSubstitute);
    else if (name == "del") ops.insert(OpKind::kDelete);
    else if (name == "ins") ops.insert(OpKind::kInsert);
    else throw ContractViolation("unknown perturbation '" + std::string(name) +
                                 "' (expected swap, sub, del, ins)");
    start = comma + 1;
  }
  if (ops.empty()) throw ContractViolation("empty perturbation set");
  return ops;
}

inline Token apply_op(std::string_view word, const PerturbOp& op) {
  std::u32string w = utf8::decode(word);
  const std::size_t n = w.size();
  const bool needs_char = op.kind == OpKind::kSubstitute || op.kind == OpKind::kInsert;
  if (needs_char != op.replacement.has_value())
    throw ContractViolation("replacement character must be given exactly for sub/ins");
  switch (op.kind) {
    case OpKind::kSubstitute:
      if (op.position >= n) throw ContractViolation("substitute position out of range");
      w[op.position] = *op.replacement;
      break;
    case OpKind::kDelete:
      if (op.position >= n) throw ContractViolation("delete position out of range");
      if (n < 2) throw ContractViolation("delete would empty the word");
      w.erase(op.position, 1);
      break;
    case OpKind::kInsert:
      if (op.position > n) throw ContractViolation("insert position out of range");
      w.insert(w.begin() + static_cast<std::ptrdiff_t>(op.position), *op.replacement);
      break;
    case OpKind::kSwapAdjacent:
      if (op.position + 1 >= n) throw ContractViolation("swap needs position + 1 in range");
      std::swap(w[op.position], w[op.position + 1]);
      break;
  }
  return utf8::encode(w);
}

// Words of two or more characters that are not detached punctuation.
inline bool is_perturbable(std::string_view token) {
  return utf8::length(token) >= 2 && !is_punct_token(token);
}

// Draws an op kind uniformly among the allowed kinds that can change the word,
// then a position and character uniformly among those that change it.
inline std::optional<PerturbOp> sample_op(std::string_view word, const OpSet& ops, Rng& rng) {
  const std::u32string w = utf8::decode(word);
  const std::size_t n = w.size();
  std::vector<std::size_t> swappable;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (w[i] != w[i + 1]) swappable.push_back(i);

  std::vector<OpKind> kinds;
  for (OpKind k : kAllOpKinds) {
    if (!ops.contains(k)) continue;
    if (k == OpKind::kSubstitute && n == 0) continue;
    if (k == OpKind::kDelete && n < 2) continue;
    if (k == OpKind::kSwapAdjacent && swappable.empty()) continue;
    kinds.push_back(k);
  }
  if (kinds.empty()) return std::nullopt;

  PerturbOp op;
  op.kind = kinds[rng.index(kinds.size())];
  switch (op.kind) {
    case OpKind::kSubstitute: {
      op.position = rng.index(n);
      char32_t c;
      do {
        c = kNoiseAlphabet[rng.index(kNoiseAlphabet.size())];
      } while (c == w[op.position]);
      op.replacement = c;
      break;
    }
    case OpKind::kDelete:
      op.position = rng.index(n);
      break;
    case OpKind::kInsert:
      op.position = rng.index(n + 1);
      op.replacement = kNoiseAlphabet[rng.index(kNoiseAlphabet.size())];
      break;
    case OpKind::kSwapAdjacent:
      op.position = swappable[rng.index(swappable.size())];
      break;
  }
  return op;
}

// Every distinct word one allowed op away from `word`, excluding the word.
inline std::vector<Token> single_op_neighbors(std::string_view word, const OpSet& ops) {
  const std::u32string w = utf8::decode(word);
  const std::size_t n = w.size();
  std::set<Token> seen;
  std::vector<Token> out;
  auto add = [&](const PerturbOp& op) {
    Token t = apply_op(word, op);
    if (t != word && seen.insert(t).second) out.push_back(std::move(t));
  };
  for (OpKind k : kAllOpKinds) {
    if (!ops.contains(k)) continue;
    switch (k) {
      case OpKind::kSubstitute:
        for (std::size_t i = 0; i < n; ++i)
          for (char32_t c : kNoiseAlphabet) add({k, i, c});
        break;
      case OpKind::kDelete:
        if (n >= 2)
          for (std::size_t i = 0; i < n; ++i) add({k, i, std::nullopt});
        break;
      case OpKind::kInsert:
        for (std::size_t i = 0; i <= n; ++i)
          for (char32_t c : kNoiseAlphabet) add({k, i, c});
        break;
      case OpKind::kSwapAdjacent:
        for (std::size_t i = 0; i + 1 < n; ++i) add({k, i, std::nullopt});
        break;
    }
  }
  return out;
}

struct PerturbationBudget {
  std::size_t max_words = 0;  // D
};

inline std::vector<std::size_t> perturbable_positions(const std::vector<Token>& tokens) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (is_perturbable(tokens[i])) out.push_back(i);
  return out;
}

// Noises min(D, #perturbable) distinct tokens with one op each.
inline Sentence perturb_sentence(const Sentence& sentence, PerturbationBudget budget,
                                 std::uint64_t seed, const OpSet& ops = OpSet::all()) {
  if (budget.max_words == 0) return sentence;
  Rng rng(seed);
  std::vector<std::size_t> positions = perturbable_positions(sentence.tokens);
  // Partial Fisher-Yates: the first k entries are a uniform k-subset.
  const std::size_t k = std::min(budget.max_words, positions.size());
  for (std::size_t i = 0; i < k; ++i)
    std::swap(positions[i], positions[i + rng.index(positions.size() - i)]);
  positions.resize(k);
  std::sort(positions.begin(), positions.end());

  std::vector<Token> tokens = sentence.tokens;
  for (std::size_t p : positions) {
    if (auto op = sample_op(tokens[p], ops, rng)) tokens[p] = apply_op(tokens[p], *op);
  }
  return make_sentence(std::move(tokens));
}

inline std::size_t word_difference(const std::vector<Token>& x, const std::vector<Token>& x_star) {
  if (x.size() != x_star.size())
    throw ContractViolation("word_difference needs equal token counts");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < x.size(); ++i) diff += x[i] != x_star[i];
  return diff;
}

inline std::size_t word_difference(const Sentence& x, const Sentence& x_star) {
  return word_difference(x.tokens, x_star.tokens);
}

}  // namespace firo

#endif  // FIRO_NOISE_HPP
