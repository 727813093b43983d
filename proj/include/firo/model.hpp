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

// The sanitizer network.
//
//   word embedding   h = [e(first) ; mean e(internal) ; e(last)]
//   context          c_i = a h_i + (1 - a)/2 (h_{i-1} + h_{i+1}),  a = logistic(alpha_raw)
//   decoding         softmax over the cluster of token i of  c_i . u_w
//
// The library is templated on the scalar type: float for trained models and
// the on-disk format, double for gradient checking.

#ifndef FIRO_MODEL_HPP
#define FIRO_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "firo/binary_io.hpp"
#include "firo/cluster_index.hpp"
#include "firo/error.hpp"
#include "firo/random.hpp"
#include "firo/text.hpp"

namespace firo {

inline constexpr std::string_view kDefaultAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789'-";
inline constexpr std::size_t kDefaultCharDim = 64;

// Dense row-major matrix.
template <typename Real>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Real> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, Real(0)) {}

  std::span<Real> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const Real> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

template <typename Real>
Real dot(std::span<const Real> a, std::span<const Real> b) {
  Real s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

template <typename Real>
void axpy(Real alpha, std::span<const Real> x, std::span<Real> y) {
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

template <typename Real>
Real logistic(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

// Character embeddings. Row alphabet.size() is the shared unknown-character
// vector.
template <typename Real>
struct CharTable {
  std::string alphabet{kDefaultAlphabet};
  Matrix<Real> table;

  std::size_t dim() const { return table.cols; }
  std::size_t unk_row() const { return alphabet.size(); }

  std::size_t row_of(char32_t c) const {
    if (c < 0x80) {
      const std::size_t pos = alphabet.find(static_cast<char>(c));
      if (pos != std::string::npos) return pos;
    }
    return unk_row();
  }

  std::vector<std::size_t> rows_of(std::string_view word) const {
    std::vector<std::size_t> rows;
    for (char32_t c : utf8::decode(word)) rows.push_back(row_of(c));
    return rows;
  }

  bool operator==(const CharTable&) const = default;
};

template <typename Real>
struct BasicModel {
  CharTable<Real> chars;
  Real alpha_raw = 0;
  Matrix<Real> output;  // one row of width 3 * d_char per vocabulary word
  std::uint64_t vocab_fingerprint = 0;

  std::size_t d_char() const { return chars.dim(); }
  std::size_t word_dim() const { return 3 * chars.dim(); }
  std::size_t vocab_size() const { return output.rows; }
  Real alpha() const { return logistic(alpha_raw); }

  bool operator==(const BasicModel&) const = default;
};

using FiroModel = BasicModel<float>;

// Fresh model: tables uniform in [-1/sqrt(n), 1/sqrt(n)] for row width n,
// alpha = 0.5.
template <typename Real = float>
BasicModel<Real> init_model(const Vocabulary& vocab, std::size_t d_char, std::uint64_t seed) {
  if (d_char == 0) throw ContractViolation("d_char must be positive");
  BasicModel<Real> m;
  Rng rng(derive_seed(seed, {0x1417}));
  m.chars.table = Matrix<Real>(m.chars.alphabet.size() + 1, d_char);
  const double char_bound = 1.0 / std::sqrt(static_cast<double>(d_char));
  for (Real& v : m.chars.table.data) v = static_cast<Real>(rng.uniform(-char_bound, char_bound));
  m.output = Matrix<Real>(vocab.size(), 3 * d_char);
  const double out_bound = 1.0 / std::sqrt(static_cast<double>(3 * d_char));
  for (Real& v : m.output.data) v = static_cast<Real>(rng.uniform(-out_bound, out_bound));
  m.alpha_raw = 0;
  m.vocab_fingerprint = vocab.fingerprint();
  return m;
}

template <typename To, typename From>
BasicModel<To> model_cast(const BasicModel<From>& m) {
  BasicModel<To> out;
  out.chars.alphabet = m.chars.alphabet;
  out.chars.table = Matrix<To>(m.chars.table.rows, m.chars.table.cols);
  std::copy(m.chars.table.data.begin(), m.chars.table.data.end(), out.chars.table.data.begin());
  out.alpha_raw = static_cast<To>(m.alpha_raw);
  out.output = Matrix<To>(m.output.rows, m.output.cols);
  std::copy(m.output.data.begin(), m.output.data.end(), out.output.data.begin());
  out.vocab_fingerprint = m.vocab_fingerprint;
  return out;
}

// Writes [e(first), mean of internal, e(last)] into out (length 3d). Words of
// length one or two have a zero middle block.
template <typename Real>
void compose_into(const CharTable<Real>& chars, std::span<const std::size_t> rows,
                  std::span<Real> out) {
  const std::size_t d = chars.dim();
  std::fill(out.begin(), out.end(), Real(0));
  if (rows.empty()) return;
  const auto first = chars.table.row(rows.front());
  const auto last = chars.table.row(rows.back());
  std::copy(first.begin(), first.end(), out.begin());
  std::copy(last.begin(), last.end(), out.begin() + 2 * d);
  if (rows.size() > 2) {
    auto mid = out.subspan(d, d);
    // Summing in sorted row order makes the result bit-identical under any
    // permutation of the internal characters.
    std::vector<std::size_t> internal(rows.begin() + 1, rows.end() - 1);
    std::sort(internal.begin(), internal.end());
    for (std::size_t r : internal) axpy<Real>(Real(1), chars.table.row(r), mid);
    const Real inv = Real(1) / static_cast<Real>(internal.size());
    for (Real& v : mid) v *= inv;
  }
}

template <typename Real>
std::vector<Real> compose_word_embedding(const CharTable<Real>& chars, std::string_view word) {
  if (word.empty()) throw ContractViolation("cannot embed an empty word");
  std::vector<Real> out(3 * chars.dim());
  const std::vector<std::size_t> rows = chars.rows_of(word);
  compose_into<Real>(chars, rows, out);
  return out;
}

template <typename Real>
std::vector<Real> compose_word_embedding(const BasicModel<Real>& m, std::string_view word) {
  return compose_word_embedding(m.chars, word);
}

template <typename Real>
Matrix<Real> compose_sentence(const CharTable<Real>& chars, const std::vector<Token>& tokens) {
  Matrix<Real> h(tokens.size(), 3 * chars.dim());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty()) throw ContractViolation("cannot embed an empty word");
    const std::vector<std::size_t> rows = chars.rows_of(tokens[i]);
    compose_into<Real>(chars, rows, h.row(i));
  }
  return h;
}

// c_i = alpha h_i + (1 - alpha)/2 (h_{i-1} + h_{i+1}), zero vectors past
// either end.
template <typename Real>
Matrix<Real> aggregate_context(Real alpha, const Matrix<Real>& h) {
  if (h.rows == 0) throw ContractViolation("aggregate_context needs at least one embedding");
  const Real side = Real(0.5) * (Real(1) - alpha);
  Matrix<Real> c(h.rows, h.cols);
  for (std::size_t i = 0; i < h.rows; ++i) {
    auto out = c.row(i);
    const auto self = h.row(i);
    for (std::size_t k = 0; k < h.cols; ++k) out[k] = alpha * self[k];
    if (side != Real(0)) {
      if (i > 0) axpy<Real>(side, h.row(i - 1), out);
      if (i + 1 < h.rows) axpy<Real>(side, h.row(i + 1), out);
    }
  }
  return c;
}

template <typename Real>
Matrix<Real> aggregate_context(const BasicModel<Real>& m, const Matrix<Real>& h) {
  return aggregate_context(m.alpha(), h);
}

template <typename Real>
std::vector<Real> cluster_logits(const BasicModel<Real>& m, std::span<const Real> contextual,
                                 const Cluster& cluster) {
  std::vector<Real> logits(cluster.size());
  for (std::size_t j = 0; j < cluster.size(); ++j)
    logits[j] = dot<Real>(contextual, m.output.row(cluster.candidates[j]));
  return logits;
}

// Max-shifted softmax.
template <typename Real>
std::vector<Real> softmax(std::span<const Real> logits) {
  if (logits.empty()) throw ContractViolation("softmax of an empty vector");
  const Real peak = *std::max_element(logits.begin(), logits.end());
  std::vector<Real> p(logits.size());
  Real total = 0;
  for (std::size_t j = 0; j < logits.size(); ++j) total += (p[j] = std::exp(logits[j] - peak));
  for (Real& v : p) v /= total;
  return p;
}

template <typename Real>
std::vector<Real> score_cluster(const BasicModel<Real>& m, std::span<const Real> contextual,
                                const Cluster& cluster) {
  if (cluster.empty()) throw ContractViolation("score_cluster needs a non-empty cluster");
  const std::vector<Real> logits = cluster_logits(m, contextual, cluster);
  return softmax<Real>(logits);
}

struct TokenDecision {
  std::size_t cluster_size = 0;
  std::optional<WordId> chosen;  // nullopt means the token passed through
  double probability = 1.0;

  bool passthrough() const { return !chosen.has_value(); }
};

struct SanitizeResult {
  std::vector<Token> output_tokens;
  std::vector<TokenDecision> per_token;
};

template <typename Real>
void check_fingerprint(const BasicModel<Real>& m, const ClusterIndex& index) {
  if (m.vocab_fingerprint != index.fingerprint() || m.vocab_size() != index.vocab().size())
    throw ConfigError("model was trained against a different vocabulary than the index");
}

// Replaces every token by the most probable word of its cluster (lowest id on
// ties); tokens with an empty cluster pass through.
template <typename Real>
SanitizeResult sanitize(const BasicModel<Real>& m, const ClusterIndex& index,
                        const std::vector<Token>& tokens) {
  check_fingerprint(m, index);
  SanitizeResult result;
  result.output_tokens.reserve(tokens.size());
  result.per_token.reserve(tokens.size());
  if (tokens.empty()) return result;
  const Matrix<Real> ctx = aggregate_context(m, compose_sentence(m.chars, tokens));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Cluster cluster = index.query(tokens[i]);
    TokenDecision d;
    d.cluster_size = cluster.size();
    if (cluster.empty()) {
      result.output_tokens.push_back(tokens[i]);
    } else {
      const std::vector<Real> p = score_cluster(m, ctx.row(i), cluster);
      std::size_t best = 0;
      for (std::size_t j = 1; j < p.size(); ++j)
        if (p[j] > p[best]) best = j;
      d.chosen = cluster.candidates[best];
      d.probability = static_cast<double>(p[best]);
      result.output_tokens.push_back(index.vocab().word(*d.chosen));
    }
    result.per_token.push_back(d);
  }
  return result;
}

template <typename Real>
SanitizeResult sanitize(const BasicModel<Real>& m, const ClusterIndex& index, const Sentence& s) {
  return sanitize(m, index, s.tokens);
}

namespace model_format {
inline constexpr std::string_view kMagic = "FIRO";
inline constexpr std::uint8_t kVersion = 1;
}  // namespace model_format

// Little-endian: "FIRO", u8 version, u32 d_char, u32 alphabet size, alphabet
// bytes, char table (alphabet size + 1 rows, unknown row last) as f32,
// alpha_raw f32, u32 vocab size, u64 vocab fingerprint, output table as f32.
inline std::string serialize_model(const FiroModel& m) {
  binary::Writer w;
  w.bytes(model_format::kMagic);
  w.u8(model_format::kVersion);
  w.u32(static_cast<std::uint32_t>(m.d_char()));
  w.u32(static_cast<std::uint32_t>(m.chars.alphabet.size()));
  w.bytes(m.chars.alphabet);
  for (float v : m.chars.table.data) w.f32(v);
  w.f32(m.alpha_raw);
  w.u32(static_cast<std::uint32_t>(m.vocab_size()));
  w.u64(m.vocab_fingerprint);
  for (float v : m.output.data) w.f32(v);
  return w.buffer();
}

inline FiroModel deserialize_model(std::string_view data) {
  binary::Reader r(data);
  if (r.remaining() < model_format::kMagic.size() ||
      r.bytes(model_format::kMagic.size()) != model_format::kMagic)
    throw FormatError(FormatError::Kind::kBadMagic, "not a FiRo model");
  const std::uint8_t version = r.u8();
  if (version != model_format::kVersion)
    throw FormatError(FormatError::Kind::kVersionMismatch,
                      "unsupported model version " + std::to_string(version));
  FiroModel m;
  const std::uint32_t d = r.u32();
  const std::uint32_t alphabet_size = r.u32();
  m.chars.alphabet = std::string(r.bytes(alphabet_size));
  r.need(static_cast<std::size_t>(alphabet_size + 1) * d * 4);
  m.chars.table = Matrix<float>(alphabet_size + 1, d);
  for (float& v : m.chars.table.data) v = r.f32();
  m.alpha_raw = r.f32();
  const std::uint32_t vocab_size = r.u32();
  m.vocab_fingerprint = r.u64();
  r.need(static_cast<std::size_t>(vocab_size) * 3 * d * 4);
  m.output = Matrix<float>(vocab_size, 3 * static_cast<std::size_t>(d));
  for (float& v : m.output.data) v = r.f32();
  return m;
}

inline void save_model(const FiroModel& m, const std::string& path) {
  write_file(path, serialize_model(m));
}

inline FiroModel load_model(const std::string& path) { return deserialize_model(read_file(path)); }

}  // namespace firo

#endif  // FIRO_MODEL_HPP
