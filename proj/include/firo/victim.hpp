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

// Query-only view of a classifier, and the small bag-of-embeddings classifier
// used as the attacked model in desk-scale experiments.

#ifndef FIRO_VICTIM_HPP
#define FIRO_VICTIM_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "firo/binary_io.hpp"
#include "firo/error.hpp"
#include "firo/log.hpp"
#include "firo/metrics.hpp"
#include "firo/model.hpp"
#include "firo/random.hpp"
#include "firo/text.hpp"

namespace firo {

using Label = std::size_t;

// Black-box classifier. Attack code sees only predict/loss; every call is
// counted.
class Victim {
 public:
  Victim() = default;
  // Copies start with a fresh counter.
  Victim(const Victim&) {}
  Victim& operator=(const Victim&) { return *this; }
  virtual ~Victim() = default;

  Label predict(const std::vector<Token>& tokens) const {
    ++queries_;
    return do_predict(tokens);
  }

  double loss(const std::vector<Token>& tokens, Label gold) const {
    ++queries_;
    return do_loss(tokens, gold);
  }

  std::uint64_t queries() const { return queries_.load(); }
  void reset_queries() const { queries_ = 0; }

 protected:
  virtual Label do_predict(const std::vector<Token>& tokens) const = 0;
  virtual double do_loss(const std::vector<Token>& tokens, Label gold) const = 0;

 private:
  mutable std::atomic<std::uint64_t> queries_{0};
};

// Runs a sanitizer in front of another victim: the defended pipeline.
class SanitizedVictim : public Victim {
 public:
  SanitizedVictim(const Victim& inner, Sanitizer sanitizer)
      : inner_(inner), sanitizer_(std::move(sanitizer)) {}

 protected:
  Label do_predict(const std::vector<Token>& tokens) const override {
    return inner_.predict(sanitizer_(tokens));
  }
  double do_loss(const std::vector<Token>& tokens, Label gold) const override {
    return inner_.loss(sanitizer_(tokens), gold);
  }

 private:
  const Victim& inner_;
  Sanitizer sanitizer_;
};

struct LabeledSentence {
  std::vector<Token> tokens;
  Label label = 0;
};

struct LabeledData {
  std::vector<std::string> labels;  // label index -> name, sorted
  std::vector<LabeledSentence> examples;
};

// text<TAB>label lines. With `known_labels` the label set is fixed and an
// unseen label is an error; otherwise labels are collected and sorted.
inline LabeledData parse_labeled(std::string_view text,
                                 const std::vector<std::string>& known_labels = {}) {
  std::vector<std::pair<std::string, std::string>> rows;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(text)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string::npos) throw ParseError("expected text<TAB>label", line_no);
    std::string label = line.substr(tab + 1);
    if (label.empty()) throw ParseError("empty label", line_no);
    rows.emplace_back(line.substr(0, tab), std::move(label));
  }
  LabeledData data;
  if (known_labels.empty()) {
    std::set<std::string> names;
    for (const auto& r : rows) names.insert(r.second);
    data.labels.assign(names.begin(), names.end());
  } else {
    data.labels = known_labels;
  }
  std::map<std::string, Label> ids;
  for (Label k = 0; k < data.labels.size(); ++k) ids[data.labels[k]] = k;
  line_no = 0;
  for (const auto& [text_part, label] : rows) {
    ++line_no;
    auto it = ids.find(label);
    if (it == ids.end()) throw ParseError("unknown label '" + label + "'", line_no);
    data.examples.push_back({tokenize(text_part), it->second});
  }
  return data;
}

inline LabeledData load_labeled(const std::string& path,
                                const std::vector<std::string>& known_labels = {}) {
  return parse_labeled(read_file(path), known_labels);
}

// Average of composed word embeddings -> linear layer -> softmax.
class ToyVictim : public Victim {
 public:
  CharTable<double> chars;
  Matrix<double> weights;      // labels x 3d
  std::vector<double> bias;    // labels
  std::vector<std::string> labels;

  std::size_t num_labels() const { return labels.size(); }

  // Mean composed embedding over the tokens; zeros for an empty sentence.
  std::vector<double> features(const std::vector<Token>& tokens) const {
    std::vector<double> f(3 * chars.dim(), 0.0);
    if (tokens.empty()) return f;
    const Matrix<double> h = compose_sentence(chars, tokens);
    for (std::size_t i = 0; i < h.rows; ++i) axpy<double>(1.0, h.row(i), f);
    for (double& v : f) v /= static_cast<double>(tokens.size());
    return f;
  }

  std::vector<double> logits(const std::vector<double>& f) const {
    std::vector<double> z(num_labels());
    for (Label k = 0; k < num_labels(); ++k) z[k] = bias[k] + dot<double>(weights.row(k), f);
    return z;
  }

  std::vector<double> probabilities(const std::vector<Token>& tokens) const {
    const std::vector<double> z = logits(features(tokens));
    return softmax<double>(z);
  }

  bool operator==(const ToyVictim& o) const {
    return chars == o.chars && weights == o.weights && bias == o.bias && labels == o.labels;
  }

 protected:
  Label do_predict(const std::vector<Token>& tokens) const override {
    const std::vector<double> z = logits(features(tokens));
    return static_cast<Label>(std::max_element(z.begin(), z.end()) - z.begin());
  }

  double do_loss(const std::vector<Token>& tokens, Label gold) const override {
    return -std::log(std::max(probabilities(tokens).at(gold), 1e-300));
  }
};

struct VictimTrainConfig {
  std::size_t d_char = 16;
  std::size_t epochs = 60;
  std::size_t batch_size = 50;
  double learning_rate = 0.01;
  std::uint64_t seed = 13;
};

struct VictimTrainStats {
  double train_accuracy = 0;
  bool underfit = false;  // training accuracy stayed below 0.9
};

inline double victim_accuracy(const Victim& v, const std::vector<LabeledSentence>& data) {
  if (data.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& ex : data) hit += v.predict(ex.tokens) == ex.label;
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

// Minibatch Adam on softmax cross-entropy.
inline ToyVictim train_toy_victim(const LabeledData& data, const VictimTrainConfig& config = {},
                                  VictimTrainStats* stats = nullptr) {
  std::set<Label> present;
  for (const auto& ex : data.examples) present.insert(ex.label);
  if (present.size() < 2) throw ContractViolation("victim training needs at least two labels");
  const std::size_t d = config.d_char;
  const std::size_t width = 3 * d;
  const std::size_t nl = data.labels.size();

  ToyVictim v;
  v.labels = data.labels;
  Rng rng(derive_seed(config.seed, {0x71c7}));
  v.chars.table = Matrix<double>(v.chars.alphabet.size() + 1, d);
  for (double& x : v.chars.table.data) x = rng.uniform(-1.0, 1.0) / std::sqrt(double(d));
  v.weights = Matrix<double>(nl, width);
  for (double& x : v.weights.data) x = rng.uniform(-1.0, 1.0) / std::sqrt(double(width));
  v.bias.assign(nl, 0.0);

  // Parameters flattened as [chars | weights | bias] for the optimizer.
  const std::size_t n_chars = v.chars.table.data.size();
  const std::size_t n_weights = v.weights.data.size();
  const std::size_t total = n_chars + n_weights + nl;
  std::vector<double> m(total, 0.0), s(total, 0.0), g(total, 0.0);
  auto param = [&](std::size_t k) -> double& {
    if (k < n_chars) return v.chars.table.data[k];
    if (k < n_chars + n_weights) return v.weights.data[k - n_chars];
    return v.bias[k - n_chars - n_weights];
  };

  std::vector<std::size_t> order(data.examples.size());
  std::uint64_t t = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffler(derive_seed(config.seed, {0x5e, epoch}));
    shuffler.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const LabeledSentence& ex = data.examples[order[b]];
        if (ex.tokens.empty()) continue;
        const std::vector<double> f = v.features(ex.tokens);
        const std::vector<double> z = v.logits(f);
        const std::vector<double> p = softmax<double>(z);
        std::vector<double> g_f(width, 0.0);
        for (Label k = 0; k < nl; ++k) {
          const double gz = p[k] - (k == ex.label ? 1.0 : 0.0);
          g[n_chars + n_weights + k] += gz;
          for (std::size_t c = 0; c < width; ++c) {
            g[n_chars + k * width + c] += gz * f[c];
            g_f[c] += gz * v.weights.row(k)[c];
          }
        }
        const double inv_len = 1.0 / static_cast<double>(ex.tokens.size());
        for (const Token& tok : ex.tokens) {
          const std::vector<std::size_t> rows = v.chars.rows_of(tok);
          auto add = [&](std::size_t row, std::size_t block, double share) {
            for (std::size_t c = 0; c < d; ++c)
              g[row * d + c] += share * inv_len * g_f[block * d + c];
          };
          add(rows.front(), 0, 1.0);
          add(rows.back(), 2, 1.0);
          if (rows.size() > 2)
            for (std::size_t k = 1; k + 1 < rows.size(); ++k)
              add(rows[k], 1, 1.0 / static_cast<double>(rows.size() - 2));
        }
      }
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      ++t;
      const double c1 = 1.0 - std::pow(0.9, double(t));
      const double c2 = 1.0 - std::pow(0.999, double(t));
      for (std::size_t k = 0; k < total; ++k) {
        const double gk = g[k] * inv_batch;
        m[k] = 0.9 * m[k] + 0.1 * gk;
        s[k] = 0.999 * s[k] + 0.001 * gk * gk;
        param(k) -= config.learning_rate * (m[k] / c1) / (std::sqrt(s[k] / c2) + 1e-8);
      }
    }
  }

  VictimTrainStats st;
  st.train_accuracy = victim_accuracy(v, data.examples);
  v.reset_queries();
  st.underfit = st.train_accuracy < 0.9;
  if (st.underfit)
    log::warn("victim training accuracy " + std::to_string(st.train_accuracy) + " is below 0.9");
  if (stats) *stats = st;
  return v;
}

namespace victim_format {
inline constexpr std::string_view kMagic = "FRVC";
inline constexpr std::uint8_t kVersion = 1;
}  // namespace victim_format

// "FRVC", u8 version, u32 d, u32 alphabet size, alphabet bytes, char table
// f64, u32 label count, per label (u32 length, bytes), weights f64, bias f64.
inline std::string serialize_victim(const ToyVictim& v) {
  binary::Writer w;
  w.bytes(victim_format::kMagic);
  w.u8(victim_format::kVersion);
  w.u32(static_cast<std::uint32_t>(v.chars.dim()));
  w.u32(static_cast<std::uint32_t>(v.chars.alphabet.size()));
  w.bytes(v.chars.alphabet);
  for (double x : v.chars.table.data) w.f64(x);
  w.u32(static_cast<std::uint32_t>(v.labels.size()));
  for (const std::string& l : v.labels) {
    w.u32(static_cast<std::uint32_t>(l.size()));
    w.bytes(l);
  }
  for (double x : v.weights.data) w.f64(x);
  for (double x : v.bias) w.f64(x);
  return w.buffer();
}

inline ToyVictim deserialize_victim(std::string_view data) {
  binary::Reader r(data);
  if (r.remaining() < victim_format::kMagic.size() ||
      r.bytes(victim_format::kMagic.size()) != victim_format::kMagic)
    throw FormatError(FormatError::Kind::kBadMagic, "not a FiRo victim model");
  if (r.u8() != victim_format::kVersion)
    throw FormatError(FormatError::Kind::kVersionMismatch, "unsupported victim model version");
  ToyVictim v;
  const std::uint32_t d = r.u32();
  v.chars.alphabet = std::string(r.bytes(r.u32()));
  r.need(static_cast<std::size_t>(v.chars.alphabet.size() + 1) * d * 8);
  v.chars.table = Matrix<double>(v.chars.alphabet.size() + 1, d);
  for (double& x : v.chars.table.data) x = r.f64();
  const std::uint32_t nl = r.u32();
  for (std::uint32_t k = 0; k < nl; ++k) v.labels.emplace_back(r.bytes(r.u32()));
  r.need(static_cast<std::size_t>(nl) * (3 * d + 1) * 8);
  v.weights = Matrix<double>(nl, 3 * static_cast<std::size_t>(d));
  for (double& x : v.weights.data) x = r.f64();
  v.bias.resize(nl);
  for (double& x : v.bias) x = r.f64();
  return v;
}

inline void save_victim(const ToyVictim& v, const std::string& path) {
  write_file(path, serialize_victim(v));
}

inline ToyVictim load_victim(const std::string& path) { return deserialize_victim(read_file(path)); }

}  // namespace firo

#endif  // FIRO_VICTIM_HPP
