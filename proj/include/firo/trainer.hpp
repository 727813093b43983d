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

// Noise-augmented training with hand-derived gradients and Adam.
//
// Objective: mean over positions of -log p(clean_i | c_i), where the softmax
// runs over cluster(noisy_i). Positions whose cluster is empty or does not
// contain the clean word are skipped.

#ifndef FIRO_TRAINER_HPP
#define FIRO_TRAINER_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "firo/cluster_index.hpp"
#include "firo/log.hpp"
#include "firo/model.hpp"
#include "firo/noise.hpp"
#include "firo/random.hpp"
#include "firo/text.hpp"

namespace firo {

template <typename Real>
struct Gradients {
  Matrix<Real> chars;
  Real alpha_raw = 0;
  std::map<WordId, std::vector<Real>> output;  // touched rows only

  static Gradients zeros_like(const BasicModel<Real>& m) {
    Gradients g;
    g.chars = Matrix<Real>(m.chars.table.rows, m.chars.table.cols);
    return g;
  }

  void scale(Real s) {
    for (Real& v : chars.data) v *= s;
    alpha_raw *= s;
    for (auto& [id, row] : output)
      for (Real& v : row) v *= s;
  }
};

template <typename Real>
struct LossResult {
  double loss = 0;            // mean over valid positions, 0 when there are none
  std::size_t positions = 0;  // positions that contributed
  Gradients<Real> grads;
};

// Adds the summed (unnormalized) loss and gradients of one sentence pair to
// `grads`; returns {loss sum, contributing positions}.
template <typename Real>
std::pair<double, std::size_t> accumulate_loss(const BasicModel<Real>& m,
                                               const ClusterIndex& index,
                                               const std::vector<Token>& clean,
                                               const std::vector<Token>& noisy,
                                               Gradients<Real>& grads) {
  if (clean.size() != noisy.size())
    throw ContractViolation("clean and noisy sentences must have equal token counts");
  const std::size_t n = noisy.size();
  if (n == 0) return {0.0, 0};
  const std::size_t width = m.word_dim();
  const std::size_t d = m.d_char();
  const Real alpha = m.alpha();
  const Real side = Real(0.5) * (Real(1) - alpha);

  std::vector<std::vector<std::size_t>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = m.chars.rows_of(noisy[i]);
  const Matrix<Real> h = compose_sentence(m.chars, noisy);
  const Matrix<Real> c = aggregate_context(alpha, h);

  Matrix<Real> g_ctx(n, width);
  double loss_sum = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Cluster cluster = index.query(noisy[i]);
    if (cluster.empty()) continue;
    const std::optional<WordId> target = index.vocab().id(clean[i]);
    if (!target) continue;
    const auto it = std::lower_bound(cluster.candidates.begin(), cluster.candidates.end(), *target);
    if (it == cluster.candidates.end() || *it != *target) continue;
    const std::size_t gold = static_cast<std::size_t>(it - cluster.candidates.begin());

    const std::vector<Real> p = score_cluster(m, c.row(i), cluster);
    loss_sum -= std::log(static_cast<double>(p[gold]));
    ++count;
    for (std::size_t j = 0; j < cluster.size(); ++j) {
      const Real coef = p[j] - (j == gold ? Real(1) : Real(0));
      const WordId w = cluster.candidates[j];
      axpy<Real>(coef, m.output.row(w), g_ctx.row(i));
      auto& g_row = grads.output[w];
      if (g_row.empty()) g_row.assign(width, Real(0));
      axpy<Real>(coef, c.row(i), std::span<Real>(g_row));
    }
  }
  if (count == 0) return {0.0, 0};

  // Back through the context mix.
  Real g_alpha = 0;
  Matrix<Real> g_h(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    const auto gc = g_ctx.row(i);
    const auto hi = h.row(i);
    for (std::size_t k = 0; k < width; ++k) {
      Real neighbours = 0;
      if (i > 0) neighbours += h.row(i - 1)[k];
      if (i + 1 < n) neighbours += h.row(i + 1)[k];
      g_alpha += gc[k] * (hi[k] - Real(0.5) * neighbours);
    }
    axpy<Real>(alpha, gc, g_h.row(i));
    if (i > 0) axpy<Real>(side, gc, g_h.row(i - 1));
    if (i + 1 < n) axpy<Real>(side, gc, g_h.row(i + 1));
  }
  grads.alpha_raw += g_alpha * alpha * (Real(1) - alpha);

  // Back through the word composition.
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i];
    const auto gh = g_h.row(i);
    axpy<Real>(Real(1), gh.subspan(0, d), grads.chars.row(r.front()));
    axpy<Real>(Real(1), gh.subspan(2 * d, d), grads.chars.row(r.back()));
    if (r.size() > 2) {
      const Real share = Real(1) / static_cast<Real>(r.size() - 2);
      for (std::size_t k = 1; k + 1 < r.size(); ++k)
        axpy<Real>(share, gh.subspan(d, d), grads.chars.row(r[k]));
    }
  }
  return {loss_sum, count};
}

template <typename Real>
LossResult<Real> training_loss(const BasicModel<Real>& m, const ClusterIndex& index,
                               const std::vector<Token>& clean, const std::vector<Token>& noisy) {
  LossResult<Real> out;
  out.grads = Gradients<Real>::zeros_like(m);
  auto [sum, count] = accumulate_loss(m, index, clean, noisy, out.grads);
  out.positions = count;
  if (count > 0) {
    out.loss = sum / static_cast<double>(count);
    out.grads.scale(Real(1) / static_cast<Real>(count));
  }
  return out;
}

template <typename Real>
LossResult<Real> training_loss(const BasicModel<Real>& m, const ClusterIndex& index,
                               const Sentence& clean, const Sentence& noisy) {
  return training_loss(m, index, clean.tokens, noisy.tokens);
}

// Loss only; used by finite-difference checks.
template <typename Real>
double loss_value(const BasicModel<Real>& m, const ClusterIndex& index,
                  const std::vector<Token>& clean, const std::vector<Token>& noisy) {
  return training_loss(m, index, clean, noisy).loss;
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with dense moments for the character table and alpha, and per-row
// moments for output rows created the first time a row receives a gradient.
// Rows outside a step's gradient are left untouched.
template <typename Real>
class Adam {
 public:
  Adam(const BasicModel<Real>& m, AdamConfig config)
      : config_(config),
        m_chars_(m.chars.table.data.size(), Real(0)),
        v_chars_(m.chars.table.data.size(), Real(0)) {}

  void step(BasicModel<Real>& model, const Gradients<Real>& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < model.chars.table.data.size(); ++k)
      update(model.chars.table.data[k], g.chars.data[k], m_chars_[k], v_chars_[k], c1, c2);
    update(model.alpha_raw, g.alpha_raw, m_alpha_, v_alpha_, c1, c2);
    for (const auto& [id, grad] : g.output) {
      auto& state = rows_[id];
      if (state.first.empty()) {
        state.first.assign(grad.size(), Real(0));
        state.second.assign(grad.size(), Real(0));
      }
      auto row = model.output.row(id);
      for (std::size_t k = 0; k < grad.size(); ++k)
        update(row[k], grad[k], state.first[k], state.second[k], c1, c2);
    }
  }

  std::uint64_t steps() const { return t_; }

 private:
  void update(Real& p, Real g, Real& m, Real& v, double c1, double c2) const {
    m = static_cast<Real>(config_.beta1 * m + (1.0 - config_.beta1) * g);
    v = static_cast<Real>(config_.beta2 * v + (1.0 - config_.beta2) * g * g);
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    p -= static_cast<Real>(config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon));
  }

  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<Real> m_chars_, v_chars_;
  Real m_alpha_ = 0, v_alpha_ = 0;
  std::unordered_map<WordId, std::pair<std::vector<Real>, std::vector<Real>>> rows_;
};

struct TrainConfig {
  std::size_t batch_size = 50;
  double learning_rate = 1e-3;
  std::size_t noise_budget_per_sentence = 2;
  std::size_t max_epochs = 50;
  std::size_t patience = 3;
  std::uint64_t seed = 13;
  std::size_t d_char = kDefaultCharDim;
  OpSet ops = OpSet::all();
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0;
  double recovery = 0;
  double alpha = 0;
};

struct TrainStats {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_recovery = 0;
  double final_alpha = 0;
};

// Fraction of tokens whose sanitized form equals the clean token.
template <typename Real>
double token_recovery(const BasicModel<Real>& m, const ClusterIndex& index,
                      const std::vector<Sentence>& clean, const std::vector<Sentence>& noisy) {
  std::size_t hit = 0, total = 0;
  for (std::size_t s = 0; s < clean.size(); ++s) {
    const SanitizeResult r = sanitize(m, index, noisy[s]);
    for (std::size_t i = 0; i < r.output_tokens.size(); ++i) hit += r.output_tokens[i] == clean[s].tokens[i];
    total += r.output_tokens.size();
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

// Noise used for one sentence in training: budget drawn from {0..max}.
inline Sentence training_noise(const Sentence& s, std::size_t max_budget, std::uint64_t seed,
                               const OpSet& ops) {
  Rng rng(seed);
  const std::size_t budget = rng.index(max_budget + 1);
  return perturb_sentence(s, {budget}, rng.next(), ops);
}

template <typename Real>
struct TrainOutcome {
  BasicModel<Real> model;
  TrainStats stats;
};

// Minibatch Adam with a fresh noising of the corpus every epoch and early
// stopping on held-out token recovery. Returns the best held-out checkpoint.
// An empty held-out set holds out the last tenth of the corpus.
template <typename Real = float>
TrainOutcome<Real> train(std::vector<Sentence> corpus, const ClusterIndex& index,
                         const TrainConfig& config, std::vector<Sentence> heldout = {},
                         const std::function<void(const EpochStats&)>& on_epoch = {},
                         std::optional<BasicModel<Real>> initial = std::nullopt) {
  if (corpus.empty()) throw ContractViolation("training corpus is empty");
  if (config.batch_size == 0) throw ContractViolation("batch_size must be >= 1");
  if (!(config.learning_rate >= 0)) throw ContractViolation("learning_rate must be >= 0");
  if (heldout.empty()) {
    const std::size_t take = std::max<std::size_t>(1, corpus.size() / 10);
    if (corpus.size() > take) {
      heldout.assign(corpus.end() - static_cast<std::ptrdiff_t>(take), corpus.end());
      corpus.resize(corpus.size() - take);
    } else {
      heldout = corpus;
    }
  }

  BasicModel<Real> model =
      initial ? *initial : init_model<Real>(index.vocab(), config.d_char, config.seed);
  check_fingerprint(model, index);
  Adam<Real> adam(model, {config.learning_rate});

  std::vector<Sentence> heldout_noisy;
  heldout_noisy.reserve(heldout.size());
  for (std::size_t s = 0; s < heldout.size(); ++s)
    heldout_noisy.push_back(training_noise(heldout[s], config.noise_budget_per_sentence,
                                           derive_seed(config.seed, {0x4e1d, s}), config.ops));

  TrainOutcome<Real> out{model, {}};
  out.stats.best_recovery = -1;
  std::size_t stale = 0;
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffler(derive_seed(config.seed, {0x5e, epoch}));
    shuffler.shuffle(order);

    double epoch_loss = 0;
    std::size_t epoch_positions = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      Gradients<Real> grads = Gradients<Real>::zeros_like(model);
      double sum = 0;
      std::size_t count = 0;
      for (std::size_t b = start; b < stop; ++b) {
        const Sentence& clean = corpus[order[b]];
        const Sentence noisy = training_noise(
            clean, config.noise_budget_per_sentence,
            derive_seed(config.seed, {epoch, order[b]}), config.ops);
        auto [s, c] = accumulate_loss(model, index, clean.tokens, noisy.tokens, grads);
        sum += s;
        count += c;
      }
      if (count == 0) {
        log::debug("batch without trainable positions skipped");
        continue;
      }
      grads.scale(Real(1) / static_cast<Real>(count));
      adam.step(model, grads);
      epoch_loss += sum;
      epoch_positions += count;
    }

    EpochStats es;
    es.epoch = epoch;
    es.loss = epoch_positions ? epoch_loss / static_cast<double>(epoch_positions) : 0.0;
    es.recovery = token_recovery(model, index, heldout, heldout_noisy);
    es.alpha = static_cast<double>(model.alpha());
    out.stats.epochs.push_back(es);
    if (on_epoch) on_epoch(es);
    log::info("epoch " + std::to_string(epoch) + " loss " + std::to_string(es.loss) +
              " recovery " + std::to_string(es.recovery));

    if (es.recovery > out.stats.best_recovery) {
      out.stats.best_recovery = es.recovery;
      out.stats.best_epoch = epoch;
      out.model = model;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  out.stats.final_alpha = static_cast<double>(out.model.alpha());
  return out;
}

}  // namespace firo

#endif  // FIRO_TRAINER_HPP
