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

#ifndef FIRO_TESTS_GRADCHECK_HPP
#define FIRO_TESTS_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <set>

#include "support.hpp"

namespace firo::testing {

struct GradInstance {
  ClusterIndex index;
  BasicModel<double> model;
  std::vector<Token> clean;
  std::vector<Token> noisy;
};

// Small vocabulary over a four-letter alphabet so clusters overlap, and a
// noisy sentence with at least one scorable position.
inline GradInstance make_grad_instance(std::uint64_t seed, std::size_t d_char = 4) {
  Rng rng(seed);
  std::set<std::string> words;
  while (words.size() < 40) words.insert(random_word(rng, 1, 5, "abcd"));
  ClusterIndex index(vocab_of({words.begin(), words.end()}));
  BasicModel<double> m = init_model<double>(index.vocab(), d_char, rng.next());
  for (double& v : m.chars.table.data) v *= 2;
  m.alpha_raw = rng.uniform(-1.5, 1.5);
  const OpSet ops{OpKind::kSubstitute, OpKind::kDelete, OpKind::kInsert};
  for (;;) {
    std::vector<Token> clean;
    for (std::size_t i = 0, n = 2 + rng.index(5); i < n; ++i)
      clean.push_back(index.vocab().word(static_cast<WordId>(rng.index(index.vocab().size()))));
    const Sentence noisy = perturb_sentence(make_sentence(clean), {2}, rng.next(), ops);
    if (training_loss(m, index, clean, noisy.tokens).positions > 0)
      return {std::move(index), std::move(m), std::move(clean), noisy.tokens};
  }
}

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-3});
}

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t coordinates = 0;
};

// Central differences over every char-table entry, alpha_raw, every touched
// output row and a few untouched rows (whose gradient must be zero).
inline GradCheckResult check_gradients(GradInstance& g, double h = 1e-4) {
  GradCheckResult out;
  const LossResult<double> analytic = training_loss(g.model, g.index, g.clean, g.noisy);
  auto numeric = [&](double& p) {
    const double saved = p;
    p = saved + h;
    const double up = loss_value(g.model, g.index, g.clean, g.noisy);
    p = saved - h;
    const double down = loss_value(g.model, g.index, g.clean, g.noisy);
    p = saved;
    return (up - down) / (2 * h);
  };
  auto record = [&](double a, double n) {
    out.max_rel_error = std::max(out.max_rel_error, relative_error(a, n));
    ++out.coordinates;
  };
  for (std::size_t k = 0; k < g.model.chars.table.data.size(); ++k)
    record(analytic.grads.chars.data[k], numeric(g.model.chars.table.data[k]));
  record(analytic.grads.alpha_raw, numeric(g.model.alpha_raw));
  for (const auto& [id, row] : analytic.grads.output)
    for (std::size_t k = 0; k < row.size(); ++k) record(row[k], numeric(g.model.output.row(id)[k]));
  std::size_t untouched = 0;
  for (WordId id = 0; id < g.model.vocab_size() && untouched < 3; ++id) {
    if (analytic.grads.output.count(id)) continue;
    ++untouched;
    for (std::size_t k = 0; k < g.model.word_dim(); ++k) record(0.0, numeric(g.model.output.row(id)[k]));
  }
  return out;
}

}  // namespace firo::testing

#endif  // FIRO_TESTS_GRADCHECK_HPP
