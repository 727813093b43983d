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

// Robustness/Fidelity estimation and word-level spell-correction scoring.

#ifndef FIRO_METRICS_HPP
#define FIRO_METRICS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "firo/cluster_index.hpp"
#include "firo/error.hpp"
#include "firo/model.hpp"
#include "firo/noise.hpp"
#include "firo/random.hpp"
#include "firo/text.hpp"

namespace firo {

// Maps a token sequence to a token sequence of the same length.
using Sanitizer = std::function<std::vector<Token>(const std::vector<Token>&)>;

struct DenoisedSet {
  std::vector<Token> x;
  std::vector<std::vector<Token>> z;
};

// (|Z| + 1 - |uniq(Z)|) / |Z|; uniqueness compares whole token sequences.
inline double robustness(const DenoisedSet& set) {
  if (set.z.empty()) throw ContractViolation("robustness of an empty set");
  const std::set<std::vector<Token>> unique(set.z.begin(), set.z.end());
  const double n = static_cast<double>(set.z.size());
  return (n + 1.0 - static_cast<double>(unique.size())) / n;
}

// Mean over z of the fraction of positions where z_i == x_i.
inline double fidelity(const DenoisedSet& set) {
  if (set.z.empty()) throw ContractViolation("fidelity of an empty set");
  double total = 0;
  for (const auto& z : set.z) {
    if (z.size() != set.x.size())
      throw ContractViolation("denoised output is not token-aligned with the clean input");
    if (z.empty()) {
      total += 1.0;
      continue;
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < z.size(); ++i) same += z[i] == set.x[i];
    total += static_cast<double>(same) / static_cast<double>(z.size());
  }
  return total / static_cast<double>(set.z.size());
}

struct RobFidReport {
  double robustness = 0;
  double fidelity = 0;
  double arithmetic = 0;
  double geometric = 0;
  double harmonic = 0;
  std::size_t sentences = 0;
};

inline RobFidReport make_report(double robustness, double fidelity) {
  RobFidReport r;
  r.robustness = robustness;
  r.fidelity = fidelity;
  r.arithmetic = 0.5 * (robustness + fidelity);
  r.geometric = std::sqrt(robustness * fidelity);
  r.harmonic = robustness + fidelity > 0 ? 2.0 * robustness * fidelity / (robustness + fidelity)
                                         : 0.0;
  return r;
}

enum class IdentityMode {
  kSanitized,  // Z includes the sanitizer's output on the clean input
  kLiteral,    // Z includes the clean input itself
};

struct RobFidOptions {
  std::size_t copies = 10;
  IdentityMode identity = IdentityMode::kSanitized;
  OpSet ops = OpSet::all();
};

// Positions for the sequential copies: distinct while perturbable positions
// remain, then drawn with replacement.
inline std::vector<std::size_t> sample_copy_positions(const std::vector<Token>& tokens,
                                                      std::size_t copies, Rng& rng) {
  std::vector<std::size_t> pool = perturbable_positions(tokens);
  std::vector<std::size_t> out;
  if (pool.empty()) return out;
  rng.shuffle(pool);
  for (std::size_t k = 0; k < copies; ++k)
    out.push_back(k < pool.size() ? pool[k] : pool[rng.index(pool.size())]);
  return out;
}

// Copy k carries noise at the first k sampled positions; a position drawn a
// second time is noised again on top of its earlier noise.
inline std::vector<std::vector<Token>> sequential_noisy_copies(const std::vector<Token>& x,
                                                               std::size_t copies,
                                                               std::uint64_t seed,
                                                               const OpSet& ops) {
  Rng rng(seed);
  const std::vector<std::size_t> positions = sample_copy_positions(x, copies, rng);
  std::vector<std::vector<Token>> out;
  std::vector<Token> current = x;
  for (std::size_t k = 0; k < copies; ++k) {
    if (k < positions.size()) {
      Token& t = current[positions[k]];
      if (auto op = sample_op(t, ops, rng)) t = apply_op(t, *op);
    }
    out.push_back(current);
  }
  return out;
}

inline DenoisedSet denoised_set(const Sanitizer& sanitizer, const std::vector<Token>& x,
                                std::uint64_t seed, const RobFidOptions& options) {
  DenoisedSet set;
  set.x = x;
  for (const auto& copy : sequential_noisy_copies(x, options.copies, seed, options.ops))
    set.z.push_back(sanitizer(copy));
  set.z.push_back(options.identity == IdentityMode::kSanitized ? sanitizer(x) : x);
  return set;
}

// Averages robustness and fidelity over the corpus. Per-sentence seeds are
// derived from `seed` and the sentence index, and accumulation runs in corpus
// order.
inline RobFidReport robfid_protocol(const Sanitizer& sanitizer, const std::vector<Sentence>& corpus,
                                    std::uint64_t seed, const RobFidOptions& options = {}) {
  if (corpus.empty()) throw ContractViolation("robfid_protocol needs a non-empty corpus");
  double rob = 0, fid = 0;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const DenoisedSet set =
        denoised_set(sanitizer, corpus[s].tokens, derive_seed(seed, {0xf1d0, s}), options);
    rob += robustness(set);
    fid += fidelity(set);
  }
  const double n = static_cast<double>(corpus.size());
  RobFidReport r = make_report(rob / n, fid / n);
  r.sentences = corpus.size();
  return r;
}

inline Sanitizer identity_sanitizer() {
  return [](const std::vector<Token>& t) { return t; };
}

// Every token becomes `word`; output depends only on length.
inline Sanitizer constant_sanitizer(Token word) {
  return [word](const std::vector<Token>& t) { return std::vector<Token>(t.size(), word); };
}

// Context-free baseline: most frequent word of each token's cluster,
// pass-through on an empty cluster.
inline Sanitizer frequency_sanitizer(const ClusterIndex& index) {
  return [&index](const std::vector<Token>& tokens) {
    std::vector<Token> out;
    out.reserve(tokens.size());
    for (const Token& t : tokens) {
      const Cluster c = index.query(t);
      out.push_back(c.empty() ? t : index.vocab().word(c.candidates.front()));
    }
    return out;
  };
}

template <typename Real>
Sanitizer model_sanitizer(const BasicModel<Real>& model, const ClusterIndex& index) {
  check_fingerprint(model, index);
  return [&model, &index](const std::vector<Token>& tokens) {
    return sanitize(model, index, tokens).output_tokens;
  };
}

struct SpellPair {
  std::vector<Token> noisy;
  std::vector<Token> clean;
};

struct SpellScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t true_positives = 0;
  std::size_t system_edits = 0;
  std::size_t reference_edits = 0;
  std::size_t skipped_misaligned = 0;
};

// A system edit is a position where output != noisy, a reference edit one
// where clean != noisy; a true positive is both with output == clean. Zero
// denominators give 0.
inline SpellScores spell_eval(const std::vector<SpellPair>& pairs,
                              const std::vector<std::vector<Token>>& outputs) {
  if (pairs.size() != outputs.size())
    throw ContractViolation("spell_eval needs one output per pair");
  SpellScores s;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    const auto& o = outputs[k];
    if (p.noisy.size() != p.clean.size() || o.size() != p.noisy.size()) {
      ++s.skipped_misaligned;
      continue;
    }
    for (std::size_t i = 0; i < o.size(); ++i) {
      const bool sys = o[i] != p.noisy[i];
      const bool ref = p.clean[i] != p.noisy[i];
      s.system_edits += sys;
      s.reference_edits += ref;
      s.true_positives += sys && ref && o[i] == p.clean[i];
    }
  }
  auto ratio = [](std::size_t a, std::size_t b) {
    return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0;
  };
  s.precision = ratio(s.true_positives, s.system_edits);
  s.recall = ratio(s.true_positives, s.reference_edits);
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

struct SpellPairFile {
  std::vector<SpellPair> pairs;
  std::size_t skipped_misaligned = 0;
};

// noisy<TAB>clean per line; pairs whose token counts differ are dropped and
// counted.
inline SpellPairFile parse_spell_pairs(std::string_view text) {
  SpellPairFile out;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(text)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw ParseError("expected noisy<TAB>clean", line_no);
    SpellPair p{tokenize(line.substr(0, tab)), tokenize(line.substr(tab + 1))};
    if (p.noisy.size() != p.clean.size()) {
      ++out.skipped_misaligned;
      continue;
    }
    out.pairs.push_back(std::move(p));
  }
  return out;
}

}  // namespace firo

#endif  // FIRO_METRICS_HPP
