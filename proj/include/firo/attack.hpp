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

// Black-box beam search for character-level adversarial examples.
//
// Each round extends every beam entry by one edit at a token that has not
// been edited yet, scores all candidates with the attack objective, and keeps
// the best `beam`. The search stops as soon as the top candidate succeeds or
// after D rounds, so at most D words ever differ from the input.

#ifndef FIRO_ATTACK_HPP
#define FIRO_ATTACK_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "firo/error.hpp"
#include "firo/noise.hpp"
#include "firo/random.hpp"
#include "firo/text.hpp"
#include "firo/victim.hpp"

namespace firo {

struct AttackConfig {
  std::size_t budget = 1;  // D
  std::size_t beam = 5;
  std::size_t branch = 8;  // sampled edits per (entry, position)
  bool exhaustive = false; // every single-op neighbour instead of sampling
  std::uint64_t seed = 13;
  OpSet ops = OpSet::all();
  bool trace = false;
};

struct TraceStep {
  std::vector<Token> tokens;
  double score = 0;
};

struct AttackResult {
  Sentence adversarial;
  bool success = false;
  std::size_t words_changed = 0;
  std::uint64_t queries_used = 0;
  double score = 0;
  std::vector<TraceStep> beam_trace;
};

// What the search maximizes, and when it may stop.
struct AttackObjective {
  std::function<double(const std::vector<Token>&)> score;
  std::function<bool(const std::vector<Token>&)> succeeded;
};

namespace detail {

struct BeamEntry {
  std::vector<Token> tokens;
  std::vector<bool> edited;
  double score = 0;
};

inline std::vector<Token> candidate_edits(const Token& word, const AttackConfig& config,
                                          std::uint64_t seed) {
  if (config.exhaustive) return single_op_neighbors(word, config.ops);
  Rng rng(seed);
  std::vector<Token> out;
  std::set<Token> seen;
  for (std::size_t b = 0; b < config.branch; ++b) {
    if (auto op = sample_op(word, config.ops, rng)) {
      Token t = apply_op(word, *op);
      if (seen.insert(t).second) out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace detail

// Generic search. `queries` reports the oracle's call counter so the result
// can state how many queries were spent.
inline AttackResult beam_search_attack(const AttackObjective& objective, const Sentence& x,
                                       const AttackConfig& config,
                                       const std::function<std::uint64_t()>& queries) {
  if (config.budget == 0) throw ContractViolation("attack budget D must be >= 1");
  if (config.beam == 0) throw ContractViolation("beam width must be >= 1");
  const std::uint64_t q0 = queries();
  AttackResult result;
  result.adversarial = x;

  const std::vector<std::size_t> positions = perturbable_positions(x.tokens);
  if (positions.empty()) return result;

  if (objective.succeeded(x.tokens)) {
    result.success = true;
    result.score = objective.score(x.tokens);
    result.queries_used = queries() - q0;
    return result;
  }

  std::vector<detail::BeamEntry> beam{{x.tokens, std::vector<bool>(x.size(), false), 0.0}};
  for (std::size_t round = 0; round < config.budget; ++round) {
    std::vector<detail::BeamEntry> next;
    std::set<std::vector<Token>> seen;
    for (std::size_t e = 0; e < beam.size(); ++e) {
      const detail::BeamEntry& entry = beam[e];
      for (std::size_t p : positions) {
        if (entry.edited[p]) continue;
        // Seeds depend only on (round, entry rank, position): a larger D
        // replays the same first rounds.
        const std::uint64_t s = derive_seed(config.seed, {round, e, p});
        for (Token& edit : detail::candidate_edits(entry.tokens[p], config, s)) {
          detail::BeamEntry cand{entry.tokens, entry.edited, 0.0};
          cand.tokens[p] = std::move(edit);
          cand.edited[p] = true;
          if (!seen.insert(cand.tokens).second) continue;
          cand.score = objective.score(cand.tokens);
          next.push_back(std::move(cand));
        }
      }
    }
    if (next.empty()) break;
    std::stable_sort(next.begin(), next.end(), [](const auto& a, const auto& b) {
      return a.score > b.score;
    });
    if (next.size() > config.beam) next.resize(config.beam);
    beam = std::move(next);
    if (config.trace) result.beam_trace.push_back({beam.front().tokens, beam.front().score});

    result.adversarial = make_sentence(beam.front().tokens);
    result.score = beam.front().score;
    result.words_changed = word_difference(x.tokens, beam.front().tokens);
    if (objective.succeeded(beam.front().tokens)) {
      result.success = true;
      break;
    }
  }
  result.queries_used = queries() - q0;
  return result;
}

// Classification attack: maximize the victim's loss on the gold label, stop
// when its prediction leaves the gold label.
inline AttackResult beam_attack(const Victim& victim, const Sentence& x, Label gold,
                                const AttackConfig& config) {
  AttackObjective objective{
      [&](const std::vector<Token>& t) { return victim.loss(t, gold); },
      [&](const std::vector<Token>& t) { return victim.predict(t) != gold; }};
  return beam_search_attack(objective, x, config, [&] { return victim.queries(); });
}

// Sequence tagging.

struct Entity {
  std::size_t begin = 0;  // token span [begin, end)
  std::size_t end = 0;
  std::string type;

  auto operator<=>(const Entity&) const = default;
};

using EntitySet = std::set<Entity>;

// |gold ∪ predicted| - |gold ∩ predicted| over (span, type) pairs.
inline double tagging_objective(const EntitySet& gold, const EntitySet& predicted) {
  std::size_t common = 0;
  for (const Entity& e : predicted) common += gold.count(e);
  const std::size_t uni = gold.size() + predicted.size() - common;
  return static_cast<double>(uni - common);
}

class TaggerVictim {
 public:
  TaggerVictim() = default;
  TaggerVictim(const TaggerVictim&) {}
  TaggerVictim& operator=(const TaggerVictim&) { return *this; }
  virtual ~TaggerVictim() = default;

  EntitySet predict_entities(const std::vector<Token>& tokens) const {
    ++queries_;
    return do_predict_entities(tokens);
  }

  std::uint64_t queries() const { return queries_.load(); }

 protected:
  virtual EntitySet do_predict_entities(const std::vector<Token>& tokens) const = 0;

 private:
  mutable std::atomic<std::uint64_t> queries_{0};
};

inline double tagging_objective(const TaggerVictim& tagger, const std::vector<Token>& tokens,
                                const EntitySet& gold) {
  return tagging_objective(gold, tagger.predict_entities(tokens));
}

// Maximizes the non-overlapping entities; any mismatch with gold counts as
// success.
inline AttackResult beam_attack_tagger(const TaggerVictim& tagger, const Sentence& x,
                                       const EntitySet& gold, const AttackConfig& config) {
  AttackObjective objective{
      [&](const std::vector<Token>& t) { return tagging_objective(tagger, t, gold); },
      [&](const std::vector<Token>& t) { return tagging_objective(tagger, t, gold) > 0; }};
  return beam_search_attack(objective, x, config, [&] { return tagger.queries(); });
}

}  // namespace firo

#endif  // FIRO_ATTACK_HPP
