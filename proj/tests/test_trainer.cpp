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

#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "support.hpp"

namespace firo {
namespace {

TEST(TrainingLoss, SingletonClustersGiveZero) {
  const ClusterIndex index(testing::vocab_of({"alpha", "omega", "zulu"}));
  const FiroModel m = init_model(index.vocab(), 4, 1);
  const std::vector<Token> s{"alpha", "omega", "zulu"};
  const LossResult<float> r = training_loss(m, index, s, s);
  EXPECT_EQ(r.positions, 3u);
  EXPECT_EQ(r.loss, 0.0);
}

TEST(TrainingLoss, TwoEqualLogitsGiveLnTwo) {
  const ClusterIndex index(testing::vocab_of({"cat", "bat"}));
  BasicModel<double> m = init_model<double>(index.vocab(), 4, 1);
  std::fill(m.output.data.begin(), m.output.data.end(), 0.5);
  const LossResult<double> r = training_loss(m, index, {"cat"}, {"cat"});
  EXPECT_EQ(r.positions, 1u);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
}

TEST(TrainingLoss, SkipsUnreachableTargets) {
  const ClusterIndex index(testing::vocab_of({"cat", "dog"}));
  const FiroModel m = init_model(index.vocab(), 4, 1);
  // "cta" is two edits from "cat"; "zzz" has an empty cluster; "emu" is OOV.
  const LossResult<float> r = training_loss(m, index, std::vector<Token>{"cat", "zzz", "emu"},
                                            std::vector<Token>{"cta", "zzz", "emu"});
  EXPECT_EQ(r.positions, 0u);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_THROW(training_loss(m, index, std::vector<Token>{"cat"}, std::vector<Token>{}),
               ContractViolation);
}

TEST(Gradients, MatchCentralDifferences) {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    testing::GradInstance g = testing::make_grad_instance(seed);
    const testing::GradCheckResult r = testing::check_gradients(g);
    EXPECT_GT(r.coordinates, 100u);
    worst = std::max(worst, r.max_rel_error);
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Gradients, CoverLongerWordsAndWiderTables) {
  testing::GradInstance g = testing::make_grad_instance(99, 6);
  EXPECT_LT(testing::check_gradients(g).max_rel_error, 1e-4);
}

struct Toy {
  ClusterIndex index;
  std::vector<Sentence> corpus;
};

Toy small_toy() {
  Rng rng(31);
  std::set<std::string> words;
  while (words.size() < 60) words.insert(testing::random_word(rng, 2, 5, "abcdefg"));
  ClusterIndex index(testing::vocab_of({words.begin(), words.end()}));
  std::vector<Sentence> corpus;
  for (int k = 0; k < 120; ++k) {
    std::vector<Token> s;
    for (std::size_t i = 0, n = 3 + rng.index(5); i < n; ++i)
      s.push_back(index.vocab().word(static_cast<WordId>(rng.index(index.vocab().size()))));
    corpus.push_back(make_sentence(s));
  }
  return {std::move(index), std::move(corpus)};
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  const Toy toy = small_toy();
  TrainConfig c;
  c.learning_rate = 0;
  c.max_epochs = 2;
  c.d_char = 8;
  const FiroModel start = init_model(toy.index.vocab(), 8, c.seed);
  const auto out = train<float>(toy.corpus, toy.index, c);
  EXPECT_EQ(out.model, start);
}

TEST(Train, SameSeedSameModel) {
  const Toy toy = small_toy();
  TrainConfig c;
  c.max_epochs = 3;
  c.d_char = 8;
  c.learning_rate = 0.01;
  const auto a = train<float>(toy.corpus, toy.index, c);
  const auto b = train<float>(toy.corpus, toy.index, c);
  EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));
  ASSERT_EQ(a.stats.epochs.size(), b.stats.epochs.size());
  c.seed = 14;
  EXPECT_NE(serialize_model(train<float>(toy.corpus, toy.index, c).model),
            serialize_model(a.model));
}

TEST(Train, AlphaStaysInUnitIntervalAndStatsRecorded) {
  const Toy toy = small_toy();
  TrainConfig c;
  c.max_epochs = 5;
  c.d_char = 8;
  c.learning_rate = 0.05;
  std::vector<EpochStats> seen;
  const auto out = train<float>(toy.corpus, toy.index, c, {},
                                [&](const EpochStats& e) { seen.push_back(e); });
  ASSERT_FALSE(seen.empty());
  EXPECT_EQ(seen.size(), out.stats.epochs.size());
  for (const auto& e : seen) {
    EXPECT_GT(e.alpha, 0.0);
    EXPECT_LT(e.alpha, 1.0);
    EXPECT_GE(e.recovery, 0.0);
    EXPECT_LE(e.recovery, 1.0);
  }
  EXPECT_GE(out.stats.best_epoch, 1u);
}

TEST(Train, RejectsBadConfig) {
  const Toy toy = small_toy();
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(train<float>(toy.corpus, toy.index, c), ContractViolation);
  EXPECT_THROW(train<float>({}, toy.index, TrainConfig{}), ContractViolation);
}

TEST(Adam, UntouchedOutputRowsAreBitUnchanged) {
  testing::GradInstance g = testing::make_grad_instance(5);
  const BasicModel<double> before = g.model;
  const LossResult<double> r = training_loss(g.model, g.index, g.clean, g.noisy);
  Adam<double> adam(g.model, {0.01});
  adam.step(g.model, r.grads);
  std::size_t untouched = 0;
  for (WordId id = 0; id < g.model.vocab_size(); ++id) {
    const auto a = before.output.row(id);
    const auto b = g.model.output.row(id);
    const bool same = std::equal(a.begin(), a.end(), b.begin());
    if (r.grads.output.count(id)) continue;
    ++untouched;
    EXPECT_TRUE(same) << id;
  }
  EXPECT_GT(untouched, 0u);
}

TEST(Descent, SmallStepDoesNotIncreaseLoss) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    testing::GradInstance g = testing::make_grad_instance(100 + seed);
    const LossResult<double> r = training_loss(g.model, g.index, g.clean, g.noisy);
    Adam<double> adam(g.model, {1e-6});
    adam.step(g.model, r.grads);
    EXPECT_LE(loss_value(g.model, g.index, g.clean, g.noisy), r.loss) << seed;
  }
}

TEST(TrainingNoise, BudgetWithinRange) {
  const Sentence s = make_sentence("alpha beta gamma delta epsilon");
  std::set<std::size_t> diffs;
  for (std::uint64_t seed = 0; seed < 300; ++seed)
    diffs.insert(word_difference(s, training_noise(s, 2, seed, OpSet::all())));
  EXPECT_EQ(diffs, (std::set<std::size_t>{0, 1, 2}));
}

TEST(Train, RecoversOneEditTyposOnToyBenchmark) {
  const toybench::Bench bench = toybench::generate(13);
  const ClusterIndex index(bench.vocab);
  TrainConfig c;
  c.max_epochs = 8;
  const auto out = train<float>(testing::sentences_of(bench.train), index, c,
                                testing::sentences_of(bench.heldout));
  EXPECT_GE(out.stats.best_recovery, 0.9);
  // A one-edit typo in a clean in-vocabulary sentence is repaired.
  const std::vector<Token>& clean = bench.heldout.front();
  std::vector<Token> noisy = clean;
  std::size_t at = 0;
  while (!is_perturbable(noisy[at])) ++at;
  noisy[at] = apply_op(noisy[at], {OpKind::kInsert, 1, U'q'});
  EXPECT_EQ(sanitize(out.model, index, noisy).output_tokens, clean);
}

}  // namespace
}  // namespace firo
