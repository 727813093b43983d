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

#include <algorithm>

#include "support.hpp"

namespace firo {
namespace {

TEST(ApplyOp, WorkedExamples) {
  EXPECT_EQ(apply_op("word", {OpKind::kSwapAdjacent, 1, std::nullopt}), "wrod");
  EXPECT_EQ(apply_op("word", {OpKind::kDelete, 2, std::nullopt}), "wod");
  EXPECT_EQ(apply_op("cat", {OpKind::kInsert, 3, U'r'}), "catr");
  EXPECT_EQ(apply_op("cat", {OpKind::kInsert, 2, U'r'}), "cart");
  EXPECT_EQ(apply_op("cat", {OpKind::kSubstitute, 0, U'b'}), "bat");
  EXPECT_EQ(apply_op("né", {OpKind::kSwapAdjacent, 0, std::nullopt}), "én");
}

TEST(ApplyOp, RejectsInvalidOps) {
  EXPECT_THROW(apply_op("cat", {OpKind::kSubstitute, 3, U'x'}), ContractViolation);
  EXPECT_THROW(apply_op("a", {OpKind::kDelete, 0, std::nullopt}), ContractViolation);
  EXPECT_THROW(apply_op("cat", {OpKind::kInsert, 4, U'x'}), ContractViolation);
  EXPECT_THROW(apply_op("cat", {OpKind::kSwapAdjacent, 2, std::nullopt}), ContractViolation);
  EXPECT_THROW(apply_op("cat", {OpKind::kDelete, 0, U'x'}), ContractViolation);
  EXPECT_THROW(apply_op("cat", {OpKind::kInsert, 0, std::nullopt}), ContractViolation);
}

TEST(ParseOps, NamesAndErrors) {
  EXPECT_EQ(parse_ops("swap,sub,del,ins"), OpSet::all());
  EXPECT_EQ(parse_ops("del"), OpSet{OpKind::kDelete});
  EXPECT_THROW(parse_ops("swap,foo"), ContractViolation);
  EXPECT_THROW(parse_ops(""), ContractViolation);
}

TEST(Perturbable, ExcludesShortAndPunctuation) {
  EXPECT_FALSE(is_perturbable("a"));
  EXPECT_FALSE(is_perturbable(","));
  EXPECT_FALSE(is_perturbable("..."));
  EXPECT_TRUE(is_perturbable("ab"));
  EXPECT_EQ(perturbable_positions({"a", "cat", ",", "sat"}), (std::vector<std::size_t>{1, 3}));
}

TEST(SampleOp, AlwaysChangesWordAndIsOneOpAway) {
  Rng rng(4);
  for (int k = 0; k < 3000; ++k) {
    const std::string w = testing::random_word(rng, 2, 7, "aabc");
    const auto op = sample_op(w, OpSet::all(), rng);
    ASSERT_TRUE(op.has_value());
    const Token t = apply_op(w, *op);
    EXPECT_NE(t, w);
    const auto nb = single_op_neighbors(w, OpSet::all());
    EXPECT_NE(std::find(nb.begin(), nb.end(), t), nb.end()) << w << " -> " << t;
  }
}

TEST(SampleOp, RespectsAllowedKinds) {
  Rng rng(5);
  for (int k = 0; k < 500; ++k) {
    const auto op = sample_op("word", OpSet{OpKind::kDelete}, rng);
    ASSERT_TRUE(op.has_value());
    EXPECT_EQ(op->kind, OpKind::kDelete);
  }
  EXPECT_FALSE(sample_op("aa", OpSet{OpKind::kSwapAdjacent}, rng).has_value());
}

TEST(SingleOpNeighbors, EditDistanceProfile) {
  const auto nb = single_op_neighbors("cat", OpSet{OpKind::kSubstitute, OpKind::kDelete,
                                                   OpKind::kInsert});
  for (const auto& t : nb) EXPECT_EQ(testing::levenshtein(t, "cat"), 1u) << t;
  EXPECT_EQ(std::set<Token>(nb.begin(), nb.end()).size(), nb.size());
  const auto swaps = single_op_neighbors("cat", OpSet{OpKind::kSwapAdjacent});
  EXPECT_EQ(std::set<Token>(swaps.begin(), swaps.end()), (std::set<Token>{"act", "cta"}));
}

TEST(PerturbSentence, ZeroBudgetIsIdentity) {
  const Sentence s = make_sentence("the cat sat");
  EXPECT_EQ(perturb_sentence(s, {0}, 1), s);
}

TEST(PerturbSentence, BudgetOneChangesExactlyOneToken) {
  const Sentence s = make_sentence("the cat sat");
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    EXPECT_EQ(word_difference(s, perturb_sentence(s, {1}, seed)), 1u);
}

TEST(PerturbSentence, BudgetClampsToSentence) {
  const Sentence s = make_sentence("the cat sat");
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    EXPECT_EQ(word_difference(s, perturb_sentence(s, {7}, seed)), 3u);
  const Sentence punct = make_sentence("a , b .");
  EXPECT_EQ(perturb_sentence(punct, {3}, 1), punct);
}

TEST(PerturbSentence, BudgetLawAndOneOpPerToken) {
  Rng rng(6);
  for (int k = 0; k < 500; ++k) {
    std::vector<Token> t;
    for (std::size_t i = 0, n = rng.index(12); i < n; ++i)
      t.push_back(rng.bernoulli(0.15) ? "," : testing::random_word(rng, 1, 8));
    const Sentence s = make_sentence(t);
    const std::size_t d = rng.index(8);
    const Sentence out = perturb_sentence(s, {d}, rng.next());
    ASSERT_EQ(out.size(), s.size());
    EXPECT_LE(word_difference(s, out), d);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (out.tokens[i] == s.tokens[i]) continue;
      EXPECT_TRUE(is_perturbable(s.tokens[i]));
      const auto nb = single_op_neighbors(s.tokens[i], OpSet::all());
      EXPECT_NE(std::find(nb.begin(), nb.end(), out.tokens[i]), nb.end());
    }
  }
}

TEST(PerturbSentence, SameSeedSameOutput) {
  const Sentence s = make_sentence("alpha beta gamma delta epsilon");
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    EXPECT_EQ(perturb_sentence(s, {3}, seed).tokens, perturb_sentence(s, {3}, seed).tokens);
}

TEST(WordDifference, Counts) {
  EXPECT_EQ(word_difference(make_sentence("a b c"), make_sentence("a b c")), 0u);
  EXPECT_EQ(word_difference(make_sentence("a b c"), make_sentence("a z c")), 1u);
  EXPECT_EQ(word_difference(make_sentence("a b"), make_sentence("z y")), 2u);
  EXPECT_THROW(word_difference(make_sentence("a b"), make_sentence("a")), ContractViolation);
}

TEST(Rng, SeedDerivationAndRanges) {
  Rng a(1), b(1);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(derive_seed(1, {2}), derive_seed(1, {3}));
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  Rng r(2);
  for (int k = 0; k < 1000; ++k) {
    EXPECT_LT(r.below(7), 7u);
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

}  // namespace
}  // namespace firo
