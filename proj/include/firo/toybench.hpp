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

// Synthetic benchmark: a 300-word pseudo-language with word classes marked
// by their final letter, sentences from a class-bigram template grammar, and
// a two-label task decided by planted keywords.
//
// Some nouns and verbs (and a few nouns and adjectives) share a stem and so
// sit one edit apart ("bado"/"bade"). Only the surrounding words tell them
// apart, which is what separates a contextual sanitizer from a frequency
// lookup. All other words are at least two edits from each other.

#ifndef FIRO_TOYBENCH_HPP
#define FIRO_TOYBENCH_HPP

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "firo/cluster_index.hpp"
#include "firo/random.hpp"
#include "firo/text.hpp"

namespace firo::toybench {

enum class WordClass : std::size_t { kDet, kNoun, kVerb, kAdj, kAdv, kPrep, kConj, kCount };

inline constexpr std::size_t kVocabSize = 300;
inline constexpr std::size_t kTrainSentences = 5000;
inline constexpr std::size_t kHeldoutSentences = 500;
inline constexpr std::size_t kClassifyTrain = 1000;
inline constexpr std::size_t kClassifyTest = 400;
inline constexpr std::size_t kMinLength = 6;
inline constexpr std::size_t kMaxLength = 12;
inline constexpr std::size_t kKeywordsPerLabel = 4;
inline constexpr std::array<std::string_view, 2> kLabels = {"0", "1"};

struct LabeledLine {
  std::vector<Token> tokens;
  std::size_t label = 0;
};

struct Bench {
  Vocabulary vocab;
  std::vector<std::vector<Token>> train;
  std::vector<std::vector<Token>> heldout;
  std::vector<LabeledLine> classify_train;
  std::vector<LabeledLine> classify_test;
  std::array<std::vector<Token>, 2> keywords;
};

namespace detail {

inline constexpr std::string_view kConsonants = "bcdfghjklmnprstvw";
inline constexpr std::string_view kVowels = "aeiou";

struct Lexicon {
  std::array<std::vector<Token>, static_cast<std::size_t>(WordClass::kCount)> words;
  std::vector<Token> all;

  void add(WordClass c, Token w) {
    words[static_cast<std::size_t>(c)].push_back(w);
    all.push_back(std::move(w));
  }
  const std::vector<Token>& of(WordClass c) const { return words[static_cast<std::size_t>(c)]; }

  bool near_any(std::string_view w) const {
    for (const Token& o : all)
      if (within_one_edit(w, o)) return true;
    return false;
  }
};

inline std::string stem(Rng& rng) {
  std::string s;
  auto consonant = [&] { s.push_back(kConsonants[rng.index(kConsonants.size())]); };
  auto vowel = [&] { s.push_back(kVowels[rng.index(kVowels.size())]); };
  consonant();
  vowel();
  consonant();
  if (rng.bernoulli(0.5)) {
    vowel();
    consonant();
  }
  return s;
}

inline char suffix(WordClass c) {
  switch (c) {
    case WordClass::kNoun: return 'o';
    case WordClass::kVerb: return 'e';
    case WordClass::kAdj: return 'y';
    default: return 'u';
  }
}

// Fresh stem whose forms in every class in `classes` are two or more edits
// from every word already in the lexicon.
inline std::string fresh_stem(Rng& rng, const Lexicon& lex,
                              std::initializer_list<WordClass> classes,
                              std::string_view prefix = "") {
  for (;;) {
    const std::string s = std::string(prefix) + stem(rng);
    bool ok = true;
    for (WordClass c : classes) ok = ok && !lex.near_any(s + suffix(c));
    if (ok) return s;
  }
}

struct Transition {
  WordClass to;
  double p;
};

// Indexed by WordClass; the last row is the sentence start.
inline const std::vector<Transition>& transitions(std::size_t from) {
  using C = WordClass;
  static const std::array<std::vector<Transition>, 8> table = {{
      {{C::kAdj, .35}, {C::kNoun, .65}},                                  // det
      {{C::kVerb, .6}, {C::kPrep, .2}, {C::kConj, .2}},                   // noun
      {{C::kDet, .45}, {C::kAdv, .2}, {C::kPrep, .2}, {C::kAdj, .15}},    // verb
      {{C::kNoun, .85}, {C::kAdj, .15}},                                  // adj
      {{C::kPrep, .35}, {C::kDet, .35}, {C::kConj, .3}},                  // adv
      {{C::kDet, .75}, {C::kNoun, .15}, {C::kAdj, .1}},                   // prep
      {{C::kDet, .45}, {C::kNoun, .3}, {C::kAdj, .25}},                   // conj
      {{C::kDet, .6}, {C::kNoun, .25}, {C::kAdj, .15}},                   // start
  }};
  return table[from];
}

inline constexpr std::size_t kStart = 7;

class Grammar {
 public:
  Grammar(const Lexicon& lex, const Vocabulary& vocab) : lex_(lex) {
    for (std::size_t c = 0; c < weights_.size(); ++c)
      for (const Token& w : lex.words[c]) weights_[c].push_back(double(vocab.count(*vocab.id(w))));
  }

  WordClass next_class(std::size_t state, Rng& rng) const {
    const auto& ts = transitions(state);
    std::vector<double> p;
    for (const auto& t : ts) p.push_back(t.p);
    return ts[rng.weighted(p)].to;
  }

  Token word(WordClass c, Rng& rng) const {
    const auto k = static_cast<std::size_t>(c);
    return lex_.words[k][rng.weighted(weights_[k])];
  }

  std::pair<std::vector<Token>, std::vector<WordClass>> sentence(Rng& rng) const {
    const std::size_t len = kMinLength + rng.index(kMaxLength - kMinLength + 1);
    std::vector<Token> tokens;
    std::vector<WordClass> classes;
    std::size_t state = kStart;
    for (std::size_t i = 0; i < len; ++i) {
      const WordClass c = next_class(state, rng);
      tokens.push_back(word(c, rng));
      classes.push_back(c);
      state = static_cast<std::size_t>(c);
    }
    return {tokens, classes};
  }

 private:
  const Lexicon& lex_;
  std::array<std::vector<double>, static_cast<std::size_t>(WordClass::kCount)> weights_;
};

}  // namespace detail

// Deterministic in `seed`.
inline Bench generate(std::uint64_t seed) {
  using C = WordClass;
  using namespace detail;
  Rng rng(derive_seed(seed, {0x70b}));
  Lexicon lex;
  for (const char* w : {"the", "a", "some", "every", "this", "each"}) lex.add(C::kDet, w);
  for (const char* w : {"with", "from", "under", "over", "into", "upon", "across", "behind"})
    lex.add(C::kPrep, w);
  for (const char* w : {"and", "but", "yet", "nor"}) lex.add(C::kConj, w);
  const std::size_t function_words = lex.all.size();

  Bench bench;
  for (std::size_t label = 0; label < 2; ++label) {
    const char* prefix = label == 0 ? "z" : "x";
    for (std::size_t k = 0; k < kKeywordsPerLabel; ++k) {
      std::string w = fresh_stem(rng, lex, {C::kAdj}, prefix) + suffix(C::kAdj);
      bench.keywords[label].push_back(w);
      lex.add(C::kAdj, w);
    }
  }
  // Shared-stem families.
  for (std::size_t k = 0; k < 36; ++k) {
    const std::string s = fresh_stem(rng, lex, {C::kNoun, C::kVerb});
    lex.add(C::kNoun, s + suffix(C::kNoun));
    lex.add(C::kVerb, s + suffix(C::kVerb));
  }
  for (std::size_t k = 0; k < 10; ++k) {
    const std::string s = fresh_stem(rng, lex, {C::kNoun, C::kAdj});
    lex.add(C::kNoun, s + suffix(C::kNoun));
    lex.add(C::kAdj, s + suffix(C::kAdj));
  }
  const std::array<std::pair<C, std::size_t>, 4> targets = {
      {{C::kNoun, 110}, {C::kVerb, 80}, {C::kAdj, 64}, {C::kAdv, 28}}};
  for (const auto& [c, n] : targets)
    while (lex.of(c).size() < n) lex.add(c, fresh_stem(rng, lex, {c}) + suffix(c));

  // Zipf-like counts: function words first, content words in random order.
  std::vector<Token> ranked(lex.all.begin(), lex.all.begin() + function_words);
  std::vector<Token> content(lex.all.begin() + function_words, lex.all.end());
  rng.shuffle(content);
  ranked.insert(ranked.end(), content.begin(), content.end());
  std::vector<VocabEntry> entries;
  for (std::size_t r = 0; r < ranked.size(); ++r)
    entries.push_back({ranked[r], 200000 / (r + 1) + 1});
  bench.vocab = Vocabulary(std::move(entries));

  const Grammar grammar(lex, bench.vocab);
  Rng text_rng(derive_seed(seed, {0x5e47}));
  for (std::size_t i = 0; i < kTrainSentences; ++i)
    bench.train.push_back(grammar.sentence(text_rng).first);
  for (std::size_t i = 0; i < kHeldoutSentences; ++i)
    bench.heldout.push_back(grammar.sentence(text_rng).first);

  auto is_keyword = [&](const Token& t) {
    for (const auto& group : bench.keywords)
      if (std::find(group.begin(), group.end(), t) != group.end()) return true;
    return false;
  };
  Rng label_rng(derive_seed(seed, {0x1abe1}));
  auto labeled = [&]() {
    for (;;) {
      auto [tokens, classes] = grammar.sentence(label_rng);
      std::vector<std::size_t> adj_slots;
      for (std::size_t i = 0; i < tokens.size(); ++i)
        if (classes[i] == C::kAdj) adj_slots.push_back(i);
      if (adj_slots.empty()) continue;
      for (std::size_t i : adj_slots)
        while (is_keyword(tokens[i])) tokens[i] = grammar.word(C::kAdj, label_rng);
      LabeledLine line;
      line.label = label_rng.index(2);
      const auto& group = bench.keywords[line.label];
      tokens[adj_slots[label_rng.index(adj_slots.size())]] = group[label_rng.index(group.size())];
      line.tokens = std::move(tokens);
      return line;
    }
  };
  for (std::size_t i = 0; i < kClassifyTrain; ++i) bench.classify_train.push_back(labeled());
  for (std::size_t i = 0; i < kClassifyTest; ++i) bench.classify_test.push_back(labeled());
  return bench;
}

inline std::string lines_text(const std::vector<std::vector<Token>>& sentences) {
  std::string out;
  for (const auto& s : sentences) out += join(s) + "\n";
  return out;
}

inline std::string labeled_text(const std::vector<LabeledLine>& lines) {
  std::string out;
  for (const auto& l : lines) out += join(l.tokens) + "\t" + std::string(kLabels[l.label]) + "\n";
  return out;
}

// Writes vocab.tsv, train.txt, heldout.txt, classify_train.tsv and
// classify_test.tsv into `dir`, creating it if needed.
inline void write(const Bench& bench, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const std::filesystem::path root(dir);
  write_file((root / "vocab.tsv").string(), format_vocabulary(bench.vocab));
  write_file((root / "train.txt").string(), lines_text(bench.train));
  write_file((root / "heldout.txt").string(), lines_text(bench.heldout));
  write_file((root / "classify_train.tsv").string(), labeled_text(bench.classify_train));
  write_file((root / "classify_test.tsv").string(), labeled_text(bench.classify_test));
}

}  // namespace firo::toybench

#endif  // FIRO_TOYBENCH_HPP
