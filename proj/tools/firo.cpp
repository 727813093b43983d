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

// firo: command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 configuration/fingerprint/file
// access error, 3 data-format error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "firo/firo.hpp"

namespace {

using json = nlohmann::json;

constexpr const char* kToolVersion = "firo 1.0.0";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Provenance record written next to each output artifact. Holds no clock or
// host data, so equal inputs and flags give an identical file.
void write_manifest(const CLI::App& cmd, const std::string& output,
                    const std::vector<std::string>& inputs) {
  json flags = json::object();
  for (const CLI::Option* opt : cmd.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
    std::string value;
    if (opt->get_expected_max() == 0) {
      value = opt->count() > 0 ? "true" : "false";
    } else if (opt->count() > 0) {
      const auto& results = opt->results();
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
    } else {
      value = opt->get_default_str();
    }
    flags[opt->get_name()] = value;
  }
  json digests = json::object();
  for (const std::string& path : inputs)
    if (!path.empty() && path != "none") digests[path] = hex64(firo::fnv1a64(firo::read_file(path)));
  json manifest = {{"command", cmd.get_name()},
                   {"flags", flags},
                   {"input_digests", digests},
                   {"tool_version", kToolVersion}};
  firo::write_file(output + ".manifest.json", manifest.dump(2) + "\n");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void emit(const json& j, const std::string& out_path) {
  std::cout << dump(j);
  if (!out_path.empty()) firo::write_file(out_path, dump(j));
}

struct Common {
  std::uint64_t seed = 13;
  bool deterministic = false;
};

// Every subcommand accepts these; all commands run single-worker in fixed
// order, so --deterministic is always honored.
void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_flag("--deterministic", c.deterministic, "Single worker, fixed order");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FiRo: fidelity-preserving sanitizer for character-level noisy text"};
  app.require_subcommand(1);

  // build-index
  Common bi_common;
  std::string bi_vocab, bi_out;
  std::size_t bi_max = 100000;
  CLI::App* build_index = app.add_subcommand("build-index", "Build the cluster index of a vocabulary");
  build_index->add_option("--vocab", bi_vocab, "word<TAB>count file")->required();
  build_index->add_option("--out", bi_out, "Output index path")->required();
  build_index->add_option("--max-size", bi_max, "Keep the most frequent N words")->capture_default_str();
  add_common(build_index, bi_common);

  // train
  Common tr_common;
  std::string tr_corpus, tr_vocab, tr_out, tr_heldout, tr_stats, tr_ops = "swap,sub,del,ins";
  firo::TrainConfig tr_config;
  std::size_t tr_max = 100000;
  CLI::App* train = app.add_subcommand("train", "Train a model on a clean corpus");
  train->add_option("--corpus", tr_corpus, "One sentence per line")->required();
  train->add_option("--vocab", tr_vocab, "word<TAB>count file")->required();
  train->add_option("--out", tr_out, "Output model path")->required();
  train->add_option("--heldout", tr_heldout, "Held-out corpus (default: last tenth of --corpus)");
  train->add_option("--batch", tr_config.batch_size)->capture_default_str();
  train->add_option("--lr", tr_config.learning_rate)->capture_default_str();
  train->add_option("--noise", tr_config.noise_budget_per_sentence, "Max noised words per sentence")
      ->capture_default_str();
  train->add_option("--epochs", tr_config.max_epochs)->capture_default_str();
  train->add_option("--patience", tr_config.patience)->capture_default_str();
  train->add_option("--dchar", tr_config.d_char, "Character embedding size")->capture_default_str();
  train->add_option("--max-size", tr_max, "Vocabulary size cap")->capture_default_str();
  train->add_option("--ops", tr_ops, "Training noise operations")->capture_default_str();
  train->add_option("--stats", tr_stats, "Also write the JSON-lines epoch log here");
  add_common(train, tr_common);

  // sanitize
  Common sa_common;
  std::string sa_model, sa_index, sa_in, sa_out;
  CLI::App* sanitize = app.add_subcommand("sanitize", "Sanitize a corpus line by line");
  sanitize->add_option("--model", sa_model)->required();
  sanitize->add_option("--index", sa_index)->required();
  sanitize->add_option("--in", sa_in)->required();
  sanitize->add_option("--out", sa_out)->required();
  add_common(sanitize, sa_common);

  // noise
  Common no_common;
  std::string no_in, no_out, no_ops = "swap,sub,del,ins";
  std::size_t no_budget = 1;
  CLI::App* noise = app.add_subcommand("noise", "Inject character-level noise into a corpus");
  noise->add_option("--in", no_in)->required();
  noise->add_option("--out", no_out)->required();
  noise->add_option("--budget", no_budget, "Words to perturb per sentence (D)")->capture_default_str();
  noise->add_option("--ops", no_ops)->capture_default_str();
  add_common(noise, no_common);

  // attack
  Common at_common;
  std::string at_model = "none", at_index, at_victim, at_in, at_report, at_ops = "swap,sub,del,ins",
              at_target = "victim";
  std::size_t at_budget = 1, at_beam = 5, at_branch = 8;
  bool at_exhaustive = false;
  CLI::App* attack = app.add_subcommand("attack", "Beam-search attack against a victim classifier");
  attack->add_option("--model", at_model, "FiRo model, or none")->capture_default_str();
  attack->add_option("--index", at_index, "Cluster index (required with --model)");
  attack->add_option("--victim", at_victim)->required();
  attack->add_option("--in", at_in, "text<TAB>label file")->required();
  attack->add_option("--budget", at_budget)->capture_default_str();
  attack->add_option("--beam", at_beam)->capture_default_str();
  attack->add_option("--branch", at_branch)->capture_default_str();
  attack->add_flag("--exhaustive", at_exhaustive, "Try every single edit per position");
  attack->add_option("--ops", at_ops)->capture_default_str();
  attack->add_option("--target", at_target,
                     "victim: search against the classifier alone; combined: against sanitizer+classifier")
      ->check(CLI::IsMember({"victim", "combined"}))
      ->capture_default_str();
  attack->add_option("--report", at_report)->required();
  add_common(attack, at_common);

  // eval-robfid
  Common rf_common;
  std::string rf_model, rf_index, rf_corpus, rf_identity = "sanitized", rf_out,
              rf_ops = "swap,sub,del,ins", rf_sanitizer = "firo";
  CLI::App* robfid = app.add_subcommand("eval-robfid", "Estimate robustness and fidelity");
  robfid->add_option("--model", rf_model);
  robfid->add_option("--index", rf_index)->required();
  robfid->add_option("--corpus", rf_corpus)->required();
  robfid->add_option("--identity", rf_identity)
      ->check(CLI::IsMember({"sanitized", "literal"}))
      ->capture_default_str();
  robfid->add_option("--ops", rf_ops)->capture_default_str();
  robfid->add_option("--sanitizer", rf_sanitizer, "firo, identity or frequency")
      ->check(CLI::IsMember({"firo", "identity", "frequency"}))
      ->capture_default_str();
  robfid->add_option("--out", rf_out, "Also write the report here");
  add_common(robfid, rf_common);

  // eval-spell
  Common sp_common;
  std::string sp_model, sp_index, sp_pairs, sp_out;
  CLI::App* spell = app.add_subcommand("eval-spell", "Word-level spell-correction scores");
  spell->add_option("--model", sp_model)->required();
  spell->add_option("--index", sp_index)->required();
  spell->add_option("--pairs", sp_pairs, "noisy<TAB>clean file")->required();
  spell->add_option("--out", sp_out, "Also write the report here");
  add_common(spell, sp_common);

  // gen-toybench
  Common gb_common;
  std::string gb_out;
  CLI::App* gen = app.add_subcommand("gen-toybench", "Write the synthetic benchmark");
  gen->add_option("--out", gb_out, "Output directory")->required();
  add_common(gen, gb_common);

  // victim-train
  Common vt_common;
  std::string vt_in, vt_out;
  firo::VictimTrainConfig vt_config;
  CLI::App* victim = app.add_subcommand("victim-train", "Train the toy victim classifier");
  victim->add_option("--in", vt_in, "text<TAB>label file")->required();
  victim->add_option("--out", vt_out)->required();
  victim->add_option("--epochs", vt_config.epochs)->capture_default_str();
  victim->add_option("--dchar", vt_config.d_char)->capture_default_str();
  victim->add_option("--lr", vt_config.learning_rate)->capture_default_str();
  add_common(victim, vt_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*build_index) {
      const firo::ClusterIndex index(firo::load_vocabulary(bi_vocab, bi_max));
      firo::save_index(index, bi_out);
      write_manifest(*build_index, bi_out, {bi_vocab});
    } else if (*train) {
      tr_config.seed = tr_common.seed;
      tr_config.ops = firo::parse_ops(tr_ops);
      const firo::ClusterIndex index(firo::load_vocabulary(tr_vocab, tr_max));
      std::vector<firo::Sentence> heldout;
      if (!tr_heldout.empty()) heldout = firo::load_corpus(tr_heldout);
      std::string log;
      auto outcome = firo::train<float>(
          firo::load_corpus(tr_corpus), index, tr_config, heldout, [&](const firo::EpochStats& e) {
            const json rec = {{"epoch", e.epoch}, {"loss", e.loss}, {"recovery", e.recovery},
                              {"alpha", e.alpha}};
            const std::string line = rec.dump() + "\n";
            std::cout << line << std::flush;
            log += line;
          });
      firo::save_model(outcome.model, tr_out);
      if (!tr_stats.empty()) firo::write_file(tr_stats, log);
      write_manifest(*train, tr_out, {tr_corpus, tr_vocab, tr_heldout});
    } else if (*sanitize) {
      const firo::FiroModel model = firo::load_model(sa_model);
      const firo::ClusterIndex index = firo::load_index(sa_index);
      firo::check_fingerprint(model, index);
      std::string out;
      for (const std::string& line : firo::split_lines(firo::read_file(sa_in)))
        out += firo::join(firo::sanitize(model, index, firo::tokenize(line)).output_tokens) + "\n";
      firo::write_file(sa_out, out);
      write_manifest(*sanitize, sa_out, {sa_model, sa_index, sa_in});
    } else if (*noise) {
      const firo::OpSet ops = firo::parse_ops(no_ops);
      std::string out;
      std::size_t line_no = 0;
      for (const std::string& line : firo::split_lines(firo::read_file(no_in))) {
        const firo::Sentence s = firo::make_sentence(line);
        out += firo::join(firo::perturb_sentence(s, {no_budget},
                                                 firo::derive_seed(no_common.seed, {line_no++}), ops)
                              .tokens) +
               "\n";
      }
      firo::write_file(no_out, out);
      write_manifest(*noise, no_out, {no_in});
    } else if (*attack) {
      const firo::ToyVictim victim = firo::load_victim(at_victim);
      const firo::LabeledData data = firo::load_labeled(at_in, victim.labels);
      std::optional<firo::FiroModel> model;
      std::optional<firo::ClusterIndex> index;
      if (at_model != "none") {
        if (at_index.empty()) throw firo::ContractViolation("--index is required with --model");
        model = firo::load_model(at_model);
        index = firo::load_index(at_index);
        firo::check_fingerprint(*model, *index);
      } else if (at_target == "combined") {
        throw firo::ContractViolation("--target combined needs --model");
      }
      std::optional<firo::SanitizedVictim> defended;
      if (model) defended.emplace(victim, firo::model_sanitizer(*model, *index));
      const firo::Victim& searched =
          at_target == "combined" ? static_cast<const firo::Victim&>(*defended) : victim;

      firo::AttackConfig config;
      config.beam = at_beam;
      config.branch = at_branch;
      config.exhaustive = at_exhaustive;
      config.ops = firo::parse_ops(at_ops);

      json by_budget = json::array();
      json examples = json::array();
      for (std::size_t d = 0; d <= at_budget; ++d) {
        std::size_t ok = 0, ok_defended = 0;
        for (std::size_t k = 0; k < data.examples.size(); ++k) {
          const auto& ex = data.examples[k];
          const firo::Sentence x = firo::make_sentence(ex.tokens);
          firo::AttackResult r;
          r.adversarial = x;
          if (d > 0) {
            config.budget = d;
            config.seed = firo::derive_seed(at_common.seed, {k});
            r = firo::beam_attack(searched, x, ex.label, config);
          }
          ok += victim.predict(r.adversarial.tokens) == ex.label;
          if (defended) ok_defended += defended->predict(r.adversarial.tokens) == ex.label;
          if (d == at_budget)
            examples.push_back({{"index", k},
                                {"success", r.success},
                                {"words_changed", r.words_changed},
                                {"queries", r.queries_used},
                                {"adversarial", r.adversarial.original}});
        }
        const double n = data.examples.empty() ? 1.0 : static_cast<double>(data.examples.size());
        json row = {{"budget", d}, {"victim_accuracy", static_cast<double>(ok) / n}};
        row["defended_accuracy"] =
            defended ? json(static_cast<double>(ok_defended) / n) : json(nullptr);
        by_budget.push_back(row);
      }
      const json report = {{"budget", at_budget},   {"beam", at_beam},
                           {"branch", at_exhaustive ? json("exhaustive") : json(at_branch)},
                           {"target", at_target},   {"examples", examples},
                           {"accuracy_by_budget", by_budget}};
      firo::write_file(at_report, dump(report));
      write_manifest(*attack, at_report, {at_victim, at_in, at_model, at_index});
    } else if (*robfid) {
      const firo::ClusterIndex index = firo::load_index(rf_index);
      std::optional<firo::FiroModel> model;
      firo::Sanitizer sanitizer;
      if (rf_sanitizer == "firo") {
        if (rf_model.empty()) throw firo::ContractViolation("--model is required for --sanitizer firo");
        model = firo::load_model(rf_model);
        sanitizer = firo::model_sanitizer(*model, index);
      } else if (rf_sanitizer == "identity") {
        sanitizer = firo::identity_sanitizer();
      } else {
        sanitizer = firo::frequency_sanitizer(index);
      }
      firo::RobFidOptions options;
      options.identity =
          rf_identity == "literal" ? firo::IdentityMode::kLiteral : firo::IdentityMode::kSanitized;
      options.ops = firo::parse_ops(rf_ops);
      const firo::RobFidReport r =
          firo::robfid_protocol(sanitizer, firo::load_corpus(rf_corpus), rf_common.seed, options);
      emit({{"robustness", r.robustness},
            {"fidelity", r.fidelity},
            {"arith", r.arithmetic},
            {"geo", r.geometric},
            {"har", r.harmonic}},
           rf_out);
      if (!rf_out.empty()) write_manifest(*robfid, rf_out, {rf_model, rf_index, rf_corpus});
    } else if (*spell) {
      const firo::FiroModel model = firo::load_model(sp_model);
      const firo::ClusterIndex index = firo::load_index(sp_index);
      firo::check_fingerprint(model, index);
      const firo::SpellPairFile file = firo::parse_spell_pairs(firo::read_file(sp_pairs));
      std::vector<std::vector<firo::Token>> outputs;
      for (const auto& p : file.pairs)
        outputs.push_back(firo::sanitize(model, index, p.noisy).output_tokens);
      const firo::SpellScores s = firo::spell_eval(file.pairs, outputs);
      emit({{"precision", s.precision},
            {"recall", s.recall},
            {"f1", s.f1},
            {"skipped_misaligned", s.skipped_misaligned + file.skipped_misaligned}},
           sp_out);
      if (!sp_out.empty()) write_manifest(*spell, sp_out, {sp_model, sp_index, sp_pairs});
    } else if (*gen) {
      firo::toybench::write(firo::toybench::generate(gb_common.seed), gb_out);
    } else if (*victim) {
      vt_config.seed = vt_common.seed;
      firo::VictimTrainStats stats;
      const firo::ToyVictim v = firo::train_toy_victim(firo::load_labeled(vt_in), vt_config, &stats);
      firo::save_victim(v, vt_out);
      std::cout << json{{"train_accuracy", stats.train_accuracy}, {"underfit", stats.underfit}}.dump()
                << "\n";
      write_manifest(*victim, vt_out, {vt_in});
    }
  } catch (const firo::ParseError& e) {
    std::cerr << "firo: data format error: " << e.what() << "\n";
    return 3;
  } catch (const firo::FormatError& e) {
    std::cerr << "firo: data format error: " << e.what() << "\n";
    return 3;
  } catch (const firo::ConfigError& e) {
    std::cerr << "firo: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const firo::IoError& e) {
    std::cerr << "firo: " << e.what() << "\n";
    return 2;
  } catch (const firo::ContractViolation& e) {
    std::cerr << "firo: usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "firo: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
