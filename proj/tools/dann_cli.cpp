#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dann/errors.hpp"
#include "dann/harness.hpp"

namespace {

dann::ExperimentConfig load_config(const std::string& path,
                                   std::optional<std::uint64_t> seed) {
  dann::ExperimentConfig cfg = dann::ExperimentConfig::from_file(path);
  if (seed) {
    cfg.train.seed = *seed;
    cfg.corpus.seed = *seed;
    cfg.finalize();
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-adversarial training on raw 1-d signals"};
  app.require_subcommand(1);

  std::string config_path, corpus_dir, out_dir, checkpoint_path, split = "eval";
  std::string baseline_ckpt, dann_ckpt, mode = "dann";
  std::optional<std::uint64_t> seed;

  auto* generate = app.add_subcommand("generate", "synthesize a two-domain corpus");
  generate->add_option("--config", config_path, "config file")->required();
  generate->add_option("--out", out_dir, "output directory")->required();
  generate->add_option("--seed", seed, "override the config seed");

  auto* train = app.add_subcommand("train", "train a baseline or dann model");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--corpus", corpus_dir, "corpus directory")->required();
  train->add_option("--mode", mode, "baseline|dann")
      ->check(CLI::IsMember({"baseline", "dann"}));
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seed", seed, "override the config seed");

  auto* eval = app.add_subcommand("eval", "per-domain accuracy of a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--corpus", corpus_dir, "corpus directory")->required();
  eval->add_option("--split", split, "train|eval")->check(CLI::IsMember({"train", "eval"}));

  std::uint64_t gradcheck_seed = 1;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("--seed", gradcheck_seed, "base seed");

  auto* compare = app.add_subcommand("compare", "baseline vs dann adaptation report");
  compare->add_option("--baseline", baseline_ckpt, "baseline checkpoint")->required();
  compare->add_option("--dann", dann_ckpt, "dann checkpoint")->required();
  compare->add_option("--corpus", corpus_dir, "corpus directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      dann::cmd_generate(load_config(config_path, seed), out_dir, std::cout);
    } else if (train->parsed()) {
      dann::cmd_train(load_config(config_path, seed), corpus_dir,
                      mode == "dann" ? dann::TrainMode::Dann : dann::TrainMode::Baseline,
                      out_dir, std::cout);
    } else if (eval->parsed()) {
      dann::cmd_eval(checkpoint_path, corpus_dir, split, std::cout);
    } else if (gradcheck->parsed()) {
      if (!dann::cmd_gradcheck(gradcheck_seed, std::cout)) return 3;
    } else if (compare->parsed()) {
      dann::cmd_compare(baseline_ckpt, dann_ckpt, corpus_dir, std::cout);
    }
  } catch (const dann::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dann::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const dann::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
