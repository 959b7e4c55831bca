// Command-line front end: train, evaluate, experiment and plot subcommands.
// Exit codes: 0 success, 2 configuration error, 1 runtime failure.

#include <CLI11.hpp>

#include <iostream>

#include "echelon/harness.hpp"
#include "echelon/parallel.hpp"

using echelon::harness::ExperimentOptions;
using echelon::harness::RunConfig;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::string scheme;
  std::string out;
  uint64_t seed = 0;
  bool seed_set = false;
};

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) cfg = RunConfig::load(args.config_path);
  if (!args.preset.empty()) {
    cfg.preset_name = args.preset;
    cfg.custom_topology.reset();
  }
  if (!args.scheme.empty()) cfg.scheme_name = args.scheme;
  if (args.seed_set) {
    cfg.seed = args.seed;
    cfg.seed_set = true;
  }
  if (!args.out.empty()) cfg.out_dir = args.out;
  // re-validate the merged configuration (also resolves scheme defaults)
  return RunConfig::from_ini(cfg.to_ini());
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file");
  cmd->add_option("--preset", args.preset, "network preset name");
  cmd->add_option("--scheme", args.scheme, "method to run");
  cmd->add_option("--out", args.out, "output directory");
  auto* seed = cmd->add_option("--seed", args.seed, "training seed");
  seed->each([&args](const std::string&) { args.seed_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-echelon inventory control: MARL training and LP benchmarks"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args;
  std::string checkpoint_path;

  auto* train = app.add_subcommand("train", "train an RL scheme and write a checkpoint");
  add_common(train, train_args);

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a scheme over test episodes");
  add_common(evaluate, eval_args);
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint file for RL schemes");

  std::string matrix_name, experiment_out = "runs/experiments";
  ExperimentOptions exp_options;
  auto* experiment = app.add_subcommand("experiment", "run a full experiment matrix");
  experiment->add_option("matrix", matrix_name, "matrix name")->required();
  experiment->add_option("--out", experiment_out, "output directory");
  experiment->add_option("--seeds", exp_options.seeds, "training seeds per cell");
  experiment->add_option("--iterations", exp_options.iterations, "training iterations");
  experiment->add_option("--episodes", exp_options.episodes, "evaluation episodes");

  std::string plot_dir;
  auto* plot = app.add_subcommand("plot", "render SVG charts from run CSVs");
  plot->add_option("dir", plot_dir, "run or table directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      auto cfg = resolve_config(train_args);
      std::cout << echelon::harness::cli_train(cfg) << "\n";
    } else if (evaluate->parsed()) {
      auto cfg = resolve_config(eval_args);
      std::cout << echelon::harness::cli_evaluate(cfg, checkpoint_path) << "\n";
    } else if (experiment->parsed()) {
      exp_options.workers = echelon::worker_budget();
      std::cout << echelon::harness::cli_experiment(matrix_name, experiment_out, exp_options)
                << "\n";
    } else if (plot->parsed()) {
      for (const auto& file : echelon::harness::cli_plot(plot_dir)) std::cout << file << "\n";
    }
  } catch (const std::invalid_argument& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
