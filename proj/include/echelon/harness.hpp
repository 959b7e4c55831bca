#pragma once

#include <optional>
#include <string>
#include <vector>

#include "echelon/io.hpp"
#include "echelon/marl.hpp"

namespace echelon::harness {

/// Everything a run needs, resolvable from a config file plus CLI overrides.
/// The serialized form (the manifest) reproduces the run byte for byte.
struct RunConfig {
  // [network]
  std::string preset_name = "four_stage";
  std::optional<network::NetworkTopology> custom_topology;
  // [uncertainty]
  stochastic::UncertaintyConfig uncertainty;
  uint64_t eval_seed = marl::kDefaultEvalSeed;
  // [scheme]
  std::string scheme_name = "mappo";  // ippo|ippo_shared|mappo|centralized|oracle|shlp|dshlp
  sim::RewardMode reward_mode = sim::RewardMode::shared;
  std::optional<int> obs_config;  // observation configuration override
  admm::DshlpConfig dshlp;
  // [hyperparams]
  ppo::PpoHyperparams hp;
  bool hp_explicit = false;  // config supplied values (otherwise scheme defaults)
  // [run]
  int iterations = 200;
  int episodes = 200;
  int horizon = 30;
  uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = "runs/run";

  network::NetworkTopology topology() const;
  bool is_rl_scheme() const;
  std::string run_name() const;

  io::IniFile to_ini() const;     // fully resolved manifest
  uint64_t config_hash() const;   // hash of the manifest text

  /// Parses and validates; throws std::invalid_argument with a message
  /// naming the offending section/key.
  static RunConfig from_ini(const io::IniFile& ini);
  static RunConfig load(const std::string& path);
};

/// Train an RL scheme; writes manifest.ini, checkpoint.bin and curve.csv
/// into the run directory. Returns the directory path.
std::string cli_train(const RunConfig& config);

/// Evaluate a scheme (RL schemes need checkpoint.bin in the run directory or
/// an explicit path); writes summary.csv, metrics.csv, cumulative.csv,
/// trace_hash.txt and, for dshlp, convergence.csv.
std::string cli_evaluate(const RunConfig& config, const std::string& checkpoint_path = "");

metrics::MetricsReport evaluate_scheme(const RunConfig& config,
                                       const marl::PolicyBundle* bundle,
                                       std::vector<marl::DshlpConvergenceRow>* convergence,
                                       int workers);

void write_report(const std::string& dir, const metrics::MetricsReport& report,
                  double oracle_mean);

struct ExperimentOptions {
  int seeds = 5;           // training seeds per cell
  int iterations = 200;
  int episodes = 200;
  int horizon = 30;
  std::vector<double> demand_spike_levels = {0.05, 0.10, 0.15};
  std::vector<double> delivery_prob_levels = {0.5, 0.7, 0.9};
  int workers = 1;
};

/// Experiment matrices. Each writes per-run directories plus an aggregated
/// results CSV under `out_dir` and returns the table path.
std::string cli_experiment(const std::string& matrix_name, const std::string& out_dir,
                           const ExperimentOptions& options);

/// Renders SVG charts from previously written CSVs (no smoothing).
std::vector<std::string> cli_plot(const std::string& run_or_table_dir);

}  // namespace echelon::harness
