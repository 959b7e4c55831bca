#include "echelon/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "echelon/parallel.hpp"
#include "echelon/svgplot.hpp"

namespace echelon::harness {

namespace {

const std::set<std::string> kSections = {"network", "uncertainty", "scheme", "hyperparams",
                                         "run"};

uint64_t parse_u64(const std::string& v, const std::string& where) {
  try {
    return std::stoull(v);
  } catch (...) {
    throw std::invalid_argument(where + ": expected an unsigned integer, got '" + v + "'");
  }
}

int parse_int(const std::string& v, const std::string& where) {
  try {
    return std::stoi(v);
  } catch (...) {
    throw std::invalid_argument(where + ": expected an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, const std::string& where) {
  try {
    return std::stod(v);
  } catch (...) {
    throw std::invalid_argument(where + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument(where + ": expected true/false, got '" + v + "'");
}

}  // namespace

network::NetworkTopology RunConfig::topology() const {
  if (custom_topology) return *custom_topology;
  return network::preset(preset_name);
}

bool RunConfig::is_rl_scheme() const {
  return scheme_name == "ippo" || scheme_name == "ippo_shared" || scheme_name == "mappo" ||
         scheme_name == "centralized";
}

std::string RunConfig::run_name() const {
  return scheme_name + "_" + (custom_topology ? "custom" : preset_name) + "_" +
         stochastic::to_string(uncertainty.setting) + "_s" + std::to_string(seed);
}

RunConfig RunConfig::from_ini(const io::IniFile& ini) {
  RunConfig cfg;
  for (const auto& [section, items] : ini.sections) {
    if (!kSections.count(section))
      throw std::invalid_argument("unknown config section [" + section + "]");
    (void)items;
  }

  // ---- [network] ----
  bool custom_nodes = false;
  int n_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  std::map<int, network::NodeConfig> node_overrides;
  for (const auto& [key, value] : ini.section_items("network")) {
    const std::string where = "[network] " + key;
    if (key == "preset") {
      cfg.preset_name = value;
    } else if (key == "nodes") {
      n_nodes = parse_int(value, where);
      custom_nodes = true;
    } else if (key == "edges") {
      std::string item;
      std::stringstream ss(value);
      while (std::getline(ss, item, ',')) {
        auto colon = item.find(':');
        if (colon == std::string::npos)
          throw std::invalid_argument(where + ": edges use up:down pairs");
        edges.emplace_back(parse_int(item.substr(0, colon), where),
                           parse_int(item.substr(colon + 1), where));
      }
    } else if (key.rfind("node", 0) == 0 && key.find('.') != std::string::npos) {
      const auto dot = key.find('.');
      const int id = parse_int(key.substr(4, dot - 4), "[network] node index");
      const std::string field = key.substr(dot + 1);
      auto& node = node_overrides[id];
      node.node_id = id;
      if (field == "sell_price") node.sell_price = parse_double(value, where);
      else if (field == "replenish_cost") node.replenish_cost = parse_double(value, where);
      else if (field == "storage_cost") node.storage_cost = parse_double(value, where);
      else if (field == "backlog_cost") node.backlog_cost = parse_double(value, where);
      else if (field == "storage_capacity") node.storage_capacity = parse_int(value, where);
      else if (field == "order_limit") node.order_limit = parse_int(value, where);
      else if (field == "lead_time") node.lead_time = parse_int(value, where);
      else if (field == "initial_inventory") node.initial_inventory = parse_int(value, where);
      else throw std::invalid_argument(where + ": unknown node field");
    } else {
      throw std::invalid_argument("[network]: unknown key '" + key + "'");
    }
  }
  if (custom_nodes) {
    std::vector<network::NodeConfig> nodes;
    for (int id = 1; id <= n_nodes; ++id) {
      auto it = node_overrides.find(id);
      if (it == node_overrides.end())
        throw std::invalid_argument("[network]: node" + std::to_string(id) +
                                    " fields missing for a custom network");
      nodes.push_back(it->second);
    }
    auto topo = network::make_topology(nodes, edges);
    auto errors = network::validate(topo);
    if (!errors.empty())
      throw std::invalid_argument("[network]: invalid custom topology: " + errors.front());
    cfg.custom_topology = topo;
  } else {
    (void)network::preset(cfg.preset_name);  // validates the name
  }

  // ---- [uncertainty] ----
  bool pd_set = false, ptau_set = false;
  for (const auto& [key, value] : ini.section_items("uncertainty")) {
    const std::string where = "[uncertainty] " + key;
    if (key == "setting") cfg.uncertainty.setting = stochastic::setting_from_string(value);
    else if (key == "lambda_poisson") cfg.uncertainty.lambda_poisson = parse_double(value, where);
    else if (key == "p_d") { cfg.uncertainty.spike_prob = parse_double(value, where); pd_set = true; }
    else if (key == "p_tau") { cfg.uncertainty.delivery_prob = parse_double(value, where); ptau_set = true; }
    else if (key == "deterministic_demand") cfg.uncertainty.deterministic_demand = parse_bool(value, where);
    else if (key == "seed") cfg.eval_seed = parse_u64(value, where);
    else throw std::invalid_argument("[uncertainty]: unknown key '" + key + "'");
  }
  auto uerrors = stochastic::validate(cfg.uncertainty, pd_set, ptau_set);
  if (!uerrors.empty()) throw std::invalid_argument("[uncertainty]: " + uerrors.front());

  // ---- [scheme] ----
  for (const auto& [key, value] : ini.section_items("scheme")) {
    const std::string where = "[scheme] " + key;
    if (key == "scheme") cfg.scheme_name = value;
    else if (key == "reward_mode") {
      if (value == "shared") cfg.reward_mode = sim::RewardMode::shared;
      else if (value == "independent") cfg.reward_mode = sim::RewardMode::independent;
      else throw std::invalid_argument(where + ": expected shared|independent");
    } else if (key == "obs_config") cfg.obs_config = parse_int(value, where);
    else if (key == "rho") cfg.dshlp.rho = parse_double(value, where);
    else if (key == "max_iterations") cfg.dshlp.max_iterations = parse_int(value, where);
    else if (key == "tolerance") cfg.dshlp.tolerance = parse_double(value, where);
    else throw std::invalid_argument("[scheme]: unknown key '" + key + "'");
  }
  {
    static const std::set<std::string> known = {"ippo", "ippo_shared", "mappo", "centralized",
                                                "oracle", "shlp", "dshlp"};
    if (!known.count(cfg.scheme_name))
      throw std::invalid_argument("[scheme]: unknown scheme '" + cfg.scheme_name + "'");
  }

  // ---- [hyperparams] ----
  if (cfg.is_rl_scheme()) {
    if (cfg.scheme_name == "mappo") cfg.hp = ppo::PpoHyperparams::mappo();
    else if (cfg.scheme_name == "centralized") cfg.hp = ppo::PpoHyperparams::centralized();
    else cfg.hp = ppo::PpoHyperparams::ippo();
  }
  for (const auto& [key, value] : ini.section_items("hyperparams")) {
    const std::string where = "[hyperparams] " + key;
    cfg.hp_explicit = true;
    if (key == "batch_size") cfg.hp.batch_size = parse_int(value, where);
    else if (key == "minibatch_size") cfg.hp.minibatch_size = parse_int(value, where);
    else if (key == "epochs") cfg.hp.epochs = parse_int(value, where);
    else if (key == "clip_epsilon") cfg.hp.clip_epsilon = parse_double(value, where);
    else if (key == "discount") cfg.hp.discount = parse_double(value, where);
    else if (key == "gae_lambda") cfg.hp.gae_lambda = parse_double(value, where);
    else if (key == "kl_coef_init") cfg.hp.kl_coef_init = parse_double(value, where);
    else if (key == "kl_target") cfg.hp.kl_target = parse_double(value, where);
    else if (key == "learning_rate") cfg.hp.learning_rate = parse_double(value, where);
    else if (key == "fc1") cfg.hp.fc1 = parse_int(value, where);
    else if (key == "fc2") cfg.hp.fc2 = parse_int(value, where);
    else if (key == "history_length") cfg.hp.history_length = parse_int(value, where);
    else if (key == "normalize_advantages") cfg.hp.normalize_advantages = parse_bool(value, where);
    else throw std::invalid_argument("[hyperparams]: unknown key '" + key + "'");
  }
  auto hp_errors = cfg.hp.validate();
  if (!hp_errors.empty()) throw std::invalid_argument("[hyperparams]: " + hp_errors.front());

  // ---- [run] ----
  for (const auto& [key, value] : ini.section_items("run")) {
    const std::string where = "[run] " + key;
    if (key == "iterations") cfg.iterations = parse_int(value, where);
    else if (key == "episodes") cfg.episodes = parse_int(value, where);
    else if (key == "horizon") cfg.horizon = parse_int(value, where);
    else if (key == "seed") { cfg.seed = parse_u64(value, where); cfg.seed_set = true; }
    else if (key == "out") cfg.out_dir = value;
    else throw std::invalid_argument("[run]: unknown key '" + key + "'");
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  return from_ini(io::IniFile::load(path));
}

io::IniFile RunConfig::to_ini() const {
  io::IniFile ini;
  if (custom_topology) {
    const auto& t = *custom_topology;
    ini.set("network", "nodes", std::to_string(t.node_count()));
    std::string edges;
    for (const auto& [u, d] : t.edges)
      edges += (edges.empty() ? "" : ",") + std::to_string(u) + ":" + std::to_string(d);
    ini.set("network", "edges", edges);
    for (const auto& n : t.nodes) {
      const std::string p = "node" + std::to_string(n.node_id) + ".";
      ini.set("network", p + "sell_price", io::format_double(n.sell_price));
      ini.set("network", p + "replenish_cost", io::format_double(n.replenish_cost));
      ini.set("network", p + "storage_cost", io::format_double(n.storage_cost));
      ini.set("network", p + "backlog_cost", io::format_double(n.backlog_cost));
      ini.set("network", p + "storage_capacity", std::to_string(n.storage_capacity));
      ini.set("network", p + "order_limit", std::to_string(n.order_limit));
      ini.set("network", p + "lead_time", std::to_string(n.lead_time));
      ini.set("network", p + "initial_inventory", std::to_string(n.initial_inventory));
    }
  } else {
    ini.set("network", "preset", preset_name);
  }
  ini.set("uncertainty", "setting", stochastic::to_string(uncertainty.setting));
  ini.set("uncertainty", "lambda_poisson", io::format_double(uncertainty.lambda_poisson));
  if (uncertainty.setting == stochastic::Setting::S2)
    ini.set("uncertainty", "p_d", io::format_double(uncertainty.spike_prob));
  if (uncertainty.setting == stochastic::Setting::S3)
    ini.set("uncertainty", "p_tau", io::format_double(uncertainty.delivery_prob));
  if (uncertainty.deterministic_demand)
    ini.set("uncertainty", "deterministic_demand", "true");
  ini.set("uncertainty", "seed", std::to_string(eval_seed));
  ini.set("scheme", "scheme", scheme_name);
  ini.set("scheme", "reward_mode",
          reward_mode == sim::RewardMode::shared ? "shared" : "independent");
  if (obs_config) ini.set("scheme", "obs_config", std::to_string(*obs_config));
  if (scheme_name == "dshlp") {
    ini.set("scheme", "rho", io::format_double(dshlp.rho));
    ini.set("scheme", "max_iterations", std::to_string(dshlp.max_iterations));
    ini.set("scheme", "tolerance", io::format_double(dshlp.tolerance));
  }
  if (is_rl_scheme()) {
    ini.set("hyperparams", "batch_size", std::to_string(hp.batch_size));
    ini.set("hyperparams", "minibatch_size", std::to_string(hp.minibatch_size));
    ini.set("hyperparams", "epochs", std::to_string(hp.epochs));
    ini.set("hyperparams", "clip_epsilon", io::format_double(hp.clip_epsilon));
    ini.set("hyperparams", "discount", io::format_double(hp.discount));
    ini.set("hyperparams", "gae_lambda", io::format_double(hp.gae_lambda));
    ini.set("hyperparams", "kl_coef_init", io::format_double(hp.kl_coef_init));
    ini.set("hyperparams", "kl_target", io::format_double(hp.kl_target));
    ini.set("hyperparams", "learning_rate", io::format_double(hp.learning_rate));
    ini.set("hyperparams", "fc1", std::to_string(hp.fc1));
    ini.set("hyperparams", "fc2", std::to_string(hp.fc2));
    ini.set("hyperparams", "history_length", std::to_string(hp.history_length));
    ini.set("hyperparams", "normalize_advantages",
            hp.normalize_advantages ? "true" : "false");
  }
  ini.set("run", "iterations", std::to_string(iterations));
  ini.set("run", "episodes", std::to_string(episodes));
  ini.set("run", "horizon", std::to_string(horizon));
  ini.set("run", "seed", std::to_string(seed));
  ini.set("run", "out", out_dir);
  return ini;
}

uint64_t RunConfig::config_hash() const {
  const std::string text = to_ini().serialize();
  return fnv1a(text.data(), text.size());
}

namespace {

marl::AgentScheme agent_scheme_for(const RunConfig& cfg, const network::NetworkTopology& topo) {
  auto scheme = marl::AgentScheme::defaults_for(marl::scheme_from_string(cfg.scheme_name), topo,
                                                cfg.hp.history_length);
  scheme.reward_mode = cfg.reward_mode;
  if (cfg.obs_config) {
    const bool one_hot = scheme.obs_spec.append_agent_one_hot;
    const int slots = scheme.obs_spec.shipment_slots_override;
    scheme.obs_spec = sim::ObservationSpec::from_config(*cfg.obs_config, cfg.hp.history_length);
    scheme.obs_spec.append_agent_one_hot = one_hot;
    scheme.obs_spec.shipment_slots_override = slots;
  }
  return scheme;
}

void write_curve_csv(const std::string& path, const std::vector<marl::CurveRow>& curve) {
  io::CsvWriter csv(path, {"iteration", "agent", "mean_episode_reward", "mean_kl", "beta",
                           "clip_fraction", "value_loss"});
  for (const auto& row : curve)
    csv.row({std::to_string(row.iteration), std::to_string(row.agent),
             io::format_double(row.mean_episode_reward), io::format_double(row.mean_kl),
             io::format_double(row.beta), io::format_double(row.clip_fraction),
             io::format_double(row.value_loss)});
}

}  // namespace

std::string cli_train(const RunConfig& config) {
  if (!config.is_rl_scheme())
    throw std::invalid_argument("train: scheme '" + config.scheme_name + "' is not trainable");
  if (!config.seed_set)
    throw std::invalid_argument("train: missing required key 'seed' in [run]");
  const auto topo = config.topology();
  const std::string dir = config.out_dir;
  io::ensure_directory(dir);
  config.to_ini().save(dir + "/manifest.ini");

  auto scheme = agent_scheme_for(config, topo);
  auto result = marl::train(scheme, topo, config.uncertainty, config.hp, config.iterations,
                            config.seed, config.horizon);
  result.bundle.config_hash = config.config_hash();
  result.bundle.save(dir + "/checkpoint.bin");
  write_curve_csv(dir + "/curve.csv", result.curve);
  if (result.aborted)
    io::write_text_file(dir + "/ABORTED.txt",
                        "training stopped on a non-finite update; checkpoint holds the last "
                        "good parameters\n");
  return dir;
}

metrics::MetricsReport evaluate_scheme(const RunConfig& config,
                                       const marl::PolicyBundle* bundle,
                                       std::vector<marl::DshlpConvergenceRow>* convergence,
                                       int workers) {
  const auto topo = config.topology();
  marl::EvalOptions options;
  options.episodes = config.episodes;
  options.horizon = config.horizon;
  options.eval_seed = config.eval_seed;
  options.workers = workers;
  if (config.scheme_name == "oracle")
    return marl::evaluate_oracle(topo, config.uncertainty, options);
  if (config.scheme_name == "shlp") return marl::evaluate_shlp(topo, config.uncertainty, options);
  if (config.scheme_name == "dshlp")
    return marl::evaluate_dshlp(topo, config.uncertainty, options, config.dshlp, convergence);
  if (!bundle) throw std::invalid_argument("evaluate: RL scheme needs a checkpoint");
  return marl::evaluate_policy(*bundle, topo, config.uncertainty, options);
}

void write_report(const std::string& dir, const metrics::MetricsReport& report,
                  double oracle_mean) {
  {
    io::CsvWriter csv(dir + "/summary.csv",
                      {"method", "mean_reward", "std_reward", "oracle_ratio", "mean_inventory",
                       "mean_backlog", "episodes"});
    csv.row({report.method, io::format_double(report.mean_reward),
             io::format_double(report.std_reward),
             io::format_double(oracle_mean != 0.0 ? report.mean_reward / oracle_mean : 0.0),
             io::format_double(report.mean_inventory), io::format_double(report.mean_backlog),
             std::to_string(report.episodes.size())});
  }
  {
    io::CsvWriter csv(dir + "/metrics.csv",
                      {"episode", "reward", "mean_inventory", "mean_backlog"});
    for (const auto& e : report.episodes)
      csv.row({std::to_string(e.episode), io::format_double(e.reward),
               io::format_double(e.mean_inventory), io::format_double(e.mean_backlog)});
  }
  {
    io::CsvWriter csv(dir + "/cumulative.csv", {"period", "mean_cumulative_profit"});
    for (size_t t = 0; t < report.cumulative_profit.size(); ++t)
      csv.row({std::to_string(t), io::format_double(report.cumulative_profit[t])});
  }
  io::write_text_file(dir + "/trace_hash.txt", std::to_string(report.trace_hash) + "\n");
}

std::string cli_evaluate(const RunConfig& config, const std::string& checkpoint_path) {
  const std::string dir = config.out_dir;
  io::ensure_directory(dir);
  config.to_ini().save(dir + "/manifest.ini");

  std::optional<marl::PolicyBundle> bundle;
  if (config.is_rl_scheme()) {
    std::string path = checkpoint_path.empty() ? dir + "/checkpoint.bin" : checkpoint_path;
    bundle = marl::PolicyBundle::load(path);
    if (marl::to_string(bundle->scheme.kind) != config.scheme_name)
      throw std::invalid_argument("evaluate: checkpoint holds scheme '" +
                                  marl::to_string(bundle->scheme.kind) +
                                  "' but the config asks for '" + config.scheme_name + "'");
  }
  std::vector<marl::DshlpConvergenceRow> convergence;
  auto report = evaluate_scheme(config, bundle ? &*bundle : nullptr, &convergence,
                                worker_budget());

  double oracle_mean = 0.0;
  if (config.scheme_name == "oracle") {
    oracle_mean = report.mean_reward;
  } else {
    RunConfig oracle_cfg = config;
    oracle_cfg.scheme_name = "oracle";
    auto oracle_report = evaluate_scheme(oracle_cfg, nullptr, nullptr, worker_budget());
    oracle_mean = oracle_report.mean_reward;
  }
  write_report(dir, report, oracle_mean);
  if (config.scheme_name == "dshlp") {
    io::CsvWriter csv(dir + "/convergence.csv",
                      {"episode", "period", "iterations", "primal_residual", "dual_residual",
                       "converged"});
    for (const auto& row : convergence)
      csv.row({std::to_string(row.episode), std::to_string(row.period),
               std::to_string(row.iterations), io::format_double(row.primal_residual),
               io::format_double(row.dual_residual), row.converged ? "1" : "0"});
  }
  return dir;
}

// ---------------------------------------------------------------------------
// experiment matrices
// ---------------------------------------------------------------------------

namespace {

struct CellResult {
  std::string cell;
  std::string method;
  int seed = -1;  // -1 = aggregate over seeds
  double reward = 0.0, reward_std = 0.0, ratio = 0.0, inventory = 0.0, backlog = 0.0;
};

struct CellSpec {
  std::string name;
  std::string preset;
  stochastic::UncertaintyConfig uncertainty;
  stochastic::UncertaintyConfig train_uncertainty;  // may differ (train-without-noise)
  sim::RewardMode reward_mode = sim::RewardMode::shared;
  std::vector<std::string> methods;
};

std::vector<CellResult> run_cell(const CellSpec& spec, const std::string& dir,
                                 const ExperimentOptions& opt) {
  io::ensure_directory(dir);
  std::vector<CellResult> rows;
  double oracle_mean = 0.0;

  auto make_config = [&](const std::string& method, uint64_t seed) {
    RunConfig cfg;
    cfg.preset_name = spec.preset;
    cfg.uncertainty = spec.uncertainty;
    cfg.scheme_name = method;
    cfg.reward_mode = spec.reward_mode;
    cfg.iterations = opt.iterations;
    cfg.episodes = opt.episodes;
    cfg.horizon = opt.horizon;
    cfg.seed = seed;
    cfg.seed_set = true;
    if (method == "mappo") cfg.hp = ppo::PpoHyperparams::mappo();
    else if (method == "centralized") cfg.hp = ppo::PpoHyperparams::centralized();
    else cfg.hp = ppo::PpoHyperparams::ippo();
    cfg.out_dir = dir + "/" + method + (cfg.is_rl_scheme() ? "_s" + std::to_string(seed) : "");
    return cfg;
  };

  for (const auto& method : spec.methods) {
    RunConfig base = make_config(method, 1);
    if (base.is_rl_scheme()) {
      std::vector<double> rewards, ratios, invs, backs;
      for (int s = 1; s <= opt.seeds; ++s) {
        RunConfig cfg = make_config(method, static_cast<uint64_t>(s));
        RunConfig train_cfg = cfg;
        train_cfg.uncertainty = spec.train_uncertainty;
        try {
          cli_train(train_cfg);
          auto bundle = marl::PolicyBundle::load(cfg.out_dir + "/checkpoint.bin");
          auto report = evaluate_scheme(cfg, &bundle, nullptr, opt.workers);
          write_report(cfg.out_dir, report, oracle_mean);
          rows.push_back(CellResult{spec.name, method, s, report.mean_reward,
                                    report.std_reward,
                                    oracle_mean != 0 ? report.mean_reward / oracle_mean : 0.0,
                                    report.mean_inventory, report.mean_backlog});
          rewards.push_back(report.mean_reward);
          ratios.push_back(rows.back().ratio);
          invs.push_back(report.mean_inventory);
          backs.push_back(report.mean_backlog);
        } catch (const std::exception& err) {
          // record the failure and keep the matrix moving
          io::ensure_directory(cfg.out_dir);
          io::write_text_file(cfg.out_dir + "/FAILED.txt", std::string(err.what()) + "\n");
        }
      }
      if (!rewards.empty()) {
        CellResult agg;
        agg.cell = spec.name;
        agg.method = method;
        double mean = 0;
        for (double r : rewards) mean += r;
        mean /= static_cast<double>(rewards.size());
        double sq = 0;
        for (double r : rewards) sq += (r - mean) * (r - mean);
        agg.reward = mean;
        agg.reward_std = rewards.size() > 1
                             ? std::sqrt(sq / static_cast<double>(rewards.size() - 1))
                             : 0.0;
        for (double v : ratios) agg.ratio += v;
        agg.ratio /= static_cast<double>(ratios.size());
        for (double v : invs) agg.inventory += v;
        agg.inventory /= static_cast<double>(invs.size());
        for (double v : backs) agg.backlog += v;
        agg.backlog /= static_cast<double>(backs.size());
        rows.push_back(agg);
      }
    } else {
      RunConfig cfg = make_config(method, 0);
      std::vector<marl::DshlpConvergenceRow> convergence;
      auto report = evaluate_scheme(cfg, nullptr, &convergence, opt.workers);
      io::ensure_directory(cfg.out_dir);
      if (method == "oracle") oracle_mean = report.mean_reward;
      write_report(cfg.out_dir, report, oracle_mean);
      rows.push_back(CellResult{spec.name, method, -1, report.mean_reward, report.std_reward,
                                oracle_mean != 0 ? report.mean_reward / oracle_mean : 0.0,
                                report.mean_inventory, report.mean_backlog});
    }
  }
  return rows;
}

void write_table(const std::string& path, const std::vector<CellResult>& rows) {
  io::CsvWriter csv(path, {"cell", "method", "seed", "reward", "reward_std", "oracle_ratio",
                           "inventory", "backlog"});
  for (const auto& r : rows)
    csv.row({r.cell, r.method, std::to_string(r.seed), io::format_double(r.reward),
             io::format_double(r.reward_std), io::format_double(r.ratio),
             io::format_double(r.inventory), io::format_double(r.backlog)});
}

const std::vector<std::string> kAllMethods = {"oracle",      "dshlp", "centralized",
                                              "ippo", "ippo_shared", "mappo"};

}  // namespace

std::string cli_experiment(const std::string& matrix_name, const std::string& out_dir,
                           const ExperimentOptions& opt) {
  io::ensure_directory(out_dir);
  std::vector<CellResult> all;
  auto s1 = stochastic::UncertaintyConfig{};

  auto append = [&](const CellSpec& spec) {
    auto rows = run_cell(spec, out_dir + "/" + spec.name, opt);
    all.insert(all.end(), rows.begin(), rows.end());
  };

  if (matrix_name == "base_case") {
    append(CellSpec{"four_stage_s1", "four_stage", s1, s1, sim::RewardMode::shared,
                    kAllMethods});
  } else if (matrix_name == "divergent") {
    append(CellSpec{"divergent_s1", "divergent", s1, s1, sim::RewardMode::shared, kAllMethods});
  } else if (matrix_name == "size_sweep") {
    for (const std::string preset : {"two_stage", "four_stage", "eight_stage"})
      append(CellSpec{preset, preset, s1, s1, sim::RewardMode::shared,
                      {"oracle", "centralized", "ippo", "ippo_shared", "mappo"}});
  } else if (matrix_name == "demand_sweep" || matrix_name == "leadtime_sweep") {
    const bool demand = matrix_name == "demand_sweep";
    const auto& levels = demand ? opt.demand_spike_levels : opt.delivery_prob_levels;
    for (double level : levels) {
      stochastic::UncertaintyConfig u;
      u.setting = demand ? stochastic::Setting::S2 : stochastic::Setting::S3;
      if (demand) u.spike_prob = level;
      else u.delivery_prob = level;
      append(CellSpec{(demand ? "pd_" : "ptau_") + io::format_double(level), "four_stage", u, u,
                      sim::RewardMode::shared,
                      {"oracle", "dshlp", "ippo", "ippo_shared", "mappo"}});
    }
  } else if (matrix_name == "train_without_noise") {
    for (const bool demand : {true, false}) {
      const auto& levels = demand ? opt.demand_spike_levels : opt.delivery_prob_levels;
      for (double level : levels) {
        stochastic::UncertaintyConfig u;
        u.setting = demand ? stochastic::Setting::S2 : stochastic::Setting::S3;
        if (demand) u.spike_prob = level;
        else u.delivery_prob = level;
        CellSpec spec{(demand ? "clean_pd_" : "clean_ptau_") + io::format_double(level),
                      "four_stage", u, s1, sim::RewardMode::shared,
                      {"oracle", "centralized", "ippo", "ippo_shared", "mappo"}};
        append(spec);
      }
    }
  } else if (matrix_name == "independent_rewards") {
    for (const std::string preset : {"four_stage", "divergent"}) {
      for (const auto mode : {sim::RewardMode::shared, sim::RewardMode::independent}) {
        const bool indep = mode == sim::RewardMode::independent;
        append(CellSpec{preset + (indep ? "_independent" : "_shared"), preset, s1, s1, mode,
                        {"oracle", "ippo", "ippo_shared", "mappo"}});
      }
    }
  } else {
    throw std::invalid_argument(
        "unknown experiment matrix '" + matrix_name +
        "' (expected base_case|divergent|size_sweep|demand_sweep|leadtime_sweep|"
        "train_without_noise|independent_rewards)");
  }

  const std::string table = out_dir + "/table.csv";
  write_table(table, all);
  return table;
}

// ---------------------------------------------------------------------------
// plots
// ---------------------------------------------------------------------------

std::vector<std::string> cli_plot(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;

  auto maybe = [&](const std::string& file) { return fs::exists(dir + "/" + file); };

  if (maybe("curve.csv")) {
    auto table = io::read_csv(dir + "/curve.csv");
    if (table.rows.empty()) {
      std::cerr << "plot: curve.csv is empty, skipping\n";
    } else {
      const int ci = table.column("iteration"), ca = table.column("agent"),
                cr = table.column("mean_episode_reward");
      std::map<std::string, svg::Series> by_agent;
      for (const auto& row : table.rows) {
        auto& s = by_agent["agent " + row[static_cast<size_t>(ca)]];
        s.label = "agent " + row[static_cast<size_t>(ca)];
        s.x.push_back(std::stod(row[static_cast<size_t>(ci)]));
        s.y.push_back(std::stod(row[static_cast<size_t>(cr)]));
      }
      std::vector<svg::Series> series;
      for (auto& [k, v] : by_agent) series.push_back(v);
      svg::line_chart(dir + "/curve.svg", "training reward", "iteration",
                      "mean episode reward", series);
      written.push_back(dir + "/curve.svg");
    }
  }
  if (maybe("cumulative.csv")) {
    auto table = io::read_csv(dir + "/cumulative.csv");
    if (!table.rows.empty()) {
      svg::Series s;
      s.label = "cumulative profit";
      for (const auto& row : table.rows) {
        s.x.push_back(std::stod(row[0]));
        s.y.push_back(std::stod(row[1]));
      }
      svg::line_chart(dir + "/cumulative.svg", "cumulative profit", "period", "profit", {s});
      written.push_back(dir + "/cumulative.svg");
    }
  }
  if (maybe("table.csv")) {
    auto table = io::read_csv(dir + "/table.csv");
    if (!table.rows.empty()) {
      const int cc = table.column("cell"), cm = table.column("method"),
                cs = table.column("seed"), cr = table.column("oracle_ratio");
      std::vector<std::string> cells;
      std::map<std::string, std::map<std::string, double>> ratio;  // method -> cell -> ratio
      for (const auto& row : table.rows) {
        if (row[static_cast<size_t>(cs)] != "-1") continue;  // aggregates only
        const auto& cell = row[static_cast<size_t>(cc)];
        if (std::find(cells.begin(), cells.end(), cell) == cells.end()) cells.push_back(cell);
        ratio[row[static_cast<size_t>(cm)]][cell] = std::stod(row[static_cast<size_t>(cr)]);
      }
      if (!cells.empty() && !ratio.empty()) {
        std::vector<svg::Series> series;
        for (auto& [method, per_cell] : ratio) {
          svg::Series s;
          s.label = method;
          for (const auto& cell : cells) s.y.push_back(per_cell.count(cell) ? per_cell[cell] : 0.0);
          series.push_back(s);
        }
        svg::bar_chart(dir + "/table.svg", "reward relative to the perfect-information bound",
                       cells, series);
        written.push_back(dir + "/table.svg");
      }
    }
  }
  if (written.empty()) std::cerr << "plot: nothing to draw in " << dir << "\n";
  return written;
}

}  // namespace echelon::harness
