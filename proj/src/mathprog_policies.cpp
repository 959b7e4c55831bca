#include "echelon/mathprog.hpp"

#include <cmath>
#include <stdexcept>

namespace echelon::lp {

double expected_demand(const stochastic::UncertaintyConfig& cfg) {
  if (cfg.deterministic_demand) return std::llround(cfg.lambda_poisson);
  if (cfg.setting == stochastic::Setting::S2) {
    // zero spike wins over the doubling spike, both at probability p_d
    const double p = cfg.spike_prob;
    return cfg.lambda_poisson * (1.0 - p) * (1.0 + p);
  }
  return cfg.lambda_poisson;
}

namespace {

int round_order(double v, int limit) {
  int o = static_cast<int>(std::floor(v + 0.5));
  if (o < 0) o = 0;
  if (o > limit) o = limit;
  return o;
}

std::vector<std::vector<int>> extract_order_plan(const LpModel& model, const Vector& x,
                                                 const network::NetworkTopology& topo) {
  std::vector<std::vector<int>> plan(static_cast<size_t>(model.horizon));
  for (int k = 0; k < model.horizon; ++k) {
    plan[static_cast<size_t>(k)].resize(static_cast<size_t>(model.node_count));
    for (int id = 1; id <= model.node_count; ++id)
      plan[static_cast<size_t>(k)][static_cast<size_t>(id - 1)] =
          round_order(x[model.var_index(VarKind::order, id, k)], topo.node(id).order_limit);
  }
  return plan;
}

}  // namespace

OracleResult oracle_run(const network::NetworkTopology& topo,
                        const stochastic::UncertaintyConfig& uncertainty, uint64_t seed,
                        uint64_t episode, int horizon) {
  // The oracle plans and replays with nominal lead times; demand draws keyed
  // the same way across settings, so the realized trace matches what the
  // other methods face.
  stochastic::UncertaintyConfig replay_cfg = uncertainty;
  if (replay_cfg.setting == stochastic::Setting::S3)
    replay_cfg.setting = stochastic::Setting::S1;

  std::vector<std::vector<double>> demand(topo.retailers.size());
  for (size_t r = 0; r < topo.retailers.size(); ++r) {
    demand[r].resize(static_cast<size_t>(horizon));
    for (int t = 0; t < horizon; ++t)
      demand[r][static_cast<size_t>(t)] = stochastic::demand_at(
          replay_cfg, seed, episode, topo.retailers[r], t);
  }

  LpModel model = build_lp(topo, horizon, demand, LpInitialState::fresh(topo, horizon));
  LpSolution sol = solve_lp(model);
  if (sol.status != LpSolution::Status::optimal)
    throw std::runtime_error("oracle_run: benchmark model did not solve to optimality");

  OracleResult result;
  result.lp_objective = sol.objective;
  result.orders = extract_order_plan(model, sol.values, topo);

  sim::Environment env(topo, replay_cfg, sim::ObservationSpec::from_config(1, 1), horizon);
  env.reset(seed, episode);
  double profit = 0.0, inv = 0.0, back = 0.0;
  for (int t = 0; t < horizon; ++t) {
    auto res = env.step_orders(result.orders[static_cast<size_t>(t)]);
    profit += res.scn_profit;
    result.period_profit.push_back(res.scn_profit);
    for (const auto& ns : env.state().nodes) {
      inv += ns.on_hand;
      back += ns.total_backlog();
    }
  }
  result.realized_profit = profit;
  result.mean_inventory = inv / horizon;
  result.mean_backlog = back / horizon;
  return result;
}

std::vector<int> shlp_orders(const sim::Environment& env, int total_horizon) {
  const auto& topo = env.topology();
  const int j = env.state().period;
  const int h = total_horizon - j;
  if (h < 1) throw std::invalid_argument("shlp_orders: nothing left to plan");

  const double mean_demand = expected_demand(env.uncertainty());
  std::vector<std::vector<double>> demand(topo.retailers.size());
  for (size_t r = 0; r < topo.retailers.size(); ++r) {
    demand[r].assign(static_cast<size_t>(h), mean_demand);
    // current period's demand is realized within this step
    demand[r][0] = env.customer_demand_at(topo.retailers[r], j);
  }

  LpModel model = build_lp(topo, h, demand, LpInitialState::from_environment(env, h), j);
  LpSolution sol = solve_lp(model);
  if (sol.status != LpSolution::Status::optimal)
    throw std::runtime_error("shlp_orders: shrinking-horizon model did not solve");

  std::vector<int> orders(static_cast<size_t>(topo.node_count()));
  for (int id = 1; id <= topo.node_count(); ++id)
    orders[static_cast<size_t>(id - 1)] =
        round_order(sol.values[model.var_index(VarKind::order, id, 0)],
                    topo.node(id).order_limit);
  return orders;
}

}  // namespace echelon::lp
