#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "echelon/dshlp.hpp"

using namespace echelon;
using namespace echelon::admm;
using echelon::network::NodeConfig;

namespace {

NodeConfig simple_node(int id, double p, double c, double i, double b, int tau, int i0) {
  NodeConfig n;
  n.node_id = id;
  n.sell_price = p;
  n.replenish_cost = c;
  n.storage_cost = i;
  n.backlog_cost = b;
  n.lead_time = tau;
  n.initial_inventory = i0;
  return n;
}

network::NetworkTopology two_node_chain() {
  return network::make_topology(
      {simple_node(1, 2, 1, 0.2, 0.3, 1, 6), simple_node(2, 4, 2, 0.3, 0.8, 1, 6)}, {{1, 2}});
}

}  // namespace

TEST_CASE("box-constrained quadratic program hits the KKT solution") {
  // minimize (x1-2)^2 + (x2+1)^2 subject to 0 <= x <= 1.5
  qp::Matrix P = 2.0 * qp::Matrix::Identity(2, 2);
  qp::Vector q(2);
  q << -4.0, 2.0;
  qp::Matrix C = qp::Matrix::Identity(2, 2);
  qp::Vector lo = qp::Vector::Zero(2), hi = qp::Vector::Constant(2, 1.5);
  qp::QpSettings settings;
  settings.eps_abs = 1e-10;
  settings.max_iterations = 20000;
  qp::QpSolver solver(P, C, lo, hi, settings);
  auto result = solver.solve(q);
  REQUIRE(result.converged);
  CHECK(result.x[0] == doctest::Approx(1.5).epsilon(1e-6));   // clamped
  CHECK(result.x[1] == doctest::Approx(0.0).epsilon(1e-6));   // clamped at zero
}

TEST_CASE("equality-constrained quadratic program (hand KKT)") {
  // minimize (1/2)(x1^2 + x2^2) - x1 subject to x1 + x2 = 1
  // KKT: x1 - 1 + v = 0, x2 + v = 0, x1 + x2 = 1  =>  x = (1, 0)
  qp::Matrix P = qp::Matrix::Identity(2, 2);
  qp::Vector q(2);
  q << -1.0, 0.0;
  qp::Matrix C(1, 2);
  C << 1, 1;
  qp::Vector lo(1), hi(1);
  lo << 1.0;
  hi << 1.0;
  qp::QpSettings settings;
  settings.eps_abs = 1e-10;
  settings.max_iterations = 20000;
  qp::QpSolver solver(P, C, lo, hi, settings);
  auto result = solver.solve(q);
  REQUIRE(result.converged);
  CHECK(result.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(result.x[1] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("subproblem with vanishing penalty reduces to the node's own plan") {
  // retailer alone: fixed demand, no consensus partners, rho irrelevant;
  // the best play is to sell the starting stock and order nothing that
  // cannot pay off in the window
  auto cfg = simple_node(1, 5, 4, 0.2, 0.9, 1, 4);
  stochastic::UncertaintyConfig u;
  u.deterministic_demand = true;
  u.lambda_poisson = 2.0;
  auto topo = network::single_node(cfg);
  sim::Environment env(topo, u, sim::ObservationSpec::from_config(1, 1), 2);
  env.reset(3, 0);
  DshlpConfig config;
  config.rho = 1e-8;
  config.max_iterations = 1;
  DshlpCoordinator coordinator(env, 2, config);
  coordinator.run();
  const auto& sub = coordinator.subproblems()[0];
  // demand 2 per period, stock 4: sell it all, never order (order at t=0
  // arrives at t=1 but stock already covers the window)
  CHECK(sub.copies()[sub.idx_sale(0, 0)] == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(sub.copies()[sub.idx_sale(0, 1)] == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(sub.copies()[sub.idx_order(0)] == doctest::Approx(0.0).epsilon(1e-4).scale(1.0));
  CHECK(coordinator.first_period_orders()[0] == 0);
}

TEST_CASE("consensus values from a pinned optimum keep the subproblem in place") {
  // single retailer whose variables are fully pinned by constraints: stock
  // below demand, so sales sit on the stock cap and ordering is pure cost
  auto cfg = simple_node(1, 5, 4, 0.2, 0.9, 1, 1);
  stochastic::UncertaintyConfig u;
  u.deterministic_demand = true;
  u.lambda_poisson = 3.0;
  auto topo = network::single_node(cfg);
  sim::Environment env(topo, u, sim::ObservationSpec::from_config(1, 1), 1);
  env.reset(4, 0);
  DshlpConfig config;
  config.max_iterations = 1;
  DshlpCoordinator coordinator(env, 1, config);
  coordinator.run();
  const auto& sub = coordinator.subproblems()[0];
  CHECK(sub.copies()[sub.idx_sale(0, 0)] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(sub.copies()[sub.idx_order(0)] == doctest::Approx(0.0).epsilon(1e-5).scale(1.0));
  CHECK(sub.copies()[sub.idx_backlog(0, 0)] == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("coordination averages the two local copies") {
  auto topo = two_node_chain();
  stochastic::UncertaintyConfig u;
  u.deterministic_demand = true;
  u.lambda_poisson = 3.0;
  sim::Environment env(topo, u, sim::ObservationSpec::from_config(1, 1), 3);
  env.reset(5, 0);
  DshlpConfig config;
  config.max_iterations = 1;
  DshlpCoordinator coordinator(env, 3, config);
  coordinator.run();
  const auto& ws = coordinator.workspace();
  REQUIRE(ws.links.size() == 1);
  const auto& up = coordinator.subproblems()[0];
  const auto& down = coordinator.subproblems()[1];
  for (int k = 0; k < 3; ++k) {
    const double expected =
        0.5 * (down.copies()[down.idx_order(k)] + up.copies()[up.idx_demand(0, k)]);
    CHECK(ws.links[0].z_order[k] == doctest::Approx(expected).epsilon(1e-12));
  }
  // dual residuals are symmetric around the average
  for (int k = 0; k < 3; ++k) {
    const double r_down = down.copies()[down.idx_order(k)] - ws.links[0].z_order[k];
    const double r_up = up.copies()[up.idx_demand(0, k)] - ws.links[0].z_order[k];
    CHECK(r_down == doctest::Approx(-r_up).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("duals stay fixed once copies agree with the consensus") {
  // run to convergence, then one more sweep: dual movement is bounded by
  // the residual tolerance
  auto topo = two_node_chain();
  stochastic::UncertaintyConfig u;
  u.deterministic_demand = true;
  u.lambda_poisson = 3.0;
  sim::Environment env(topo, u, sim::ObservationSpec::from_config(1, 1), 3);
  env.reset(6, 0);
  DshlpConfig config;
  config.max_iterations = 400;
  config.tolerance = 1e-6;
  DshlpCoordinator coordinator(env, 3, config);
  auto stats = coordinator.run();
  REQUIRE(stats.converged);
  CHECK(stats.primal_residual < 1e-6);
}

TEST_CASE("two-node chain reaches the centralized optimum within one percent") {
  auto topo = two_node_chain();
  stochastic::UncertaintyConfig u;
  u.deterministic_demand = true;
  u.lambda_poisson = 3.0;
  const int horizon = 3;
  sim::Environment env(topo, u, sim::ObservationSpec::from_config(1, 1), horizon);
  env.reset(7, 0);

  DshlpConfig config;
  config.rho = 1.0;
  config.max_iterations = 500;
  config.tolerance = 1e-5;
  DshlpCoordinator coordinator(env, horizon, config);
  auto stats = coordinator.run();

  std::vector<std::vector<double>> demand = {{3.0, 3.0, 3.0}};
  auto model = lp::build_lp(topo, horizon, demand, lp::LpInitialState::fresh(topo, horizon));
  auto central = lp::solve_lp(model);
  REQUIRE(central.status == lp::LpSolution::Status::optimal);

  CHECK(stats.iterations <= 500);
  CHECK(std::abs(stats.objective - central.objective) <=
        0.01 * std::max(1.0, std::abs(central.objective)));
}

TEST_CASE("zero iterations enact the cold-start initialization") {
  auto topo = two_node_chain();
  stochastic::UncertaintyConfig u;
  u.deterministic_demand = true;
  u.lambda_poisson = 3.0;
  sim::Environment env(topo, u, sim::ObservationSpec::from_config(1, 1), 3);
  env.reset(8, 0);
  DshlpConfig config;
  config.max_iterations = 0;
  DshlpCoordinator coordinator(env, 3, config);
  auto stats = coordinator.run();
  CHECK(!stats.converged);
  CHECK(coordinator.first_period_orders() == std::vector<int>{0, 0});
}

TEST_CASE("subproblems only reference adjacent links") {
  auto topo = network::preset(network::Preset::divergent);
  stochastic::UncertaintyConfig u;
  sim::Environment env(topo, u, sim::ObservationSpec::from_config(1, 1), 5);
  env.reset(9, 0);
  DshlpConfig config;
  config.max_iterations = 1;
  DshlpCoordinator coordinator(env, 5, config);
  const auto& ws = coordinator.workspace();
  for (const auto& sub : coordinator.subproblems()) {
    const int id = sub.node_id();
    if (sub.upstream_link() >= 0)
      CHECK(ws.links[static_cast<size_t>(sub.upstream_link())].down == id);
    else
      CHECK(id == 1);
    for (const auto& [slot, li] : sub.downstream_links()) {
      (void)slot;
      CHECK(ws.links[static_cast<size_t>(li)].up == id);
    }
  }
}

TEST_CASE("residual envelope shrinks on a convergent run") {
  auto topo = two_node_chain();
  stochastic::UncertaintyConfig u;
  u.deterministic_demand = true;
  u.lambda_poisson = 3.0;
  sim::Environment env(topo, u, sim::ObservationSpec::from_config(1, 1), 4);
  env.reset(10, 0);
  DshlpConfig config;
  config.max_iterations = 300;
  config.tolerance = 1e-6;
  DshlpCoordinator coordinator(env, 4, config);
  auto stats = coordinator.run();
  REQUIRE(stats.converged);
  const auto& hist = coordinator.workspace().primal_history;
  REQUIRE(hist.size() > 4);
  // best-so-far envelope is non-increasing and ends far below the start
  double best = hist.front();
  for (double v : hist) best = std::min(best, v);
  CHECK(best == doctest::Approx(hist.back()).epsilon(10.0).scale(1e-6));
  CHECK(hist.back() <= hist.front());
}

TEST_CASE("policy warm starts keep per-episode stats and convergence flags") {
  auto topo = two_node_chain();
  stochastic::UncertaintyConfig u;
  u.lambda_poisson = 3.0;
  const int horizon = 4;
  sim::Environment env(topo, u, sim::ObservationSpec::from_config(1, 1), horizon);
  env.reset(11, 0);
  DshlpConfig config;
  config.max_iterations = 250;
  DshlpPolicy policy(horizon, config);
  policy.start_episode();
  for (int t = 0; t < horizon; ++t) {
    auto orders = policy.act(env);
    env.step_orders(orders);
  }
  REQUIRE(policy.step_stats().size() == static_cast<size_t>(horizon));
  for (const auto& s : policy.step_stats()) CHECK(s.iterations >= 1);
}
