#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "echelon/simulator.hpp"
#include "reference_simulator.hpp"

using namespace echelon;
using namespace echelon::sim;
using echelon::network::NodeConfig;
using echelon::network::Preset;
using echelon::network::preset;
using echelon::stochastic::Setting;
using echelon::stochastic::UncertaintyConfig;

namespace {

UncertaintyConfig setting(Setting s, double lambda = 5.0, double pd = 0.1, double ptau = 0.7) {
  UncertaintyConfig cfg;
  cfg.setting = s;
  cfg.lambda_poisson = lambda;
  if (s == Setting::S2) cfg.spike_prob = pd;
  if (s == Setting::S3) cfg.delivery_prob = ptau;
  return cfg;
}

NodeConfig retailer_node() {
  NodeConfig n;
  n.sell_price = 5;
  n.replenish_cost = 4;
  n.storage_cost = 0.2;
  n.backlog_cost = 0.9;
  n.lead_time = 1;
  n.initial_inventory = 10;
  return n;
}

}  // namespace

TEST_CASE("action rescaling endpoints and midpoint") {
  CHECK(rescale_action(-1.0, 30) == 0);
  CHECK(rescale_action(1.0, 30) == 30);
  CHECK(rescale_action(0.0, 30) == 15);
  CHECK(rescale_action(-1.0 + 2.0 / 30.0, 30) == 1);
  CHECK(rescale_action(0.5, 30) == 23);  // 22.5 rounds half-up
  CHECK_THROWS_AS(rescale_action(1.5, 30), std::invalid_argument);
}

TEST_CASE("proportional allocation follows largest remainder with id tie-break") {
  // divergent split: 5 units against entitlements {4, 4} -> {3, 2}
  CHECK(proportional_allocation(5, {4, 4}) == std::vector<int>{3, 2});
  CHECK(proportional_allocation(0, {4, 4}) == std::vector<int>{0, 0});
  CHECK(proportional_allocation(9, {4, 4}) == std::vector<int>{4, 4});
  CHECK(proportional_allocation(7, {6, 2, 2}) == std::vector<int>{4, 2, 1});
  CHECK(proportional_allocation(3, {0, 5, 0}) == std::vector<int>{0, 3, 0});
  // never exceeds entitlement, always ships min(available, total)
  auto out = proportional_allocation(11, {3, 9, 1});
  CHECK(std::accumulate(out.begin(), out.end(), 0) == 11);
  CHECK(out[0] <= 3);
  CHECK(out[1] <= 9);
  CHECK(out[2] <= 1);
}

TEST_CASE("reset produces the documented initial observation") {
  Environment env(preset(Preset::four_stage), setting(Setting::S1),
                  ObservationSpec::from_config(6, 1));
  auto obs = env.reset(1, 0);
  REQUIRE(obs.size() == 4);
  for (int id = 1; id <= 4; ++id) {
    CHECK(env.state().nodes[id - 1].on_hand == 10);
    const auto& v = obs[id - 1];
    // config 6: base(3) + shipments(tau) + demand history(1)
    REQUIRE(static_cast<int>(v.size()) == 3 + env.topology().node(id).lead_time + 1);
    CHECK(v[0] == doctest::Approx(10.0 / 30.0));
    for (size_t k = 1; k < v.size(); ++k) CHECK(v[k] == doctest::Approx(0.0));
  }
}

TEST_CASE("equal seeds give equal observations across resets") {
  Environment env(preset(Preset::four_stage), setting(Setting::S1),
                  ObservationSpec::from_config(5, 2));
  auto a = env.reset(77, 3);
  std::vector<double> act = {0.1, -0.3, 0.7, 0.0};
  auto ra = env.step(act);
  auto b = env.reset(77, 3);
  CHECK(a == b);
  auto rb = env.step(act);
  CHECK(ra.observations == rb.observations);
  CHECK(ra.rewards == rb.rewards);
}

TEST_CASE("single-node hand-computed transition") {
  // order 0, demand 4 against 10 on hand: sell 4, hold 6
  auto cfg = setting(Setting::S1, 4.0);
  cfg.deterministic_demand = true;
  Environment env(network::single_node(retailer_node()), cfg,
                  ObservationSpec::from_config(1, 1));
  env.reset(1, 0);
  auto res = env.step_orders({0});
  CHECK(res.sales[0] == 4);
  CHECK(env.state().nodes[0].on_hand == 6);
  CHECK(env.state().nodes[0].total_backlog() == 0);
  CHECK(res.node_profit[0] == doctest::Approx(5 * 4 - 0 - 0.2 * 6 - 0));
  CHECK(res.rewards[0] == doctest::Approx(18.8));
  CHECK(res.scn_profit == doctest::Approx(18.8));
}

TEST_CASE("zero everything yields zero reward") {
  auto node = retailer_node();
  node.initial_inventory = 0;
  auto cfg = setting(Setting::S1, 1.0);
  cfg.deterministic_demand = true;
  cfg.lambda_poisson = 0.4;  // rounds to 0 demand
  Environment env(network::single_node(node), cfg, ObservationSpec::from_config(1, 1));
  env.reset(3, 0);
  auto res = env.step_orders({0});
  CHECK(res.scn_profit == doctest::Approx(0.0));
  CHECK(res.rewards[0] == doctest::Approx(0.0));
}

TEST_CASE("observation history slots update after one step") {
  auto cfg = setting(Setting::S1, 5.0);
  cfg.deterministic_demand = true;
  auto node = retailer_node();
  node.lead_time = 2;
  Environment env(network::single_node(node), cfg, ObservationSpec::from_config(5, 1));
  env.reset(2, 0);
  auto res = env.step_orders({15});
  const auto& v = res.observations[0];
  // layout: [i, u, b, ship+1, ship+2, prev demand, prev order]
  REQUIRE(v.size() == 7);
  CHECK(v[5] == doctest::Approx(5.0 / 30.0));
  CHECK(v[6] == doctest::Approx(15.0 / 30.0));
  // the production batch of 15 arrives two periods out
  CHECK(v[3] == doctest::Approx(0.0));
  CHECK(v[4] == doctest::Approx(15.0 / 30.0));
  CHECK(v[1] == doctest::Approx(15.0 / 30.0));  // pipeline
}

TEST_CASE("one-hot identifier is appended when requested") {
  auto spec = ObservationSpec::from_config(6, 1);
  spec.append_agent_one_hot = true;
  spec.shipment_slots_override = 3;  // max lead time in the four_stage preset
  Environment env(preset(Preset::four_stage), setting(Setting::S1), spec);
  auto obs = env.reset(4, 0);
  for (int id = 1; id <= 4; ++id) {
    const auto& v = obs[id - 1];
    REQUIRE(static_cast<int>(v.size()) == 3 + 3 + 1 + 4);
    for (int j = 1; j <= 4; ++j)
      CHECK(v[v.size() - 5 + j] == doctest::Approx(id == j ? 1.0 : 0.0));
  }
}

TEST_CASE("step contract violations throw") {
  Environment env(preset(Preset::two_stage), setting(Setting::S1),
                  ObservationSpec::from_config(1, 1), 2);
  env.reset(1, 0);
  CHECK_THROWS_AS(env.step({2.0, 0.0}), std::invalid_argument);
  env.step({0.0, 0.0});
  auto res = env.step({0.0, 0.0});
  CHECK(res.done);
  CHECK_THROWS_AS(env.step({0.0, 0.0}), std::logic_error);
}

TEST_CASE("shared rewards are equal and sum to the SCN profit") {
  Environment env(preset(Preset::divergent), setting(Setting::S1),
                  ObservationSpec::from_config(6, 1));
  env.reset(5, 1);
  RngStream rng(100, 0, 0, stream_purpose::misc(0));
  for (int t = 0; t < 30; ++t) {
    std::vector<double> act;
    for (int k = 0; k < 4; ++k) act.push_back(rng.next_unit() * 2.0 - 1.0);
    auto res = env.step(act);
    for (double r : res.rewards) CHECK(r == doctest::Approx(res.rewards[0]));
    CHECK(4 * res.rewards[0] == doctest::Approx(res.scn_profit));
  }
}

TEST_CASE("independent rewards sum to M times the shared reward") {
  auto run = [&](RewardMode mode) {
    Environment env(preset(Preset::four_stage), setting(Setting::S1),
                    ObservationSpec::from_config(6, 1), 30, mode);
    env.reset(6, 2);
    std::vector<StepResult> results;
    for (int t = 0; t < 10; ++t)
      results.push_back(env.step({0.2, -0.1, 0.4, -0.6}));
    return results;
  };
  auto shared = run(RewardMode::shared);
  auto indep = run(RewardMode::independent);
  for (size_t t = 0; t < shared.size(); ++t) {
    double sum = std::accumulate(indep[t].rewards.begin(), indep[t].rewards.end(), 0.0);
    CHECK(sum == doctest::Approx(4.0 * shared[t].rewards[0]));
  }
}

TEST_CASE("conservation identities hold on every step across presets and settings") {
  for (auto preset_name : network::preset_names()) {
    for (auto s : {Setting::S1, Setting::S2, Setting::S3}) {
      auto topo = preset(preset_name);
      Environment env(topo, setting(s), ObservationSpec::from_config(6, 1), 30);
      const int m = topo.node_count();
      for (uint64_t ep = 0; ep < 4; ++ep) {
        env.reset(900 + ep, ep);
        RngStream rng(ep, 42, 0, stream_purpose::misc(2));
        for (int t = 0; t < 30; ++t) {
          auto before = env.state();
          std::vector<double> act;
          for (int k = 0; k < m; ++k) act.push_back(rng.next_unit() * 2.0 - 1.0);
          auto res = env.step(act);
          auto after = env.state();
          for (int id = 1; id <= m; ++id) {
            const auto& nb = before.nodes[id - 1];
            const auto& na = after.nodes[id - 1];
            // pipeline balance
            CHECK(na.pipeline - nb.pipeline == res.orders[id - 1] - res.acquisitions[id - 1]);
            // inventory balance
            CHECK(na.on_hand == nb.on_hand + res.acquisitions[id - 1] - res.sales[id - 1]);
            // backlog balance
            CHECK(na.total_backlog() ==
                  nb.total_backlog() + res.demands[id - 1] - res.sales[id - 1]);
            // sales caps
            CHECK(res.sales[id - 1] <= nb.on_hand + res.acquisitions[id - 1]);
            CHECK(res.sales[id - 1] <= nb.total_backlog() + res.demands[id - 1]);
            // non-negativity
            CHECK(na.on_hand >= 0);
            CHECK(na.pipeline >= 0);
            CHECK(na.total_backlog() >= 0);
            // pipeline equals goods in transit plus the upstream link backlog
            int expected_pipeline = after.in_transit_to(id);
            const int up = topo.upstream_of(id);
            if (up != 0) {
              const auto& ups = after.nodes[up - 1];
              const auto& targets = topo.downstream_of(up);
              for (size_t li = 0; li < targets.size(); ++li)
                if (targets[li] == id) expected_pipeline += ups.backlog[li];
            }
            CHECK(na.pipeline == expected_pipeline);
          }
        }
      }
    }
  }
}

TEST_CASE("environment agrees exactly with the reference implementation") {
  // randomized three-node serial chains, short horizons, small order grids
  RngStream meta(1234, 0, 0, stream_purpose::misc(7));
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<NodeConfig> nodes;
    std::vector<std::pair<int, int>> edges;
    for (int id = 1; id <= 3; ++id) {
      NodeConfig n;
      n.node_id = id;
      n.sell_price = static_cast<double>(2 + meta.next_below(4));
      n.replenish_cost = static_cast<double>(1 + meta.next_below(3));
      n.storage_cost = 0.1 * (1 + static_cast<double>(meta.next_below(5)));
      n.backlog_cost = 0.1 * (1 + static_cast<double>(meta.next_below(9)));
      n.lead_time = 1 + static_cast<int>(meta.next_below(2));
      n.initial_inventory = static_cast<int>(meta.next_below(12));
      nodes.push_back(n);
      if (id > 1) edges.emplace_back(id - 1, id);
    }
    auto topo = network::make_topology(nodes, edges);
    const int T = 5;
    auto s = (trial % 3 == 0) ? Setting::S1 : (trial % 3 == 1 ? Setting::S2 : Setting::S3);
    auto cfg = setting(s, 4.0, 0.15, 0.6);

    Environment env(topo, cfg, ObservationSpec::from_config(1, 1), T);
    const uint64_t seed = 5000 + trial, episode = trial;
    env.reset(seed, episode);

    // feed the reference the exact same random inputs as tables
    std::vector<std::vector<int>> demand_table(4), lead_table(4);
    for (int id = 1; id <= 3; ++id) {
      demand_table[id].resize(T);
      lead_table[id].resize(T);
      for (int t = 0; t < T; ++t) {
        demand_table[id][t] = stochastic::demand_at(cfg, seed, episode, id, t);
        lead_table[id][t] =
            stochastic::lead_time_at(cfg, topo.node(id).lead_time, seed, episode, id, t);
      }
    }
    refsim::ReferenceSimulator ref(topo, demand_table, lead_table);

    RngStream acts(seed, episode, 99, stream_purpose::misc(3));
    for (int t = 0; t < T; ++t) {
      std::vector<int> orders;
      const int grid[3] = {0, 2, 5};
      for (int k = 0; k < 3; ++k) orders.push_back(grid[acts.next_below(3)]);
      auto res = env.step_orders(orders);
      auto out = ref.step(orders);
      for (int id = 1; id <= 3; ++id) {
        CHECK(env.state().nodes[id - 1].on_hand == ref.state().inventory.at(id));
        CHECK(env.state().nodes[id - 1].pipeline == ref.state().pipeline.at(id));
        int ref_backlog = 0;
        for (auto& [key, v] : ref.state().backlog)
          if (key.first == id) ref_backlog += v;
        CHECK(env.state().nodes[id - 1].total_backlog() == ref_backlog);
        CHECK(res.acquisitions[id - 1] == out.acquisitions.at(id));
        CHECK(res.sales[id - 1] == out.sales_total.at(id));
        CHECK(res.demands[id - 1] == out.demand_total.at(id));
        CHECK(res.node_profit[id - 1] == doctest::Approx(out.profit.at(id)).epsilon(1e-12));
      }
      CHECK(res.scn_profit == doctest::Approx(out.scn_profit).epsilon(1e-12));
    }
  }
}

TEST_CASE("stochastic lead times can reorder shipments but conserve goods") {
  auto topo = preset(Preset::two_stage);
  auto cfg = setting(Setting::S3, 5.0, 0.0, 0.4);
  Environment env(topo, cfg, ObservationSpec::from_config(2, 1), 30);
  env.reset(31337, 0);
  long long shipped_to_2 = 0, arrived_at_2 = 0;
  for (int t = 0; t < 30; ++t) {
    auto res = env.step_orders({5, 5});
    arrived_at_2 += res.acquisitions[1];
    shipped_to_2 += res.sales[0];
  }
  arrived_at_2 += env.state().in_transit_to(2);
  CHECK(shipped_to_2 == arrived_at_2);
}
