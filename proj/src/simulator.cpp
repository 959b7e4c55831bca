#include "echelon/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace echelon::sim {

int NodeState::total_backlog() const {
  return std::accumulate(backlog.begin(), backlog.end(), 0);
}

int SupplyChainState::pipeline_of(int node_id) const {
  return nodes[static_cast<size_t>(node_id - 1)].pipeline;
}

int SupplyChainState::in_transit_to(int node_id) const {
  int total = 0;
  for (const auto& s : in_transit)
    if (s.destination == node_id) total += s.quantity;
  return total;
}

ObservationSpec ObservationSpec::from_config(int config_id, int history_length) {
  ObservationSpec spec;
  spec.config_id = config_id;
  spec.history_length = history_length;
  spec.base_state = true;
  switch (config_id) {
    case 1: spec.delayed_shipment = false; spec.previous_demand = false; spec.previous_orders = false; break;
    case 2: spec.delayed_shipment = true;  spec.previous_demand = false; spec.previous_orders = false; break;
    case 3: spec.delayed_shipment = false; spec.previous_demand = true;  spec.previous_orders = true;  break;
    case 4: spec.delayed_shipment = false; spec.previous_demand = true;  spec.previous_orders = false; break;
    case 5: spec.delayed_shipment = true;  spec.previous_demand = true;  spec.previous_orders = true;  break;
    case 6: spec.delayed_shipment = true;  spec.previous_demand = true;  spec.previous_orders = false; break;
    default:
      throw std::invalid_argument("observation config must be 1..6, got " +
                                  std::to_string(config_id));
  }
  if (history_length < 1)
    throw std::invalid_argument("observation history length must be >= 1");
  return spec;
}

int ObservationSpec::shipment_slots(int lead_time) const {
  if (!delayed_shipment) return 0;
  return shipment_slots_override >= 0 ? shipment_slots_override : lead_time;
}

int ObservationSpec::observation_size(int lead_time, int agent_count) const {
  int n = 0;
  if (base_state) n += 3;
  n += shipment_slots(lead_time);
  if (previous_demand) n += history_length;
  if (previous_orders) n += history_length;
  if (append_agent_one_hot) n += agent_count;
  return n;
}

int rescale_action(double action, int order_limit) {
  if (!(action >= -1.0 && action <= 1.0))
    throw std::invalid_argument("action outside [-1, 1]: " + std::to_string(action));
  const double scaled = 0.5 * (action + 1.0) * order_limit;
  return static_cast<int>(std::floor(scaled + 0.5));
}

std::vector<int> proportional_allocation(int available, const std::vector<int>& entitlements) {
  const size_t n = entitlements.size();
  std::vector<int> out(n, 0);
  long long total_ent = 0;
  for (int e : entitlements) {
    if (e < 0) throw std::invalid_argument("negative entitlement");
    total_ent += e;
  }
  if (total_ent == 0 || available <= 0) return out;
  const long long to_ship = std::min<long long>(available, total_ent);

  // Integer largest-remainder: quotas are to_ship*ent/total with exact
  // remainders, so no floating point enters the tie-break.
  std::vector<long long> remainder(n, 0);
  long long assigned = 0;
  for (size_t k = 0; k < n; ++k) {
    const long long num = to_ship * entitlements[k];
    out[k] = static_cast<int>(num / total_ent);
    remainder[k] = num % total_ent;
    assigned += out[k];
  }
  long long extras = to_ship - assigned;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return remainder[a] > remainder[b]; });
  for (size_t idx : order) {
    if (extras == 0) break;
    if (out[idx] < entitlements[idx]) {
      out[idx] += 1;
      --extras;
    }
  }
  return out;
}

Environment::Environment(network::NetworkTopology topology,
                         stochastic::UncertaintyConfig uncertainty, ObservationSpec spec,
                         int horizon, RewardMode reward_mode)
    : topo_(std::move(topology)),
      uncertainty_(uncertainty),
      spec_(spec),
      horizon_(horizon),
      reward_mode_(reward_mode) {
  auto errors = network::validate(topo_);
  if (!errors.empty())
    throw std::invalid_argument("invalid topology: " + errors.front());
  if (horizon_ < 1) throw std::invalid_argument("horizon must be >= 1");
  for (const auto& n : topo_.nodes) {
    // The step sequence dispatches goods after acquisitions are booked, so
    // same-period delivery (lead time 0) cannot be realized here.
    if (n.lead_time < 1)
      throw std::invalid_argument("simulator requires lead time >= 1 at every node");
  }
  const int m = topo_.node_count();
  link_targets_.assign(static_cast<size_t>(m), {});
  for (int id = 1; id <= m; ++id) {
    if (topo_.is_retailer(id))
      link_targets_[static_cast<size_t>(id - 1)] = {0};  // customer link
    else
      link_targets_[static_cast<size_t>(id - 1)] = topo_.downstream_of(id);
  }
}

std::vector<std::vector<double>> Environment::reset(uint64_t seed, uint64_t episode) {
  seed_ = seed;
  episode_ = episode;
  started_ = true;
  state_ = SupplyChainState{};
  state_.period = 0;
  const int m = topo_.node_count();
  state_.nodes.assign(static_cast<size_t>(m), NodeState{});
  for (int id = 1; id <= m; ++id) {
    NodeState& ns = state_.nodes[static_cast<size_t>(id - 1)];
    ns.on_hand = topo_.node(id).initial_inventory;
    ns.backlog.assign(link_targets_[static_cast<size_t>(id - 1)].size(), 0);
    ns.pipeline = 0;
    ns.recent_demand.assign(static_cast<size_t>(spec_.history_length), 0);
    ns.recent_orders.assign(static_cast<size_t>(spec_.history_length), 0);
  }
  return observations();
}

StepResult Environment::step(const std::vector<double>& joint_action) {
  const int m = topo_.node_count();
  if (static_cast<int>(joint_action.size()) != m)
    throw std::invalid_argument("joint action size mismatch");
  std::vector<int> orders(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k)
    orders[static_cast<size_t>(k)] =
        rescale_action(joint_action[static_cast<size_t>(k)], topo_.nodes[static_cast<size_t>(k)].order_limit);
  return execute_period(orders);
}

StepResult Environment::step_orders(const std::vector<int>& orders) {
  const int m = topo_.node_count();
  if (static_cast<int>(orders.size()) != m)
    throw std::invalid_argument("order vector size mismatch");
  for (int k = 0; k < m; ++k) {
    const int o = orders[static_cast<size_t>(k)];
    if (o < 0 || o > topo_.nodes[static_cast<size_t>(k)].order_limit)
      throw std::invalid_argument("order outside [0, order_limit]");
  }
  return execute_period(orders);
}

int Environment::customer_demand_at(int node_id, int period) const {
  return stochastic::demand_at(uncertainty_, seed_, episode_, node_id, period);
}

StepResult Environment::execute_period(const std::vector<int>& orders) {
  if (!started_) throw std::logic_error("step before reset");
  if (done()) throw std::logic_error("step after episode end");
  const int m = topo_.node_count();
  const int t = state_.period;

  StepResult res;
  res.orders = orders;
  res.acquisitions.assign(static_cast<size_t>(m), 0);
  res.demands.assign(static_cast<size_t>(m), 0);
  res.sales.assign(static_cast<size_t>(m), 0);
  res.node_profit.assign(static_cast<size_t>(m), 0.0);

  // 1. Replenishment orders. The root's order starts production; everyone
  //    else's order surfaces as upstream demand in step 3 below.
  if (orders[0] > 0) {
    const int lead = stochastic::lead_time_at(uncertainty_, topo_.node(1).lead_time, seed_,
                                              episode_, 1, t);
    state_.in_transit.push_back(
        Shipment{orders[0], 1, t, t + lead, t + topo_.node(1).lead_time});
  }

  // 2. Shipments due this period arrive.
  {
    auto& fleet = state_.in_transit;
    for (const auto& s : fleet)
      if (s.arrival_period == t) res.acquisitions[static_cast<size_t>(s.destination - 1)] += s.quantity;
    fleet.erase(std::remove_if(fleet.begin(), fleet.end(),
                               [t](const Shipment& s) { return s.arrival_period == t; }),
                fleet.end());
  }

  // 3. Demand realization: customer draws at retailers, downstream orders
  //    everywhere else.
  std::vector<std::vector<int>> link_demand(static_cast<size_t>(m));
  for (int id = 1; id <= m; ++id) {
    const auto& targets = link_targets_[static_cast<size_t>(id - 1)];
    auto& dem = link_demand[static_cast<size_t>(id - 1)];
    dem.assign(targets.size(), 0);
    if (topo_.is_retailer(id)) {
      dem[0] = customer_demand_at(id, t);
    } else {
      for (size_t li = 0; li < targets.size(); ++li)
        dem[li] = orders[static_cast<size_t>(targets[li] - 1)];
    }
    res.demands[static_cast<size_t>(id - 1)] =
        std::accumulate(dem.begin(), dem.end(), 0);
  }

  // 4. Fulfillment: existing backlog first within each link, available
  //    stock split across links by proportional largest-remainder.
  std::vector<std::vector<int>> link_sales(static_cast<size_t>(m));
  for (int id = 1; id <= m; ++id) {
    NodeState& ns = state_.nodes[static_cast<size_t>(id - 1)];
    const auto& targets = link_targets_[static_cast<size_t>(id - 1)];
    const auto& dem = link_demand[static_cast<size_t>(id - 1)];
    const int available = ns.on_hand + res.acquisitions[static_cast<size_t>(id - 1)];
    std::vector<int> entitlement(targets.size());
    for (size_t li = 0; li < targets.size(); ++li)
      entitlement[li] = ns.backlog[li] + dem[li];
    link_sales[static_cast<size_t>(id - 1)] = proportional_allocation(available, entitlement);
    res.sales[static_cast<size_t>(id - 1)] =
        std::accumulate(link_sales[static_cast<size_t>(id - 1)].begin(),
                        link_sales[static_cast<size_t>(id - 1)].end(), 0);
    for (size_t li = 0; li < targets.size(); ++li) {
      const int dest = targets[li];
      const int qty = link_sales[static_cast<size_t>(id - 1)][li];
      if (dest == 0 || qty == 0) continue;  // customer sales leave the system
      const int lead = stochastic::lead_time_at(uncertainty_, topo_.node(dest).lead_time,
                                                seed_, episode_, dest, t);
      state_.in_transit.push_back(
          Shipment{qty, dest, t, t + lead, t + topo_.node(dest).lead_time});
    }
  }

  // 5-7. Backlog, inventory and pipeline updates, then the period reward.
  double scn_profit = 0.0;
  for (int id = 1; id <= m; ++id) {
    NodeState& ns = state_.nodes[static_cast<size_t>(id - 1)];
    const auto& dem = link_demand[static_cast<size_t>(id - 1)];
    const auto& sal = link_sales[static_cast<size_t>(id - 1)];
    for (size_t li = 0; li < ns.backlog.size(); ++li)
      ns.backlog[li] += dem[li] - sal[li];
    ns.on_hand += res.acquisitions[static_cast<size_t>(id - 1)] - res.sales[static_cast<size_t>(id - 1)];
    ns.pipeline += orders[static_cast<size_t>(id - 1)] - res.acquisitions[static_cast<size_t>(id - 1)];

    ns.recent_demand.push_front(res.demands[static_cast<size_t>(id - 1)]);
    ns.recent_demand.pop_back();
    ns.recent_orders.push_front(orders[static_cast<size_t>(id - 1)]);
    ns.recent_orders.pop_back();

    const auto& cfg = topo_.node(id);
    const double profit = cfg.sell_price * res.sales[static_cast<size_t>(id - 1)] -
                          cfg.replenish_cost * orders[static_cast<size_t>(id - 1)] -
                          cfg.storage_cost * ns.on_hand -
                          cfg.backlog_cost * ns.total_backlog();
    res.node_profit[static_cast<size_t>(id - 1)] = profit;
    scn_profit += profit;
  }
  res.scn_profit = scn_profit;

  state_.period = t + 1;
  res.done = done();

  res.rewards.assign(static_cast<size_t>(m), 0.0);
  if (reward_mode_ == RewardMode::shared) {
    const double shared = scn_profit / m;
    std::fill(res.rewards.begin(), res.rewards.end(), shared);
  } else {
    res.rewards = res.node_profit;
  }
  res.observations = observations();
  return res;
}

std::vector<double> Environment::build_observation(int node_id) const {
  const auto& cfg = topo_.node(node_id);
  const NodeState& ns = state_.nodes[static_cast<size_t>(node_id - 1)];
  const double scale = 1.0 / cfg.order_limit;
  std::vector<double> obs;
  obs.reserve(static_cast<size_t>(
      spec_.observation_size(cfg.lead_time, topo_.node_count())));

  if (spec_.base_state) {
    obs.push_back(ns.on_hand * scale);
    obs.push_back(ns.pipeline * scale);
    obs.push_back(ns.total_backlog() * scale);
  }
  const int slots = spec_.shipment_slots(cfg.lead_time);
  if (slots > 0) {
    // Slot k holds the quantity nominally arriving k periods from now.
    // Under stochastic lead times this is the forecast implied by the
    // nominal schedule; overdue shipments drop out of the window.
    std::vector<int> incoming(static_cast<size_t>(slots), 0);
    for (const auto& s : state_.in_transit) {
      if (s.destination != node_id) continue;
      const int offset = s.nominal_arrival - state_.period;  // 0 => next step
      if (offset >= 0 && offset < slots) incoming[static_cast<size_t>(offset)] += s.quantity;
    }
    for (int v : incoming) obs.push_back(v * scale);
  }
  if (spec_.previous_demand) {
    for (int k = 0; k < spec_.history_length; ++k)
      obs.push_back(ns.recent_demand[static_cast<size_t>(k)] * scale);
  }
  if (spec_.previous_orders) {
    for (int k = 0; k < spec_.history_length; ++k)
      obs.push_back(ns.recent_orders[static_cast<size_t>(k)] * scale);
  }
  if (spec_.append_agent_one_hot) {
    for (int id = 1; id <= topo_.node_count(); ++id)
      obs.push_back(id == node_id ? 1.0 : 0.0);
  }
  return obs;
}

std::vector<std::vector<double>> Environment::observations() const {
  std::vector<std::vector<double>> all;
  all.reserve(static_cast<size_t>(topo_.node_count()));
  for (int id = 1; id <= topo_.node_count(); ++id) all.push_back(build_observation(id));
  return all;
}

std::vector<int> Environment::nominal_arrivals(int node_id, int horizon_len) const {
  std::vector<int> buckets(static_cast<size_t>(horizon_len), 0);
  for (const auto& s : state_.in_transit) {
    if (s.destination != node_id) continue;
    int offset = s.nominal_arrival - state_.period;
    if (offset < 0) offset = 0;  // overdue: expected immediately
    if (offset < horizon_len) buckets[static_cast<size_t>(offset)] += s.quantity;
  }
  return buckets;
}

}  // namespace echelon::sim
