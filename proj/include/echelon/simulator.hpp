#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "echelon/network.hpp"
#include "echelon/stochastic.hpp"

namespace echelon::sim {

/// Goods on the move (or in production at the root). The actual arrival
/// period is fixed at dispatch; the nominal arrival is dispatch + nominal
/// lead time and is what partially-informed planners get to see.
struct Shipment {
  int quantity = 0;
  int destination = 0;      // node id
  int dispatch_period = 0;
  int arrival_period = 0;   // sampled at dispatch; > dispatch_period
  int nominal_arrival = 0;  // dispatch + nominal lead time
};

struct NodeState {
  int on_hand = 0;
  std::vector<int> backlog;        // per downstream link (retailers: one customer slot)
  int pipeline = 0;                // ordered but not yet received
  std::deque<int> recent_demand;   // most recent first
  std::deque<int> recent_orders;   // most recent first
  int total_backlog() const;
};

struct SupplyChainState {
  int period = 0;  // completed periods; the next step executes this period
  std::vector<NodeState> nodes;
  std::vector<Shipment> in_transit;

  int pipeline_of(int node_id) const;
  int in_transit_to(int node_id) const;
};

/// Which blocks the per-node observation vector carries. The numbered
/// configurations map onto the four block flags; block order in the vector
/// is fixed: base state, delayed shipments, previous demand, previous
/// orders. Everything is scaled by the node's order limit; a one-hot agent
/// id (unscaled) may be appended for parameter-shared policies.
struct ObservationSpec {
  int config_id = 6;
  int history_length = 1;  // N
  bool base_state = true;
  bool delayed_shipment = true;
  bool previous_demand = true;
  bool previous_orders = false;
  bool append_agent_one_hot = false;
  /// When >= 0, the delayed-shipment block is padded to this many slots
  /// regardless of the node's own lead time (needed when one network
  /// serves observations of different nodes).
  int shipment_slots_override = -1;

  static ObservationSpec from_config(int config_id, int history_length);
  int observation_size(int lead_time, int agent_count) const;
  int shipment_slots(int lead_time) const;
};

enum class RewardMode { shared, independent };

struct StepResult {
  std::vector<std::vector<double>> observations;  // per node slot
  std::vector<double> rewards;                    // per agent
  double scn_profit = 0.0;                        // sum of node profits this period
  bool done = false;
  // Per-node info, aligned with node slots.
  std::vector<int> orders;
  std::vector<int> acquisitions;
  std::vector<int> demands;       // total demand received (customer + downstream)
  std::vector<int> sales;         // total shipped (downstream + customer)
  std::vector<double> node_profit;
};

/// Round a policy action in [-1, 1] onto the integer order range
/// [0, order_limit], half-up.
int rescale_action(double action, int order_limit);

/// Largest-remainder apportionment of `available` units across links in
/// proportion to their entitlements, ties broken by ascending position.
/// Never allocates more than a link's entitlement.
std::vector<int> proportional_allocation(int available, const std::vector<int>& entitlements);

/// The multi-echelon inventory environment. One instance is single-threaded;
/// run many instances in parallel for rollout collection, each owning its
/// own stream coordinates.
class Environment {
 public:
  Environment(network::NetworkTopology topology, stochastic::UncertaintyConfig uncertainty,
              ObservationSpec spec, int horizon = 30, RewardMode reward_mode = RewardMode::shared);

  /// Starts episode `episode` of stream family `seed` and returns initial
  /// observations.
  std::vector<std::vector<double>> reset(uint64_t seed, uint64_t episode);

  /// Policy-facing step; actions in [-1, 1] per node, ascending node order.
  StepResult step(const std::vector<double>& joint_action);

  /// Integer-order step used by LP policies, replays and tests.
  StepResult step_orders(const std::vector<int>& orders);

  const SupplyChainState& state() const { return state_; }
  const network::NetworkTopology& topology() const { return topo_; }
  const stochastic::UncertaintyConfig& uncertainty() const { return uncertainty_; }
  const ObservationSpec& observation_spec() const { return spec_; }
  int horizon() const { return horizon_; }
  bool done() const { return state_.period >= horizon_; }
  uint64_t episode_seed() const { return seed_; }
  uint64_t episode_index() const { return episode_; }

  std::vector<double> build_observation(int node_id) const;
  std::vector<std::vector<double>> observations() const;

  /// Quantities already in transit to `node_id`, bucketed by nominal arrival
  /// offset (offset 0 = the period about to execute). Overdue shipments land
  /// in offset 0; nominal arrivals beyond `horizon_len` are outside the
  /// window and dropped.
  std::vector<int> nominal_arrivals(int node_id, int horizon_len) const;

  /// Realized customer demand the retailers will see at `period`; pure
  /// function of the episode coordinates.
  int customer_demand_at(int node_id, int period) const;

 private:
  StepResult execute_period(const std::vector<int>& orders);

  network::NetworkTopology topo_;
  stochastic::UncertaintyConfig uncertainty_;
  ObservationSpec spec_;
  int horizon_;
  RewardMode reward_mode_;
  uint64_t seed_ = 0;
  uint64_t episode_ = 0;
  bool started_ = false;
  SupplyChainState state_;
  // link slot lookup: per node, position of each downstream link
  std::vector<std::vector<int>> link_targets_;  // node slot -> downstream ids (customer = 0)
};

}  // namespace echelon::sim
