#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace echelon::network {

/// Economic and physical parameters of one supply chain node.
/// Node ids are 1-based; node 1 is the root factory.
struct NodeConfig {
  int node_id = 0;
  double sell_price = 0.0;      // P, currency per unit sold downstream
  double replenish_cost = 0.0;  // C, currency per unit ordered
  double storage_cost = 0.0;    // I, currency per unit held per period
  double backlog_cost = 0.0;    // B, currency per backlogged unit per period
  int storage_capacity = 30;    // I_max (enforced only by the LP model)
  int order_limit = 30;         // O_r_max
  int lead_time = 1;            // tau, periods until a shipment to this node arrives
  int initial_inventory = 0;    // i0
};

/// A single-sourced supply network: a DAG rooted at node 1 where every
/// non-root node has exactly one upstream supplier, and the retailer set
/// (customer-facing nodes) is exactly the set of leaves.
struct NetworkTopology {
  std::vector<NodeConfig> nodes;            // nodes[k] has node_id k+1
  std::vector<std::pair<int, int>> edges;   // (upstream id, downstream id)
  std::vector<int> retailers;               // ascending node ids
  std::vector<std::vector<int>> downstream; // per node slot, ascending node ids
  std::vector<int> upstream;                // per node slot, 0 for the root

  int node_count() const { return static_cast<int>(nodes.size()); }
  const NodeConfig& node(int id) const { return nodes[static_cast<size_t>(id - 1)]; }
  NodeConfig& node(int id) { return nodes[static_cast<size_t>(id - 1)]; }
  const std::vector<int>& downstream_of(int id) const {
    return downstream[static_cast<size_t>(id - 1)];
  }
  int upstream_of(int id) const { return upstream[static_cast<size_t>(id - 1)]; }
  bool is_retailer(int id) const;
  int max_lead_time() const;
};

/// Assembles derived maps (downstream/upstream/retailers) from nodes+edges.
/// Does not reject invalid graphs; run validate() for that.
NetworkTopology make_topology(std::vector<NodeConfig> nodes,
                              std::vector<std::pair<int, int>> edges);

enum class Preset { two_stage, four_stage, divergent, eight_stage };

NetworkTopology preset(Preset which);
/// Throws std::invalid_argument for unknown names.
NetworkTopology preset(std::string_view name);
std::vector<std::string> preset_names();

/// Returns all invariant violations; empty means the topology is valid.
/// Detected: bad ids, cycles, multiple roots, multi-sourcing, rootless
/// graphs, retailer sets that differ from the leaf set, and parameter
/// ranges outside their documented domains.
std::vector<std::string> validate(const NetworkTopology& topo);

/// Node ids in topological order (root first). Requires a valid topology.
std::vector<int> topological_order(const NetworkTopology& topo);

/// Single node that is simultaneously root factory and retailer; used by
/// small benchmarks and tests.
NetworkTopology single_node(const NodeConfig& cfg);

}  // namespace echelon::network
