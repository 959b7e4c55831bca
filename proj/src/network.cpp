#include "echelon/network.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace echelon::network {

bool NetworkTopology::is_retailer(int id) const {
  return std::binary_search(retailers.begin(), retailers.end(), id);
}

int NetworkTopology::max_lead_time() const {
  int t = 0;
  for (const auto& n : nodes) t = std::max(t, n.lead_time);
  return t;
}

NetworkTopology make_topology(std::vector<NodeConfig> nodes,
                              std::vector<std::pair<int, int>> edges) {
  NetworkTopology t;
  t.nodes = std::move(nodes);
  t.edges = std::move(edges);
  const int m = t.node_count();
  t.downstream.assign(static_cast<size_t>(m), {});
  t.upstream.assign(static_cast<size_t>(m), 0);
  for (const auto& [up, down] : t.edges) {
    if (up >= 1 && up <= m) t.downstream[static_cast<size_t>(up - 1)].push_back(down);
    if (down >= 1 && down <= m) t.upstream[static_cast<size_t>(down - 1)] = up;
  }
  for (auto& d : t.downstream) std::sort(d.begin(), d.end());
  for (int id = 1; id <= m; ++id) {
    if (t.downstream[static_cast<size_t>(id - 1)].empty()) t.retailers.push_back(id);
  }
  return t;
}

std::vector<std::string> validate(const NetworkTopology& topo) {
  std::vector<std::string> errors;
  const int m = topo.node_count();
  if (m == 0) {
    errors.push_back("empty: topology has no nodes");
    return errors;
  }
  for (int k = 0; k < m; ++k) {
    const NodeConfig& n = topo.nodes[static_cast<size_t>(k)];
    if (n.node_id != k + 1) errors.push_back("node-id: nodes must be numbered 1..M in order");
    if (n.sell_price < 0 || n.replenish_cost < 0 || n.storage_cost < 0 || n.backlog_cost < 0)
      errors.push_back("economics: negative price or cost at node " + std::to_string(k + 1));
    if (n.storage_capacity < 1 || n.order_limit < 1)
      errors.push_back("capacity: storage capacity and order limit must be >= 1 at node " +
                       std::to_string(k + 1));
    if (n.lead_time < 0)
      errors.push_back("lead-time: negative lead time at node " + std::to_string(k + 1));
    if (n.initial_inventory < 0 || n.initial_inventory > n.storage_capacity)
      errors.push_back("initial-inventory: i0 outside [0, capacity] at node " +
                       std::to_string(k + 1));
  }

  std::vector<int> indegree(static_cast<size_t>(m), 0);
  for (const auto& [up, down] : topo.edges) {
    if (up < 1 || up > m || down < 1 || down > m) {
      errors.push_back("edge: endpoint outside 1..M");
      return errors;
    }
    if (up == down) errors.push_back("cycle: self edge at node " + std::to_string(up));
    indegree[static_cast<size_t>(down - 1)]++;
  }
  for (int id = 1; id <= m; ++id) {
    if (indegree[static_cast<size_t>(id - 1)] > 1)
      errors.push_back("multi-sourcing: node " + std::to_string(id) +
                       " has more than one upstream supplier");
  }
  int roots = 0;
  for (int id = 1; id <= m; ++id)
    if (indegree[static_cast<size_t>(id - 1)] == 0) roots++;
  if (roots == 0) errors.push_back("cycle: no root node (every node has an upstream edge)");
  if (roots > 1) errors.push_back("multiple-roots: expected exactly one root");
  if (roots == 1 && indegree[0] != 0)
    errors.push_back("root-id: the unique root must be node 1");

  // Kahn traversal; leftover nodes sit on a cycle.
  {
    auto deg = indegree;
    std::queue<int> ready;
    for (int id = 1; id <= m; ++id)
      if (deg[static_cast<size_t>(id - 1)] == 0) ready.push(id);
    int visited = 0;
    while (!ready.empty()) {
      int id = ready.front();
      ready.pop();
      visited++;
      for (const auto& [up, down] : topo.edges) {
        if (up == id && --deg[static_cast<size_t>(down - 1)] == 0) ready.push(down);
      }
    }
    if (visited != m) errors.push_back("cycle: graph contains a directed cycle");
  }

  std::vector<int> leaves;
  for (int id = 1; id <= m; ++id)
    if (topo.downstream_of(id).empty()) leaves.push_back(id);
  if (topo.retailers != leaves)
    errors.push_back("retailers: retailer set must equal the leaf set");
  return errors;
}

std::vector<int> topological_order(const NetworkTopology& topo) {
  const int m = topo.node_count();
  std::vector<int> deg(static_cast<size_t>(m), 0);
  for (const auto& [up, down] : topo.edges) {
    (void)up;
    deg[static_cast<size_t>(down - 1)]++;
  }
  // Min-id first keeps the order deterministic.
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int id = 1; id <= m; ++id)
    if (deg[static_cast<size_t>(id - 1)] == 0) ready.push(id);
  std::vector<int> order;
  while (!ready.empty()) {
    int id = ready.top();
    ready.pop();
    order.push_back(id);
    for (int down : topo.downstream_of(id)) {
      if (--deg[static_cast<size_t>(down - 1)] == 0) ready.push(down);
    }
  }
  if (static_cast<int>(order.size()) != m)
    throw std::invalid_argument("topological_order: topology contains a cycle");
  return order;
}

namespace {

NodeConfig make_node(int id, double p, double c, double i, double b, int tau) {
  NodeConfig n;
  n.node_id = id;
  n.sell_price = p;
  n.replenish_cost = c;
  n.storage_cost = i;
  n.backlog_cost = b;
  n.storage_capacity = 30;
  n.order_limit = 30;
  n.lead_time = tau;
  n.initial_inventory = 10;
  return n;
}

}  // namespace

NetworkTopology preset(Preset which) {
  switch (which) {
    case Preset::two_stage:
      return make_topology({make_node(1, 3, 2, 0.50, 0.60, 3),
                            make_node(2, 2, 1, 0.20, 0.90, 1)},
                           {{1, 2}});
    case Preset::four_stage:
      return make_topology({make_node(1, 2, 1, 0.35, 0.50, 1),
                            make_node(2, 3, 2, 0.30, 0.70, 2),
                            make_node(3, 4, 3, 0.40, 0.60, 3),
                            make_node(4, 5, 4, 0.20, 0.90, 1)},
                           {{1, 2}, {2, 3}, {3, 4}});
    case Preset::divergent:
      return make_topology({make_node(1, 2, 1, 0.35, 0.50, 1),
                            make_node(2, 3, 2, 0.30, 0.70, 2),
                            make_node(3, 4, 3, 0.40, 0.60, 1),
                            make_node(4, 4, 3, 0.40, 0.60, 1)},
                           {{1, 2}, {2, 3}, {2, 4}});
    case Preset::eight_stage:
      return make_topology({make_node(1, 9, 8, 0.35, 0.50, 1),
                            make_node(2, 8, 7, 0.30, 0.70, 2),
                            make_node(3, 7, 6, 0.40, 0.60, 3),
                            make_node(4, 6, 5, 0.20, 0.90, 1),
                            make_node(5, 5, 4, 0.35, 0.50, 4),
                            make_node(6, 4, 3, 0.30, 0.70, 2),
                            make_node(7, 3, 2, 0.40, 0.60, 3),
                            make_node(8, 2, 1, 0.20, 0.90, 1)},
                           {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 8}});
  }
  throw std::invalid_argument("preset: unknown preset");
}

NetworkTopology preset(std::string_view name) {
  if (name == "two_stage") return preset(Preset::two_stage);
  if (name == "four_stage") return preset(Preset::four_stage);
  if (name == "divergent") return preset(Preset::divergent);
  if (name == "eight_stage") return preset(Preset::eight_stage);
  throw std::invalid_argument("preset: unknown preset '" + std::string(name) +
                              "' (expected two_stage|four_stage|divergent|eight_stage)");
}

std::vector<std::string> preset_names() {
  return {"two_stage", "four_stage", "divergent", "eight_stage"};
}

NetworkTopology single_node(const NodeConfig& cfg) {
  NodeConfig n = cfg;
  n.node_id = 1;
  return make_topology({n}, {});
}

}  // namespace echelon::network
