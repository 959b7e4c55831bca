#pragma once

#include <Eigen/Core>

#include <limits>
#include <string>
#include <vector>

#include "echelon/network.hpp"
#include "echelon/simulator.hpp"

namespace echelon::lp {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense { equal, less_equal };

/// Which balance or linking rule a row encodes; keeps solver output and
/// constraint audits traceable back to the model.
enum class RowKind {
  inventory_balance,   // end inventory = start + acquisition - sales
  backlog_balance,     // end backlog = start + demand - sales, per link
  sales_le_demand,     // link sales <= start backlog + link demand
  sales_le_stock,      // total sales <= start inventory + acquisition
  leadtime_link,       // acquisition = upstream shipment lead-time periods ago
  production_link,     // root acquisition = own order lead-time periods ago
  order_demand_link,   // interior link demand = downstream order
  customer_demand      // retailer demand = customer data
};

std::string to_string(RowKind kind);

/// Decision variable families, one value per (entity, period).
enum class VarKind { order, inventory, acquisition, sale, backlog, demand };

/// A directed goods link. Customer links have down == 0 and tau_down == 0.
struct LinkRef {
  int up = 0;
  int down = 0;
  int slot_in_up = 0;  // position within the upstream node's target list
  int tau_down = 0;    // lead time of the receiving node
};

struct LpModel {
  int num_vars = 0;
  Vector objective;  // maximize objective . x
  Vector lower, upper;
  Matrix rows;       // dense row-major coefficient matrix
  Vector rhs;
  std::vector<RowSense> senses;
  std::vector<RowKind> kinds;
  std::vector<std::string> var_names;
  std::vector<std::string> row_names;

  int num_rows() const { return static_cast<int>(rhs.size()); }

  // layout bookkeeping for variable lookups
  int horizon = 0;
  int node_count = 0;
  std::vector<LinkRef> links;
  int var_index(VarKind kind, int entity, int period) const;
};

/// Start-of-window snapshot fed to the model builder. `scheduled_arrivals`
/// holds goods already in motion, bucketed by relative period.
struct LpInitialState {
  std::vector<int> inventory;                        // per node slot
  std::vector<std::vector<int>> link_backlog;        // per node slot, per link slot
  std::vector<std::vector<double>> scheduled_arrivals;  // per node slot, length >= horizon

  static LpInitialState fresh(const network::NetworkTopology& topo, int horizon);
  /// Snapshot of a running environment: current inventories, per-link
  /// backlogs and the in-transit goods placed at their nominal arrival slots.
  static LpInitialState from_environment(const sim::Environment& env, int horizon);
};

/// Builds the profit-maximizing order plan model over `horizon` periods.
/// `demand` maps each retailer slot to per-period customer demand (relative
/// periods; at least `horizon` entries). `start_period` only labels rows and
/// variables for debugging output.
LpModel build_lp(const network::NetworkTopology& topo, int horizon,
                 const std::vector<std::vector<double>>& demand, const LpInitialState& init,
                 int start_period = 0);

struct LpSolution {
  enum class Status { optimal, infeasible, unbounded };
  Status status = Status::infeasible;
  double objective = 0.0;
  Vector values;
  int iterations = 0;
};

/// Dense bounded-variable two-phase simplex with a deterministic pivot rule
/// (largest reduced cost, Bland fallback after degenerate stalls).
LpSolution solve_lp(const LpModel& model);

/// Largest absolute row violation (equality residual or inequality excess),
/// bound violations included.
double max_constraint_violation(const LpModel& model, const Vector& x);

/// Text export in the industry LP-file layout, for debugging against
/// external solvers.
void write_lp_file(const LpModel& model, const std::string& path);

/// Expected one-period customer demand under a given uncertainty setting.
double expected_demand(const stochastic::UncertaintyConfig& cfg);

struct OracleResult {
  double lp_objective = 0.0;
  double realized_profit = 0.0;
  std::vector<std::vector<int>> orders;  // per period, per node slot
  double mean_inventory = 0.0;           // SCN-wide, end of period
  double mean_backlog = 0.0;
  std::vector<double> period_profit;     // per period
};

/// Perfect-information benchmark for one episode: solve a single model over
/// the whole horizon with the realized demand trace, round orders half-up,
/// replay them through the simulator with nominal lead times.
OracleResult oracle_run(const network::NetworkTopology& topo,
                        const stochastic::UncertaintyConfig& uncertainty, uint64_t seed,
                        uint64_t episode, int horizon);

/// Centralized shrinking-horizon policy: solve over periods j..T-1 with the
/// realized demand at j and the expected demand afterwards; enact the first
/// period's orders (rounded half-up).
std::vector<int> shlp_orders(const sim::Environment& env, int total_horizon);

}  // namespace echelon::lp
