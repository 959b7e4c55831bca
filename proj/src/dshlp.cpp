#include "echelon/dshlp.hpp"

#include <cmath>
#include <stdexcept>

namespace echelon::admm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

int round_order(double v, int limit) {
  int o = static_cast<int>(std::floor(v + 0.5));
  return std::clamp(o, 0, limit);
}
}  // namespace

NodeSubproblem::NodeSubproblem(const network::NodeConfig& cfg, bool is_retailer,
                               int n_link_slots, int horizon, double rho, int inventory_start,
                               const std::vector<int>& backlog_start,
                               const std::vector<double>& scheduled_arrivals,
                               const std::vector<double>& demand, bool is_root,
                               const qp::QpSettings& qp_settings)
    : node_id_(cfg.node_id),
      horizon_(horizon),
      n_slots_(n_link_slots),
      rho_(rho),
      is_root_(is_root),
      is_retailer_(is_retailer),
      qp_settings_(qp_settings) {
  const int h = horizon_;
  const int n = num_vars();
  linear_profit_ = Vector::Zero(n);
  p_diag_ = Vector::Zero(n);
  downstream_tau_.assign(static_cast<size_t>(n_slots_), 0);

  // bounds rows (one identity row per variable)
  const int n_bal = h;                     // inventory balance
  const int n_cap = h;                     // stock cap on total sales
  const int n_link_rows = 2 * h * n_slots_;
  const int n_root = is_root_ ? h : 0;
  const int rows = n + n_bal + n_cap + n_link_rows + n_root;
  constraints_ = Matrix::Zero(rows, n);
  con_lower_ = Vector::Constant(rows, -kInf);
  con_upper_ = Vector::Constant(rows, kInf);

  int row = 0;
  auto bound_row = [&](int var, double lo, double hi) {
    constraints_(row, var) = 1.0;
    con_lower_[row] = lo;
    con_upper_[row] = hi;
    ++row;
  };

  for (int k = 0; k < h; ++k) {
    linear_profit_[idx_order(k)] = -cfg.replenish_cost;
    linear_profit_[idx_inventory(k)] = -cfg.storage_cost;
    bound_row(idx_order(k), 0.0, cfg.order_limit);
    bound_row(idx_inventory(k), 0.0, cfg.storage_capacity);
    const double arr = scheduled_arrivals.at(static_cast<size_t>(k));
    if (!is_root_ && k < cfg.lead_time)
      bound_row(idx_acquisition(k), arr, arr);  // already in motion, fixed
    else
      bound_row(idx_acquisition(k), 0.0, kInf);
  }
  for (int slot = 0; slot < n_slots_; ++slot) {
    for (int k = 0; k < h; ++k) {
      linear_profit_[idx_sale(slot, k)] = cfg.sell_price;
      linear_profit_[idx_backlog(slot, k)] = -cfg.backlog_cost;
      bound_row(idx_sale(slot, k), 0.0, kInf);
      bound_row(idx_backlog(slot, k), 0.0, kInf);
      if (is_retailer_)
        bound_row(idx_demand(slot, k), demand.at(static_cast<size_t>(k)),
                  demand.at(static_cast<size_t>(k)));
      else
        bound_row(idx_demand(slot, k), 0.0, kInf);
    }
  }

  // inventory balance and stock cap
  for (int k = 0; k < h; ++k) {
    const double rhs0 = (k == 0) ? inventory_start : 0.0;
    constraints_(row, idx_inventory(k)) = 1.0;
    if (k > 0) constraints_(row, idx_inventory(k - 1)) = -1.0;
    constraints_(row, idx_acquisition(k)) = -1.0;
    for (int slot = 0; slot < n_slots_; ++slot) constraints_(row, idx_sale(slot, k)) = 1.0;
    con_lower_[row] = rhs0;
    con_upper_[row] = rhs0;
    ++row;

    for (int slot = 0; slot < n_slots_; ++slot) constraints_(row, idx_sale(slot, k)) = 1.0;
    if (k > 0) constraints_(row, idx_inventory(k - 1)) = -1.0;
    constraints_(row, idx_acquisition(k)) = -1.0;
    con_upper_[row] = rhs0;
    ++row;
  }
  // per-link backlog balance and demand cap
  for (int slot = 0; slot < n_slots_; ++slot) {
    const double b0 = backlog_start.at(static_cast<size_t>(slot));
    for (int k = 0; k < h; ++k) {
      const double rhs0 = (k == 0) ? b0 : 0.0;
      constraints_(row, idx_backlog(slot, k)) = 1.0;
      if (k > 0) constraints_(row, idx_backlog(slot, k - 1)) = -1.0;
      constraints_(row, idx_sale(slot, k)) = 1.0;
      constraints_(row, idx_demand(slot, k)) = -1.0;
      con_lower_[row] = rhs0;
      con_upper_[row] = rhs0;
      ++row;

      constraints_(row, idx_sale(slot, k)) = 1.0;
      if (k > 0) constraints_(row, idx_backlog(slot, k - 1)) = -1.0;
      constraints_(row, idx_demand(slot, k)) = -1.0;
      con_upper_[row] = rhs0;
      ++row;
    }
  }
  // root production linking
  if (is_root_) {
    for (int k = 0; k < h; ++k) {
      constraints_(row, idx_acquisition(k)) = 1.0;
      double rhs = scheduled_arrivals.at(static_cast<size_t>(k));
      if (k >= cfg.lead_time) constraints_(row, idx_order(k - cfg.lead_time)) = -1.0;
      con_lower_[row] = rhs;
      con_upper_[row] = rhs;
      ++row;
    }
  }
  if (row != rows) throw std::logic_error("NodeSubproblem: row layout drifted");

  copies_ = Vector::Zero(n);
  lead_time_ = cfg.lead_time;
}

void NodeSubproblem::couple_upstream(int link_index) {
  upstream_link_ = link_index;
  for (int k = 0; k < horizon_; ++k) {
    p_diag_[idx_order(k)] += rho_;
    if (k >= lead_time_) p_diag_[idx_acquisition(k)] += rho_;
  }
}

void NodeSubproblem::couple_downstream(int slot, int link_index, int tau_down) {
  downstream_links_.emplace_back(slot, link_index);
  downstream_tau_[static_cast<size_t>(slot)] = tau_down;
  for (int k = 0; k < horizon_; ++k) {
    p_diag_[idx_demand(slot, k)] += rho_;
    if (k + tau_down < horizon_) p_diag_[idx_sale(slot, k)] += rho_;
  }
}

void NodeSubproblem::finalize() {
  solver_ = std::make_unique<qp::QpSolver>(Matrix(p_diag_.asDiagonal()), constraints_,
                                           con_lower_, con_upper_, qp_settings_);
}

void NodeSubproblem::build_q(const AdmmWorkspace& ws, Vector& q) const {
  q = -linear_profit_;  // minimize the negated profit
  if (upstream_link_ >= 0) {
    const auto& link = ws.links[static_cast<size_t>(upstream_link_)];
    for (int k = 0; k < horizon_; ++k) {
      q[idx_order(k)] -= rho_ * (link.z_order[k] - link.dual_order_down[k]);
      if (k >= lead_time_)
        q[idx_acquisition(k)] -= rho_ * (link.z_goods[k] - link.dual_goods_down[k]);
    }
  }
  for (const auto& [slot, li] : downstream_links_) {
    const auto& link = ws.links[static_cast<size_t>(li)];
    const int tau = downstream_tau_[static_cast<size_t>(slot)];
    for (int k = 0; k < horizon_; ++k) {
      q[idx_demand(slot, k)] -= rho_ * (link.z_order[k] - link.dual_order_up[k]);
      if (k + tau < horizon_)
        q[idx_sale(slot, k)] -=
            rho_ * (link.z_goods[k + tau] - link.dual_goods_up[k + tau]);
    }
  }
}

void NodeSubproblem::solve(const AdmmWorkspace& ws) {
  if (!solver_) throw std::logic_error("NodeSubproblem: finalize() was not called");
  Vector q;
  build_q(ws, q);
  auto result = solver_->solve(q);
  copies_ = result.x;
}

double NodeSubproblem::local_profit() const { return linear_profit_.dot(copies_); }

DshlpCoordinator::DshlpCoordinator(const sim::Environment& env, int total_horizon,
                                   const DshlpConfig& config,
                                   const std::optional<std::vector<Vector>>& warm_z_order,
                                   const std::optional<std::vector<Vector>>& warm_z_goods)
    : topo_(env.topology()), config_(config), horizon_(total_horizon - env.state().period) {
  if (horizon_ < 1) throw std::invalid_argument("DshlpCoordinator: window is empty");
  const int m = topo_.node_count();
  const double mean_demand = lp::expected_demand(env.uncertainty());

  // interior links, ascending (upstream id, slot)
  for (int id = 1; id <= m; ++id) {
    if (topo_.is_retailer(id)) continue;
    const auto& targets = topo_.downstream_of(id);
    for (size_t s = 0; s < targets.size(); ++s) {
      LinkConsensus link;
      link.up = id;
      link.down = targets[s];
      link.tau_down = topo_.node(targets[s]).lead_time;
      link.z_order = Vector::Zero(horizon_);
      link.z_goods = Vector::Zero(horizon_);
      link.dual_order_up = Vector::Zero(horizon_);
      link.dual_order_down = Vector::Zero(horizon_);
      link.dual_goods_up = Vector::Zero(horizon_);
      link.dual_goods_down = Vector::Zero(horizon_);
      workspace_.links.push_back(std::move(link));
    }
  }
  if (warm_z_order && warm_z_order->size() == workspace_.links.size()) {
    for (size_t li = 0; li < workspace_.links.size(); ++li) {
      const Vector& prev = (*warm_z_order)[li];
      const Vector& prev_goods = (*warm_z_goods)[li];
      if (prev.size() == horizon_ + 1) {
        workspace_.links[li].z_order = prev.tail(horizon_);
        workspace_.links[li].z_goods = prev_goods.tail(horizon_);
      }
    }
  }

  // one private subproblem per node, built from local information only
  subproblems_.reserve(static_cast<size_t>(m));
  for (int id = 1; id <= m; ++id) {
    const auto& ns = env.state().nodes[static_cast<size_t>(id - 1)];
    const bool retailer = topo_.is_retailer(id);
    const int slots = retailer ? 1 : static_cast<int>(topo_.downstream_of(id).size());
    std::vector<int> backlog(ns.backlog.begin(), ns.backlog.end());
    auto arrivals_int = env.nominal_arrivals(id, horizon_);
    std::vector<double> arrivals(arrivals_int.begin(), arrivals_int.end());
    // Retailers plan against the demand expectation for the whole window;
    // realizations reach the plan only through the carried state.
    std::vector<double> demand;
    if (retailer) demand.assign(static_cast<size_t>(horizon_), mean_demand);
    subproblems_.emplace_back(topo_.node(id), retailer, slots, horizon_, config_.rho,
                              ns.on_hand, backlog, arrivals, demand, id == 1, config_.qp);
  }
  for (size_t li = 0; li < workspace_.links.size(); ++li) {
    const auto& link = workspace_.links[li];
    subproblems_[static_cast<size_t>(link.down - 1)].couple_upstream(static_cast<int>(li));
    const auto& targets = topo_.downstream_of(link.up);
    int slot = 0;
    for (size_t s = 0; s < targets.size(); ++s)
      if (targets[s] == link.down) slot = static_cast<int>(s);
    subproblems_[static_cast<size_t>(link.up - 1)].couple_downstream(slot, static_cast<int>(li),
                                                                     link.tau_down);
  }
  for (auto& sub : subproblems_) sub.finalize();
}

void DshlpCoordinator::coordinate() {
  for (auto& link : workspace_.links) {
    const auto& up = subproblems_[static_cast<size_t>(link.up - 1)];
    const auto& down = subproblems_[static_cast<size_t>(link.down - 1)];
    int slot = 0;
    for (const auto& [s, li] : up.downstream_links())
      if (workspace_.links[static_cast<size_t>(li)].down == link.down) slot = s;
    for (int k = 0; k < horizon_; ++k) {
      link.z_order[k] =
          0.5 * (down.copies()[down.idx_order(k)] + up.copies()[up.idx_demand(slot, k)]);
      if (k >= link.tau_down)
        link.z_goods[k] = 0.5 * (down.copies()[down.idx_acquisition(k)] +
                                 up.copies()[up.idx_sale(slot, k - link.tau_down)]);
    }
  }
}

double DshlpCoordinator::dual_update() {
  double primal = 0.0;
  for (auto& link : workspace_.links) {
    const auto& up = subproblems_[static_cast<size_t>(link.up - 1)];
    const auto& down = subproblems_[static_cast<size_t>(link.down - 1)];
    int slot = 0;
    for (const auto& [s, li] : up.downstream_links())
      if (workspace_.links[static_cast<size_t>(li)].down == link.down) slot = s;
    for (int k = 0; k < horizon_; ++k) {
      const double o_copy = down.copies()[down.idx_order(k)];
      const double d_copy = up.copies()[up.idx_demand(slot, k)];
      link.dual_order_down[k] += o_copy - link.z_order[k];
      link.dual_order_up[k] += d_copy - link.z_order[k];
      primal = std::max({primal, std::abs(o_copy - link.z_order[k]),
                         std::abs(d_copy - link.z_order[k])});
      if (k >= link.tau_down) {
        const double a_copy = down.copies()[down.idx_acquisition(k)];
        const double s_copy = up.copies()[up.idx_sale(slot, k - link.tau_down)];
        link.dual_goods_down[k] += a_copy - link.z_goods[k];
        link.dual_goods_up[k] += s_copy - link.z_goods[k];
        primal = std::max({primal, std::abs(a_copy - link.z_goods[k]),
                           std::abs(s_copy - link.z_goods[k])});
      }
    }
  }
  return primal;
}

DshlpStepStats DshlpCoordinator::run() {
  DshlpStepStats stats;
  std::vector<Vector> z_prev_order, z_prev_goods;
  for (int it = 0; it < config_.max_iterations; ++it) {
    z_prev_order.clear();
    z_prev_goods.clear();
    for (const auto& link : workspace_.links) {
      z_prev_order.push_back(link.z_order);
      z_prev_goods.push_back(link.z_goods);
    }
    for (auto& sub : subproblems_) sub.solve(workspace_);
    coordinate();
    const double primal = dual_update();
    double dual = 0.0;
    for (size_t li = 0; li < workspace_.links.size(); ++li) {
      dual = std::max(dual, (workspace_.links[li].z_order - z_prev_order[li])
                                .cwiseAbs()
                                .maxCoeff());
      dual = std::max(dual, (workspace_.links[li].z_goods - z_prev_goods[li])
                                .cwiseAbs()
                                .maxCoeff());
    }
    dual *= config_.rho;
    workspace_.iterations = it + 1;
    workspace_.primal_history.push_back(primal);
    workspace_.dual_history.push_back(dual);
    stats.iterations = it + 1;
    stats.primal_residual = primal;
    stats.dual_residual = dual;
    if (workspace_.links.empty() ||
        (primal < config_.tolerance && dual < config_.tolerance)) {
      stats.converged = true;
      break;
    }
  }
  if (config_.max_iterations == 0) {
    // cold start: nothing solved, copies stay at their initialization
    stats.converged = false;
  }
  double obj = 0.0;
  for (const auto& sub : subproblems_) obj += sub.local_profit();
  stats.objective = obj;
  return stats;
}

std::vector<int> DshlpCoordinator::first_period_orders() const {
  std::vector<int> orders;
  orders.reserve(subproblems_.size());
  for (const auto& sub : subproblems_) {
    const double raw = sub.copies()[sub.idx_order(0)];
    orders.push_back(round_order(raw, topo_.node(sub.node_id()).order_limit));
  }
  return orders;
}

void DshlpPolicy::start_episode() {
  stats_.clear();
  warm_z_order_.reset();
  warm_z_goods_.reset();
}

std::vector<int> DshlpPolicy::act(const sim::Environment& env) {
  DshlpCoordinator coordinator(env, horizon_, config_, warm_z_order_, warm_z_goods_);
  stats_.push_back(coordinator.run());
  if (config_.warm_start) {
    std::vector<Vector> zo, zg;
    for (const auto& link : coordinator.workspace().links) {
      zo.push_back(link.z_order);
      zg.push_back(link.z_goods);
    }
    warm_z_order_ = std::move(zo);
    warm_z_goods_ = std::move(zg);
  }
  return coordinator.first_period_orders();
}

}  // namespace echelon::admm
