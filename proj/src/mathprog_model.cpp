#include "echelon/mathprog.hpp"

#include <fstream>
#include <stdexcept>

namespace echelon::lp {

std::string to_string(RowKind kind) {
  switch (kind) {
    case RowKind::inventory_balance: return "inventory_balance";
    case RowKind::backlog_balance: return "backlog_balance";
    case RowKind::sales_le_demand: return "sales_le_demand";
    case RowKind::sales_le_stock: return "sales_le_stock";
    case RowKind::leadtime_link: return "leadtime_link";
    case RowKind::production_link: return "production_link";
    case RowKind::order_demand_link: return "order_demand_link";
    case RowKind::customer_demand: return "customer_demand";
  }
  return "?";
}

namespace {

std::vector<LinkRef> enumerate_links(const network::NetworkTopology& topo) {
  std::vector<LinkRef> links;
  for (int id = 1; id <= topo.node_count(); ++id) {
    if (topo.is_retailer(id)) {
      links.push_back(LinkRef{id, 0, 0, 0});
    } else {
      const auto& targets = topo.downstream_of(id);
      for (size_t s = 0; s < targets.size(); ++s)
        links.push_back(LinkRef{id, targets[s], static_cast<int>(s),
                                topo.node(targets[s]).lead_time});
    }
  }
  return links;
}

}  // namespace

int LpModel::var_index(VarKind kind, int entity, int period) const {
  // Layout per period: orders, inventories, acquisitions (per node), then
  // sales, backlogs, demands (per link).
  const int n_links = static_cast<int>(links.size());
  const int per_period = 3 * node_count + 3 * n_links;
  int offset = period * per_period;
  switch (kind) {
    case VarKind::order: return offset + (entity - 1);
    case VarKind::inventory: return offset + node_count + (entity - 1);
    case VarKind::acquisition: return offset + 2 * node_count + (entity - 1);
    case VarKind::sale: return offset + 3 * node_count + entity;
    case VarKind::backlog: return offset + 3 * node_count + n_links + entity;
    case VarKind::demand: return offset + 3 * node_count + 2 * n_links + entity;
  }
  throw std::logic_error("var_index: bad kind");
}

LpInitialState LpInitialState::fresh(const network::NetworkTopology& topo, int horizon) {
  LpInitialState init;
  const int m = topo.node_count();
  init.inventory.resize(static_cast<size_t>(m));
  init.link_backlog.resize(static_cast<size_t>(m));
  init.scheduled_arrivals.assign(static_cast<size_t>(m),
                                 std::vector<double>(static_cast<size_t>(horizon), 0.0));
  for (int id = 1; id <= m; ++id) {
    init.inventory[static_cast<size_t>(id - 1)] = topo.node(id).initial_inventory;
    const size_t n_links = topo.is_retailer(id) ? 1 : topo.downstream_of(id).size();
    init.link_backlog[static_cast<size_t>(id - 1)].assign(n_links, 0);
  }
  return init;
}

LpInitialState LpInitialState::from_environment(const sim::Environment& env, int horizon) {
  const auto& topo = env.topology();
  LpInitialState init;
  const int m = topo.node_count();
  init.inventory.resize(static_cast<size_t>(m));
  init.link_backlog.resize(static_cast<size_t>(m));
  init.scheduled_arrivals.resize(static_cast<size_t>(m));
  for (int id = 1; id <= m; ++id) {
    const auto& ns = env.state().nodes[static_cast<size_t>(id - 1)];
    init.inventory[static_cast<size_t>(id - 1)] = ns.on_hand;
    init.link_backlog[static_cast<size_t>(id - 1)].assign(ns.backlog.begin(), ns.backlog.end());
    auto buckets = env.nominal_arrivals(id, horizon);
    init.scheduled_arrivals[static_cast<size_t>(id - 1)].assign(buckets.begin(), buckets.end());
  }
  return init;
}

LpModel build_lp(const network::NetworkTopology& topo, int horizon,
                 const std::vector<std::vector<double>>& demand, const LpInitialState& init,
                 int start_period) {
  if (horizon < 1) throw std::invalid_argument("build_lp: horizon must be >= 1");
  const int m = topo.node_count();
  LpModel model;
  model.horizon = horizon;
  model.node_count = m;
  model.links = enumerate_links(topo);
  const int n_links = static_cast<int>(model.links.size());
  model.num_vars = horizon * (3 * m + 3 * n_links);

  // retailer slot -> demand row lookup
  std::vector<int> retailer_slot(static_cast<size_t>(m), -1);
  for (size_t r = 0; r < topo.retailers.size(); ++r)
    retailer_slot[static_cast<size_t>(topo.retailers[r] - 1)] = static_cast<int>(r);
  for (int r = 0; r < static_cast<int>(topo.retailers.size()); ++r) {
    if (static_cast<int>(demand.at(static_cast<size_t>(r)).size()) < horizon)
      throw std::invalid_argument("build_lp: demand series shorter than the horizon");
  }

  model.objective = Vector::Zero(model.num_vars);
  model.lower = Vector::Zero(model.num_vars);
  model.upper = Vector::Constant(model.num_vars, kInfinity);
  model.var_names.assign(static_cast<size_t>(model.num_vars), {});

  auto name = [&](VarKind kind, int entity, int period) {
    const char* tags[] = {"o", "i", "a", "s", "b", "d"};
    std::string base = tags[static_cast<int>(kind)];
    if (kind == VarKind::sale || kind == VarKind::backlog || kind == VarKind::demand) {
      const auto& l = model.links[static_cast<size_t>(entity)];
      base += "_" + std::to_string(l.up) + "_" + (l.down == 0 ? "c" : std::to_string(l.down));
    } else {
      base += "_" + std::to_string(entity);
    }
    return base + "[" + std::to_string(start_period + period) + "]";
  };

  // bounds, names, objective
  for (int k = 0; k < horizon; ++k) {
    for (int id = 1; id <= m; ++id) {
      const auto& n = topo.node(id);
      const int vo = model.var_index(VarKind::order, id, k);
      const int vi = model.var_index(VarKind::inventory, id, k);
      const int va = model.var_index(VarKind::acquisition, id, k);
      model.upper[vo] = n.order_limit;          // order cap
      model.upper[vi] = n.storage_capacity;     // storage cap
      model.objective[vo] = -n.replenish_cost;
      model.objective[vi] = -n.storage_cost;
      model.var_names[static_cast<size_t>(vo)] = name(VarKind::order, id, k);
      model.var_names[static_cast<size_t>(vi)] = name(VarKind::inventory, id, k);
      model.var_names[static_cast<size_t>(va)] = name(VarKind::acquisition, id, k);
      // acquisitions before goods can possibly flow are pinned to the
      // scheduled arrivals from the initial state
      const bool linkable = k >= n.lead_time;
      if (!linkable) {
        const double arr = init.scheduled_arrivals[static_cast<size_t>(id - 1)]
                               [static_cast<size_t>(k)];
        model.lower[va] = arr;
        model.upper[va] = arr;
      }
    }
    for (int li = 0; li < n_links; ++li) {
      const auto& link = model.links[static_cast<size_t>(li)];
      const auto& n = topo.node(link.up);
      const int vs = model.var_index(VarKind::sale, li, k);
      const int vb = model.var_index(VarKind::backlog, li, k);
      const int vd = model.var_index(VarKind::demand, li, k);
      model.objective[vs] = n.sell_price;
      model.objective[vb] = -n.backlog_cost;
      model.var_names[static_cast<size_t>(vs)] = name(VarKind::sale, li, k);
      model.var_names[static_cast<size_t>(vb)] = name(VarKind::backlog, li, k);
      model.var_names[static_cast<size_t>(vd)] = name(VarKind::demand, li, k);
    }
  }

  // rows
  const int rows_per_period = 3 * m + 3 * n_links;
  const int n_rows = horizon * rows_per_period;
  model.rows = Matrix::Zero(n_rows, model.num_vars);
  model.rhs = Vector::Zero(n_rows);
  model.senses.assign(static_cast<size_t>(n_rows), RowSense::equal);
  model.kinds.assign(static_cast<size_t>(n_rows), RowKind::inventory_balance);
  model.row_names.assign(static_cast<size_t>(n_rows), {});

  int row = 0;
  auto emit = [&](RowKind kind, RowSense sense, double rhs, const std::string& label) {
    model.kinds[static_cast<size_t>(row)] = kind;
    model.senses[static_cast<size_t>(row)] = sense;
    model.rhs[row] = rhs;
    model.row_names[static_cast<size_t>(row)] = label + "[" + std::to_string(start_period) + "+]";
    return row++;
  };

  for (int k = 0; k < horizon; ++k) {
    for (int id = 1; id <= m; ++id) {
      const auto& n = topo.node(id);
      // inventory balance: i[k] - i[k-1] - a[k] + sum_links s[k] = 0
      {
        const int r = emit(RowKind::inventory_balance, RowSense::equal,
                           k == 0 ? init.inventory[static_cast<size_t>(id - 1)] : 0.0,
                           "inv_" + std::to_string(id) + "_" + std::to_string(k));
        model.rows(r, model.var_index(VarKind::inventory, id, k)) = 1.0;
        if (k > 0) model.rows(r, model.var_index(VarKind::inventory, id, k - 1)) = -1.0;
        model.rows(r, model.var_index(VarKind::acquisition, id, k)) = -1.0;
        for (int li = 0; li < n_links; ++li)
          if (model.links[static_cast<size_t>(li)].up == id)
            model.rows(r, model.var_index(VarKind::sale, li, k)) = 1.0;
      }
      // total sales cap: sum_links s[k] - i[k-1] - a[k] <= 0
      {
        const int r = emit(RowKind::sales_le_stock, RowSense::less_equal,
                           k == 0 ? init.inventory[static_cast<size_t>(id - 1)] : 0.0,
                           "cap_" + std::to_string(id) + "_" + std::to_string(k));
        for (int li = 0; li < n_links; ++li)
          if (model.links[static_cast<size_t>(li)].up == id)
            model.rows(r, model.var_index(VarKind::sale, li, k)) = 1.0;
        if (k > 0) model.rows(r, model.var_index(VarKind::inventory, id, k - 1)) = -1.0;
        model.rows(r, model.var_index(VarKind::acquisition, id, k)) = -1.0;
      }
      // lead-time linking
      {
        const bool root = (id == 1);
        const int tau = n.lead_time;
        const int r = emit(root ? RowKind::production_link : RowKind::leadtime_link,
                           RowSense::equal, 0.0,
                           "acq_" + std::to_string(id) + "_" + std::to_string(k));
        model.rows(r, model.var_index(VarKind::acquisition, id, k)) = 1.0;
        if (k >= tau) {
          if (root) {
            model.rows(r, model.var_index(VarKind::order, 1, k - tau)) = -1.0;
          } else {
            // the unique upstream link feeding this node
            for (int li = 0; li < n_links; ++li)
              if (model.links[static_cast<size_t>(li)].down == id)
                model.rows(r, model.var_index(VarKind::sale, li, k - tau)) = -1.0;
          }
          model.rhs[r] += init.scheduled_arrivals[static_cast<size_t>(id - 1)]
                              [static_cast<size_t>(k)];
        } else {
          // fully pinned by bounds above; keep the row as a tautology
          model.rhs[r] = init.scheduled_arrivals[static_cast<size_t>(id - 1)]
                             [static_cast<size_t>(k)];
        }
      }
    }
    for (int li = 0; li < n_links; ++li) {
      const auto& link = model.links[static_cast<size_t>(li)];
      const int b0 = init.link_backlog[static_cast<size_t>(link.up - 1)]
                         [static_cast<size_t>(link.slot_in_up)];
      // backlog balance: b[k] - b[k-1] + s[k] - d[k] = 0
      {
        const int r = emit(RowKind::backlog_balance, RowSense::equal, k == 0 ? b0 : 0.0,
                           "bal_" + std::to_string(link.up) + "_" + std::to_string(k));
        model.rows(r, model.var_index(VarKind::backlog, li, k)) = 1.0;
        if (k > 0) model.rows(r, model.var_index(VarKind::backlog, li, k - 1)) = -1.0;
        model.rows(r, model.var_index(VarKind::sale, li, k)) = 1.0;
        model.rows(r, model.var_index(VarKind::demand, li, k)) = -1.0;
      }
      // link sales cap: s[k] - b[k-1] - d[k] <= 0
      {
        const int r = emit(RowKind::sales_le_demand, RowSense::less_equal, k == 0 ? b0 : 0.0,
                           "sd_" + std::to_string(link.up) + "_" + std::to_string(k));
        model.rows(r, model.var_index(VarKind::sale, li, k)) = 1.0;
        if (k > 0) model.rows(r, model.var_index(VarKind::backlog, li, k - 1)) = -1.0;
        model.rows(r, model.var_index(VarKind::demand, li, k)) = -1.0;
      }
      // demand identity
      if (link.down == 0) {
        const int slot = retailer_slot[static_cast<size_t>(link.up - 1)];
        const int r = emit(RowKind::customer_demand, RowSense::equal,
                           demand[static_cast<size_t>(slot)][static_cast<size_t>(k)],
                           "cd_" + std::to_string(link.up) + "_" + std::to_string(k));
        model.rows(r, model.var_index(VarKind::demand, li, k)) = 1.0;
      } else {
        const int r = emit(RowKind::order_demand_link, RowSense::equal, 0.0,
                           "od_" + std::to_string(link.up) + "_" + std::to_string(link.down) +
                               "_" + std::to_string(k));
        model.rows(r, model.var_index(VarKind::demand, li, k)) = 1.0;
        model.rows(r, model.var_index(VarKind::order, link.down, k)) = -1.0;
      }
    }
  }
  if (row != n_rows) throw std::logic_error("build_lp: row count drifted from the layout");
  return model;
}

double max_constraint_violation(const LpModel& model, const Vector& x) {
  double worst = 0.0;
  Vector lhs = model.rows * x;
  for (int r = 0; r < model.num_rows(); ++r) {
    const double resid = lhs[r] - model.rhs[r];
    if (model.senses[static_cast<size_t>(r)] == RowSense::equal)
      worst = std::max(worst, std::abs(resid));
    else
      worst = std::max(worst, resid);
  }
  for (int j = 0; j < model.num_vars; ++j) {
    worst = std::max(worst, model.lower[j] - x[j]);
    if (model.upper[j] < kInfinity) worst = std::max(worst, x[j] - model.upper[j]);
  }
  return worst;
}

void write_lp_file(const LpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_lp_file: cannot open " + path);
  out << "Maximize\n obj:";
  for (int j = 0; j < model.num_vars; ++j) {
    if (model.objective[j] == 0.0) continue;
    out << (model.objective[j] >= 0 ? " +" : " -") << std::abs(model.objective[j]) << " "
        << model.var_names[static_cast<size_t>(j)];
  }
  out << "\nSubject To\n";
  for (int r = 0; r < model.num_rows(); ++r) {
    out << " " << to_string(model.kinds[static_cast<size_t>(r)]) << "_" << r << ":";
    for (int j = 0; j < model.num_vars; ++j) {
      const double c = model.rows(r, j);
      if (c == 0.0) continue;
      out << (c >= 0 ? " +" : " -") << std::abs(c) << " "
          << model.var_names[static_cast<size_t>(j)];
    }
    out << (model.senses[static_cast<size_t>(r)] == RowSense::equal ? " = " : " <= ")
        << model.rhs[r] << "\n";
  }
  out << "Bounds\n";
  for (int j = 0; j < model.num_vars; ++j) {
    out << " " << model.lower[j] << " <= " << model.var_names[static_cast<size_t>(j)];
    if (model.upper[j] < kInfinity) out << " <= " << model.upper[j];
    out << "\n";
  }
  out << "End\n";
}

}  // namespace echelon::lp
