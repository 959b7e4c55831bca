#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace echelon::metrics {

struct EpisodeRow {
  int episode = 0;
  double reward = 0.0;          // SCN total profit over the episode
  double mean_inventory = 0.0;  // SCN-wide end-of-period inventory, time mean
  double mean_backlog = 0.0;
};

/// Evaluation summary for one method on one cell of the experiment grid.
struct MetricsReport {
  std::string method;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double oracle_ratio = 0.0;  // 0 until an oracle reference is attached
  double mean_inventory = 0.0;
  double mean_backlog = 0.0;
  std::vector<EpisodeRow> episodes;
  std::vector<double> cumulative_profit;  // mean over episodes, per period
  uint64_t trace_hash = 0;

  /// Recomputes the header statistics from the per-episode rows.
  void finalize();
};

}  // namespace echelon::metrics
