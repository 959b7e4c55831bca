#include "echelon/metrics.hpp"

#include <cmath>

namespace echelon::metrics {

void MetricsReport::finalize() {
  const size_t n = episodes.size();
  if (n == 0) {
    mean_reward = std_reward = mean_inventory = mean_backlog = 0.0;
    return;
  }
  double sum = 0, inv = 0, back = 0;
  for (const auto& e : episodes) {
    sum += e.reward;
    inv += e.mean_inventory;
    back += e.mean_backlog;
  }
  mean_reward = sum / static_cast<double>(n);
  mean_inventory = inv / static_cast<double>(n);
  mean_backlog = back / static_cast<double>(n);
  double sq = 0;
  for (const auto& e : episodes) sq += (e.reward - mean_reward) * (e.reward - mean_reward);
  std_reward = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
}

}  // namespace echelon::metrics
