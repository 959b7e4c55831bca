#include "echelon/stochastic.hpp"

#include <cmath>
#include <stdexcept>

namespace echelon::stochastic {

Setting setting_from_string(const std::string& s) {
  if (s == "S1" || s == "s1") return Setting::S1;
  if (s == "S2" || s == "s2") return Setting::S2;
  if (s == "S3" || s == "s3") return Setting::S3;
  throw std::invalid_argument("uncertainty setting must be one of S1|S2|S3, got '" + s + "'");
}

std::string to_string(Setting s) {
  switch (s) {
    case Setting::S1: return "S1";
    case Setting::S2: return "S2";
    case Setting::S3: return "S3";
  }
  return "?";
}

std::vector<std::string> validate(const UncertaintyConfig& cfg, bool spike_prob_set,
                                  bool delivery_prob_set) {
  std::vector<std::string> errors;
  if (!(cfg.lambda_poisson > 0))
    errors.push_back("lambda_poisson must be > 0");
  if (cfg.spike_prob < 0 || cfg.spike_prob > 1)
    errors.push_back("p_d must lie in [0, 1]");
  if (!(cfg.delivery_prob > 0) || cfg.delivery_prob > 1)
    errors.push_back("p_tau must lie in (0, 1]");
  if (cfg.setting != Setting::S2 && spike_prob_set)
    errors.push_back("p_d is only meaningful under setting S2");
  if (cfg.setting != Setting::S3 && delivery_prob_set)
    errors.push_back("p_tau is only meaningful under setting S3");
  return errors;
}

int sample_poisson(double lambda, RngStream& rng) {
  // Inverse transform by cumulative product. One uniform per draw keeps the
  // stream layout independent of the outcome.
  const double u = rng.next_unit();
  double p = std::exp(-lambda);
  double cum = p;
  int k = 0;
  while (u >= cum && k < 10000) {
    ++k;
    p *= lambda / k;
    cum += p;
  }
  return k;
}

int sample_demand(const UncertaintyConfig& cfg, RngStream& rng) {
  if (cfg.deterministic_demand) {
    // Still consume one uniform so traces keep their shape if the flag flips.
    (void)rng.next_unit();
    return static_cast<int>(std::llround(cfg.lambda_poisson));
  }
  return sample_poisson(cfg.lambda_poisson, rng);
}

int sample_spiked_demand(const UncertaintyConfig& cfg, RngStream& rng) {
  const int d = sample_demand(cfg, rng);
  const bool zero_spike = rng.next_bernoulli(cfg.spike_prob);
  const bool double_spike = rng.next_bernoulli(cfg.spike_prob);
  if (zero_spike) return 0;  // the zero multiplier wins when both fire
  if (double_spike) return 2 * d;
  return d;
}

int realized_demand(const UncertaintyConfig& cfg, RngStream& rng) {
  if (cfg.setting == Setting::S2 && !cfg.deterministic_demand)
    return sample_spiked_demand(cfg, rng);
  return sample_demand(cfg, rng);
}

int sample_lead_time(const UncertaintyConfig& cfg, int nominal, RngStream& rng) {
  if (nominal < 0) throw std::invalid_argument("sample_lead_time: nominal < 0");
  if (cfg.setting != Setting::S3) return nominal;
  int extra = 0;
  while (!rng.next_bernoulli(cfg.delivery_prob)) ++extra;
  return nominal + extra;
}

int demand_at(const UncertaintyConfig& cfg, uint64_t seed, uint64_t episode, int node,
              int period) {
  RngStream rng(seed, episode, static_cast<uint64_t>(node),
                stream_purpose::demand(static_cast<uint64_t>(period)));
  return realized_demand(cfg, rng);
}

int lead_time_at(const UncertaintyConfig& cfg, int nominal, uint64_t seed, uint64_t episode,
                 int node, int period) {
  RngStream rng(seed, episode, static_cast<uint64_t>(node),
                stream_purpose::lead_time(static_cast<uint64_t>(period)));
  return sample_lead_time(cfg, nominal, rng);
}

}  // namespace echelon::stochastic
