#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "echelon/rng.hpp"

namespace echelon::stochastic {

/// Demand / lead-time uncertainty settings:
///   S1: stationary Poisson demand, deterministic lead times
///   S2: spiked (non-stationary) Poisson demand, deterministic lead times
///   S3: stationary Poisson demand, Bernoulli-process lead times
enum class Setting { S1, S2, S3 };

Setting setting_from_string(const std::string& s);
std::string to_string(Setting s);

struct UncertaintyConfig {
  Setting setting = Setting::S1;
  double lambda_poisson = 5.0;  // demand rate
  double spike_prob = 0.0;      // p_d, used by S2 only
  double delivery_prob = 1.0;   // p_tau, used by S3 only
  /// When set, demand is exactly round(lambda_poisson) every period.
  /// Used by small benchmarks; not one of the named settings.
  bool deterministic_demand = false;
};

/// Field validation for configs loaded from files: rejects out-of-range
/// parameters and settings that carry values for unused knobs.
std::vector<std::string> validate(const UncertaintyConfig& cfg, bool spike_prob_set,
                                  bool delivery_prob_set);

/// Poisson(lambda) via inverse transform on a single uniform; exact and
/// platform-stable at the demand rates used here.
int sample_poisson(double lambda, RngStream& rng);

/// Stationary demand draw (settings S1/S3, or the deterministic override).
int sample_demand(const UncertaintyConfig& cfg, RngStream& rng);

/// Spiked demand draw (setting S2): d ~ Poisson(lambda), then two
/// independent Bernoulli(p_d) draws X0 and X2; X0 zeroes the draw and
/// otherwise X2 doubles it. Both are always drawn so the stream advances
/// identically regardless of outcome.
int sample_spiked_demand(const UncertaintyConfig& cfg, RngStream& rng);

/// Realized demand under whatever the configured setting is.
int realized_demand(const UncertaintyConfig& cfg, RngStream& rng);

/// Lead-time draw. Deterministic settings return the nominal value; S3
/// returns nominal + n where n counts Bernoulli(p_tau) failures before the
/// first success.
int sample_lead_time(const UncertaintyConfig& cfg, int nominal, RngStream& rng);

/// Demand realized by retailer `node` at `period` of episode
/// (seed, episode). Pure function of its arguments: any two callers see the
/// same value, which is what makes evaluation traces shareable across
/// methods.
int demand_at(const UncertaintyConfig& cfg, uint64_t seed, uint64_t episode, int node,
              int period);

/// Lead time drawn for a shipment to `node` dispatched at `period`. At most
/// one shipment per destination can be dispatched per period (single
/// sourcing), so this field fully determines every delay in an episode.
int lead_time_at(const UncertaintyConfig& cfg, int nominal, uint64_t seed, uint64_t episode,
                 int node, int period);

}  // namespace echelon::stochastic
