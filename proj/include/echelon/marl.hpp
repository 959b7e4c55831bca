#pragma once

#include <string>
#include <vector>

#include "echelon/dshlp.hpp"
#include "echelon/metrics.hpp"
#include "echelon/network.hpp"
#include "echelon/ppo.hpp"
#include "echelon/simulator.hpp"

namespace echelon::marl {

/// Training schemes: independent learners (ippo), one parameter-shared
/// learner with agent-id inputs (ippo_shared), independent actors with
/// per-agent centralized critics (mappo), and a single agent controlling
/// every node at once (centralized).
enum class Scheme { ippo, ippo_shared, mappo, centralized };

Scheme scheme_from_string(const std::string& s);
std::string to_string(Scheme s);

struct AgentScheme {
  Scheme kind = Scheme::ippo;
  sim::RewardMode reward_mode = sim::RewardMode::shared;
  sim::ObservationSpec obs_spec;

  /// Published per-scheme observation defaults: base + previous demand +
  /// incoming shipments for the independent learners, every block for the
  /// joint-action learner, base + histories for the centralized agent.
  static AgentScheme defaults_for(Scheme kind, const network::NetworkTopology& topo,
                                  int history_length = 1);
};

constexpr uint64_t kDefaultEvalSeed = 0x45C4E11ULL;

/// Every trainable parameter set plus the scheme metadata needed to run it.
struct PolicyBundle {
  AgentScheme scheme;
  ppo::PpoHyperparams hp;
  int node_count = 0;
  std::vector<int> obs_dims;     // actor input size per agent slot
  std::vector<int> critic_dims;  // critic input size per agent slot
  std::vector<ppo::ActorCritic> sets;
  uint64_t config_hash = 0;

  int agent_count() const;                    // env-facing agents (M, or 1 when centralized)
  int param_set_for(int agent_index) const;   // shared schemes map everyone to set 0
  int action_dim() const;

  void save(const std::string& path) const;
  static PolicyBundle load(const std::string& path);
};

PolicyBundle initialize_bundle(const AgentScheme& scheme, const network::NetworkTopology& topo,
                               const ppo::PpoHyperparams& hp, uint64_t seed);

struct RolloutResult {
  std::vector<ppo::TrajectoryBatch> batches;  // one per parameter set
  double mean_episode_reward = 0.0;           // SCN total profit per episode
  int episodes = 0;
};

/// Runs whole episodes in lockstep until every agent holds at least
/// `n_transitions` transitions. Episode indices begin at `episode_base` so
/// successive iterations draw fresh randomness.
RolloutResult collect_rollouts(PolicyBundle& bundle, const network::NetworkTopology& topo,
                               const stochastic::UncertaintyConfig& uncertainty, int horizon,
                               int n_transitions, uint64_t seed, uint64_t episode_base);

struct CurveRow {
  int iteration = 0;
  int agent = 0;
  double mean_episode_reward = 0.0;
  double mean_kl = 0.0;
  double beta = 0.0;
  double clip_fraction = 0.0;
  double value_loss = 0.0;
};

struct TrainResult {
  PolicyBundle bundle;
  std::vector<CurveRow> curve;
  bool aborted = false;  // non-finite collapse; bundle holds the last good state
};

TrainResult train(const AgentScheme& scheme, const network::NetworkTopology& topo,
                  const stochastic::UncertaintyConfig& uncertainty,
                  const ppo::PpoHyperparams& hp, int iterations, uint64_t seed,
                  int horizon = 30);

struct EvalOptions {
  int episodes = 200;
  int horizon = 30;
  uint64_t eval_seed = kDefaultEvalSeed;
  int workers = 1;
};

/// Greedy (mean-action) evaluation of a trained bundle.
metrics::MetricsReport evaluate_policy(const PolicyBundle& bundle,
                                       const network::NetworkTopology& topo,
                                       const stochastic::UncertaintyConfig& uncertainty,
                                       const EvalOptions& options);

metrics::MetricsReport evaluate_oracle(const network::NetworkTopology& topo,
                                       const stochastic::UncertaintyConfig& uncertainty,
                                       const EvalOptions& options);

metrics::MetricsReport evaluate_shlp(const network::NetworkTopology& topo,
                                     const stochastic::UncertaintyConfig& uncertainty,
                                     const EvalOptions& options);

struct DshlpConvergenceRow {
  int episode = 0;
  int period = 0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
};

metrics::MetricsReport evaluate_dshlp(const network::NetworkTopology& topo,
                                      const stochastic::UncertaintyConfig& uncertainty,
                                      const EvalOptions& options,
                                      const admm::DshlpConfig& config,
                                      std::vector<DshlpConvergenceRow>* convergence = nullptr);

/// Hash of every demand and lead-time realization the evaluation episodes
/// will consume; methods sharing a cell share this value.
uint64_t evaluation_trace_hash(const network::NetworkTopology& topo,
                               const stochastic::UncertaintyConfig& uncertainty,
                               const EvalOptions& options);

/// Builds one agent's centralized-critic input: own observation, the other
/// agents' observations in ascending node order, then every agent's executed
/// action in ascending node order.
std::vector<double> mappo_critic_input(const std::vector<std::vector<double>>& all_obs,
                                       const std::vector<double>& executed_actions, int agent);

}  // namespace echelon::marl
