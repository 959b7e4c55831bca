#include "echelon/marl.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "echelon/mathprog.hpp"
#include "echelon/parallel.hpp"

namespace echelon::marl {

using nn::Matrix;
using nn::Vector;

Scheme scheme_from_string(const std::string& s) {
  if (s == "ippo") return Scheme::ippo;
  if (s == "ippo_shared") return Scheme::ippo_shared;
  if (s == "mappo") return Scheme::mappo;
  if (s == "centralized") return Scheme::centralized;
  throw std::invalid_argument("unknown scheme '" + s +
                              "' (expected ippo|ippo_shared|mappo|centralized)");
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::ippo: return "ippo";
    case Scheme::ippo_shared: return "ippo_shared";
    case Scheme::mappo: return "mappo";
    case Scheme::centralized: return "centralized";
  }
  return "?";
}

AgentScheme AgentScheme::defaults_for(Scheme kind, const network::NetworkTopology& topo,
                                      int history_length) {
  AgentScheme scheme;
  scheme.kind = kind;
  switch (kind) {
    case Scheme::ippo:
      scheme.obs_spec = sim::ObservationSpec::from_config(6, history_length);
      break;
    case Scheme::ippo_shared:
      scheme.obs_spec = sim::ObservationSpec::from_config(6, history_length);
      // one network serves every node: equalize input lengths and tag agents
      scheme.obs_spec.shipment_slots_override = topo.max_lead_time();
      scheme.obs_spec.append_agent_one_hot = true;
      break;
    case Scheme::mappo:
      scheme.obs_spec = sim::ObservationSpec::from_config(5, history_length);
      break;
    case Scheme::centralized:
      scheme.obs_spec = sim::ObservationSpec::from_config(3, history_length);
      break;
  }
  return scheme;
}

int PolicyBundle::agent_count() const {
  return scheme.kind == Scheme::centralized ? 1 : node_count;
}

int PolicyBundle::param_set_for(int agent_index) const {
  if (scheme.kind == Scheme::ippo_shared || scheme.kind == Scheme::centralized) return 0;
  return agent_index;
}

int PolicyBundle::action_dim() const {
  return scheme.kind == Scheme::centralized ? node_count : 1;
}

std::vector<double> mappo_critic_input(const std::vector<std::vector<double>>& all_obs,
                                       const std::vector<double>& executed_actions, int agent) {
  std::vector<double> input = all_obs[static_cast<size_t>(agent)];
  for (size_t k = 0; k < all_obs.size(); ++k) {
    if (static_cast<int>(k) == agent) continue;
    input.insert(input.end(), all_obs[k].begin(), all_obs[k].end());
  }
  input.insert(input.end(), executed_actions.begin(), executed_actions.end());
  return input;
}

PolicyBundle initialize_bundle(const AgentScheme& scheme, const network::NetworkTopology& topo,
                               const ppo::PpoHyperparams& hp, uint64_t seed) {
  PolicyBundle bundle;
  bundle.scheme = scheme;
  bundle.hp = hp;
  bundle.node_count = topo.node_count();
  const int m = topo.node_count();

  std::vector<int> node_obs(static_cast<size_t>(m));
  int obs_total = 0;
  for (int id = 1; id <= m; ++id) {
    node_obs[static_cast<size_t>(id - 1)] =
        scheme.obs_spec.observation_size(topo.node(id).lead_time, m);
    obs_total += node_obs[static_cast<size_t>(id - 1)];
  }

  switch (scheme.kind) {
    case Scheme::ippo:
      bundle.obs_dims = node_obs;
      bundle.critic_dims = node_obs;
      break;
    case Scheme::ippo_shared:
      bundle.obs_dims = node_obs;  // homogeneous by construction
      bundle.critic_dims = node_obs;
      break;
    case Scheme::mappo:
      bundle.obs_dims = node_obs;
      bundle.critic_dims.assign(static_cast<size_t>(m), obs_total + m);
      break;
    case Scheme::centralized:
      bundle.obs_dims = {obs_total};
      bundle.critic_dims = {obs_total};
      break;
  }

  const int n_sets =
      (scheme.kind == Scheme::ippo_shared || scheme.kind == Scheme::centralized) ? 1 : m;
  const int act_dim = bundle.action_dim();
  for (int s = 0; s < n_sets; ++s) {
    RngStream init(seed, 0, static_cast<uint64_t>(s), stream_purpose::init(0));
    bundle.sets.push_back(ppo::ActorCritic::make(bundle.obs_dims[static_cast<size_t>(
                                                     scheme.kind == Scheme::centralized ? 0 : s)],
                                                 bundle.critic_dims[static_cast<size_t>(
                                                     scheme.kind == Scheme::centralized ? 0 : s)],
                                                 act_dim, hp, init));
  }
  return bundle;
}

namespace {

/// Lockstep rollout engine: E parallel episodes advance one period at a
/// time so policy forwards batch across episodes.
struct LockstepCollector {
  PolicyBundle& bundle;
  const network::NetworkTopology& topo;
  int horizon;
  int episodes;
  uint64_t seed;
  uint64_t episode_base;
  bool sample_actions;  // false = deterministic mean (evaluation)

  std::vector<sim::Environment> envs;
  std::vector<std::vector<std::vector<double>>> obs;  // per env, per agent

  // collected per agent slot: episode-major storage
  struct AgentStore {
    std::vector<Matrix> obs_cols, critic_cols, action_cols, mean_cols;
    std::vector<std::vector<double>> log_probs, rewards;
  };
  std::vector<AgentStore> stores;
  std::vector<double> episode_reward;                  // SCN total profit
  std::vector<double> episode_inventory, episode_backlog;
  std::vector<std::vector<double>> episode_profit_by_t;

  LockstepCollector(PolicyBundle& b, const network::NetworkTopology& t,
                    const stochastic::UncertaintyConfig& u, int hor, int eps, uint64_t sd,
                    uint64_t ep_base, bool sample)
      : bundle(b), topo(t), horizon(hor), episodes(eps), seed(sd), episode_base(ep_base),
        sample_actions(sample) {
    envs.reserve(static_cast<size_t>(episodes));
    for (int e = 0; e < episodes; ++e) {
      envs.emplace_back(topo, u, bundle.scheme.obs_spec, horizon, bundle.scheme.reward_mode);
      obs.push_back(envs.back().reset(seed, episode_base + static_cast<uint64_t>(e)));
    }
    const int agents = bundle.agent_count();
    stores.resize(static_cast<size_t>(agents));
    for (int a = 0; a < agents; ++a) {
      auto& st = stores[static_cast<size_t>(a)];
      st.obs_cols.assign(static_cast<size_t>(episodes),
                         Matrix(bundle.obs_dims[static_cast<size_t>(a)], horizon));
      st.critic_cols.assign(static_cast<size_t>(episodes),
                            Matrix(bundle.critic_dims[static_cast<size_t>(a)], horizon));
      st.action_cols.assign(static_cast<size_t>(episodes),
                            Matrix(bundle.action_dim(), horizon));
      st.mean_cols = st.action_cols;
      st.log_probs.assign(static_cast<size_t>(episodes), std::vector<double>(horizon, 0.0));
      st.rewards = st.log_probs;
    }
    episode_reward.assign(static_cast<size_t>(episodes), 0.0);
    episode_inventory.assign(static_cast<size_t>(episodes), 0.0);
    episode_backlog.assign(static_cast<size_t>(episodes), 0.0);
    episode_profit_by_t.assign(static_cast<size_t>(episodes),
                               std::vector<double>(static_cast<size_t>(horizon), 0.0));
  }

  std::vector<double> agent_observation(int env_idx, int agent) const {
    if (bundle.scheme.kind == Scheme::centralized) {
      std::vector<double> joint;
      for (const auto& o : obs[static_cast<size_t>(env_idx)])
        joint.insert(joint.end(), o.begin(), o.end());
      return joint;
    }
    return obs[static_cast<size_t>(env_idx)][static_cast<size_t>(agent)];
  }

  void run() {
    const int agents = bundle.agent_count();
    const int act_dim = bundle.action_dim();
    std::vector<RngStream> action_streams;
    if (sample_actions) {
      action_streams.reserve(static_cast<size_t>(agents) * episodes);
      for (int a = 0; a < agents; ++a)
        for (int e = 0; e < episodes; ++e)
          action_streams.emplace_back(seed, episode_base + static_cast<uint64_t>(e),
                                      static_cast<uint64_t>(a), stream_purpose::action());
    }

    for (int t = 0; t < horizon; ++t) {
      // batched policy forward per agent
      std::vector<Matrix> means(static_cast<size_t>(agents));
      std::vector<Matrix> obs_batch(static_cast<size_t>(agents));
      for (int a = 0; a < agents; ++a) {
        Matrix batch(bundle.obs_dims[static_cast<size_t>(a)], episodes);
        for (int e = 0; e < episodes; ++e) {
          auto v = agent_observation(e, a);
          batch.col(e) = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
        }
        obs_batch[static_cast<size_t>(a)] = batch;
        means[static_cast<size_t>(a)] =
            bundle.sets[static_cast<size_t>(bundle.param_set_for(a))].actor.forward(batch);
      }

      // sample (or copy) actions, build executed joint actions per env
      std::vector<Matrix> preclip(static_cast<size_t>(agents));
      std::vector<std::vector<double>> executed(static_cast<size_t>(episodes),
                                                std::vector<double>(topo.node_count()));
      for (int a = 0; a < agents; ++a) {
        auto& set = bundle.sets[static_cast<size_t>(bundle.param_set_for(a))];
        preclip[static_cast<size_t>(a)] = means[static_cast<size_t>(a)];
        for (int e = 0; e < episodes; ++e) {
          if (sample_actions) {
            auto& stream = action_streams[static_cast<size_t>(a) * episodes + e];
            Vector s = set.head.sample(means[static_cast<size_t>(a)].col(e), stream);
            preclip[static_cast<size_t>(a)].col(e) = s;
          }
          for (int d = 0; d < act_dim; ++d) {
            const double clipped =
                std::clamp(preclip[static_cast<size_t>(a)](d, e), -1.0, 1.0);
            const int node_slot = (bundle.scheme.kind == Scheme::centralized) ? d : a;
            executed[static_cast<size_t>(e)][static_cast<size_t>(node_slot)] = clipped;
          }
        }
      }

      // advance every environment
      std::vector<sim::StepResult> results;
      results.reserve(static_cast<size_t>(episodes));
      for (int e = 0; e < episodes; ++e)
        results.push_back(envs[static_cast<size_t>(e)].step(executed[static_cast<size_t>(e)]));

      // store transitions
      for (int a = 0; a < agents; ++a) {
        auto& st = stores[static_cast<size_t>(a)];
        auto& set = bundle.sets[static_cast<size_t>(bundle.param_set_for(a))];
        for (int e = 0; e < episodes; ++e) {
          st.obs_cols[static_cast<size_t>(e)].col(t) = obs_batch[static_cast<size_t>(a)].col(e);
          st.action_cols[static_cast<size_t>(e)].col(t) =
              preclip[static_cast<size_t>(a)].col(e);
          st.mean_cols[static_cast<size_t>(e)].col(t) = means[static_cast<size_t>(a)].col(e);
          st.log_probs[static_cast<size_t>(e)][static_cast<size_t>(t)] =
              set.head.log_prob(means[static_cast<size_t>(a)].col(e),
                                preclip[static_cast<size_t>(a)].col(e));
          const double reward = (bundle.scheme.kind == Scheme::centralized)
                                    ? results[static_cast<size_t>(e)].rewards[0]
                                    : results[static_cast<size_t>(e)].rewards[static_cast<size_t>(a)];
          st.rewards[static_cast<size_t>(e)][static_cast<size_t>(t)] = reward;
          // critic input
          if (bundle.scheme.kind == Scheme::mappo) {
            auto ci = mappo_critic_input(obs[static_cast<size_t>(e)],
                                         executed[static_cast<size_t>(e)], a);
            st.critic_cols[static_cast<size_t>(e)].col(t) =
                Eigen::Map<const Vector>(ci.data(), static_cast<Eigen::Index>(ci.size()));
          } else {
            st.critic_cols[static_cast<size_t>(e)].col(t) =
                st.obs_cols[static_cast<size_t>(e)].col(t);
          }
        }
      }

      // metrics and next observations
      for (int e = 0; e < episodes; ++e) {
        const auto& res = results[static_cast<size_t>(e)];
        episode_reward[static_cast<size_t>(e)] += res.scn_profit;
        episode_profit_by_t[static_cast<size_t>(e)][static_cast<size_t>(t)] = res.scn_profit;
        double inv = 0, back = 0;
        for (const auto& ns : envs[static_cast<size_t>(e)].state().nodes) {
          inv += ns.on_hand;
          back += ns.total_backlog();
        }
        episode_inventory[static_cast<size_t>(e)] += inv / horizon;
        episode_backlog[static_cast<size_t>(e)] += back / horizon;
        obs[static_cast<size_t>(e)] = res.observations;
      }
    }
  }

  /// Assemble per-agent batches (episode-major), with values, advantages
  /// and returns filled in.
  std::vector<ppo::TrajectoryBatch> batches(const ppo::PpoHyperparams& hp) const {
    const int agents = bundle.agent_count();
    std::vector<ppo::TrajectoryBatch> out(static_cast<size_t>(agents));
    const int n = episodes * horizon;
    for (int a = 0; a < agents; ++a) {
      const auto& st = stores[static_cast<size_t>(a)];
      auto& batch = out[static_cast<size_t>(a)];
      batch.observations.resize(bundle.obs_dims[static_cast<size_t>(a)], n);
      batch.critic_inputs.resize(bundle.critic_dims[static_cast<size_t>(a)], n);
      batch.actions.resize(bundle.action_dim(), n);
      batch.behavior_means.resize(bundle.action_dim(), n);
      batch.behavior_log_probs.resize(n);
      batch.rewards.resize(n);
      for (int e = 0; e < episodes; ++e) {
        const int off = e * horizon;
        batch.episode_starts.push_back(off);
        batch.observations.middleCols(off, horizon) = st.obs_cols[static_cast<size_t>(e)];
        batch.critic_inputs.middleCols(off, horizon) = st.critic_cols[static_cast<size_t>(e)];
        batch.actions.middleCols(off, horizon) = st.action_cols[static_cast<size_t>(e)];
        batch.behavior_means.middleCols(off, horizon) = st.mean_cols[static_cast<size_t>(e)];
        for (int t = 0; t < horizon; ++t) {
          batch.behavior_log_probs[off + t] =
              st.log_probs[static_cast<size_t>(e)][static_cast<size_t>(t)];
          batch.rewards[off + t] = st.rewards[static_cast<size_t>(e)][static_cast<size_t>(t)];
        }
      }
      const auto& set = bundle.sets[static_cast<size_t>(bundle.param_set_for(a))];
      batch.behavior_log_std = set.head.log_std;
      Matrix v = set.critic.forward(batch.critic_inputs);
      batch.values = v.transpose().col(0);
      batch.advantages.resize(n);
      batch.returns.resize(n);
      for (int e = 0; e < episodes; ++e) {
        const int off = e * horizon;
        Vector r = batch.rewards.segment(off, horizon);
        Vector vals = batch.values.segment(off, horizon);
        batch.advantages.segment(off, horizon) =
            ppo::compute_gae(r, vals, hp.discount, hp.gae_lambda);
        batch.returns.segment(off, horizon) = ppo::rewards_to_go(r, hp.discount);
      }
    }
    return out;
  }
};

ppo::TrajectoryBatch pool_batches(const std::vector<ppo::TrajectoryBatch>& parts) {
  ppo::TrajectoryBatch pooled;
  int n = 0;
  for (const auto& p : parts) n += p.size();
  const auto& first = parts.front();
  pooled.observations.resize(first.observations.rows(), n);
  pooled.critic_inputs.resize(first.critic_inputs.rows(), n);
  pooled.actions.resize(first.actions.rows(), n);
  pooled.behavior_means.resize(first.behavior_means.rows(), n);
  pooled.behavior_log_std = first.behavior_log_std;
  pooled.behavior_log_probs.resize(n);
  pooled.rewards.resize(n);
  pooled.values.resize(n);
  pooled.advantages.resize(n);
  pooled.returns.resize(n);
  int off = 0;
  for (const auto& p : parts) {
    const int k = p.size();
    for (int s : p.episode_starts) pooled.episode_starts.push_back(off + s);
    pooled.observations.middleCols(off, k) = p.observations;
    pooled.critic_inputs.middleCols(off, k) = p.critic_inputs;
    pooled.actions.middleCols(off, k) = p.actions;
    pooled.behavior_means.middleCols(off, k) = p.behavior_means;
    pooled.behavior_log_probs.segment(off, k) = p.behavior_log_probs;
    pooled.rewards.segment(off, k) = p.rewards;
    pooled.values.segment(off, k) = p.values;
    pooled.advantages.segment(off, k) = p.advantages;
    pooled.returns.segment(off, k) = p.returns;
    off += k;
  }
  return pooled;
}

}  // namespace

RolloutResult collect_rollouts(PolicyBundle& bundle, const network::NetworkTopology& topo,
                               const stochastic::UncertaintyConfig& uncertainty, int horizon,
                               int n_transitions, uint64_t seed, uint64_t episode_base) {
  const int episodes = (n_transitions + horizon - 1) / horizon;
  LockstepCollector collector(bundle, topo, uncertainty, horizon, episodes, seed, episode_base,
                              /*sample=*/true);
  collector.run();
  RolloutResult result;
  result.batches = collector.batches(bundle.hp);
  result.episodes = episodes;
  result.mean_episode_reward =
      std::accumulate(collector.episode_reward.begin(), collector.episode_reward.end(), 0.0) /
      episodes;
  return result;
}

TrainResult train(const AgentScheme& scheme, const network::NetworkTopology& topo,
                  const stochastic::UncertaintyConfig& uncertainty,
                  const ppo::PpoHyperparams& hp, int iterations, uint64_t seed, int horizon) {
  auto hp_errors = hp.validate();
  if (!hp_errors.empty())
    throw std::invalid_argument("train: " + hp_errors.front());
  TrainResult result;
  result.bundle = initialize_bundle(scheme, topo, hp, seed);
  PolicyBundle& bundle = result.bundle;

  uint64_t episode_base = 0;
  for (int it = 0; it < iterations; ++it) {
    auto rollout =
        collect_rollouts(bundle, topo, uncertainty, horizon, hp.batch_size, seed, episode_base);
    episode_base += static_cast<uint64_t>(rollout.episodes);

    std::vector<ppo::UpdateDiagnostics> diags;
    if (bundle.sets.size() == 1) {
      ppo::TrajectoryBatch batch = (rollout.batches.size() == 1)
                                       ? std::move(rollout.batches.front())
                                       : pool_batches(rollout.batches);
      RngStream shuffle(seed, static_cast<uint64_t>(it), 0, stream_purpose::shuffle(0));
      diags.push_back(ppo::update(bundle.sets[0], batch, hp, shuffle));
    } else {
      diags.resize(bundle.sets.size());
      const int workers = std::min(worker_budget(), static_cast<int>(bundle.sets.size()));
      parallel_for(static_cast<int>(bundle.sets.size()), workers, [&](int a) {
        RngStream shuffle(seed, static_cast<uint64_t>(it), static_cast<uint64_t>(a),
                          stream_purpose::shuffle(0));
        diags[static_cast<size_t>(a)] = ppo::update(
            bundle.sets[static_cast<size_t>(a)], rollout.batches[static_cast<size_t>(a)], hp,
            shuffle);
      });
    }

    bool aborted = false;
    for (size_t a = 0; a < diags.size(); ++a) {
      result.curve.push_back(CurveRow{it, static_cast<int>(a), rollout.mean_episode_reward,
                                      diags[a].mean_kl, diags[a].beta_after,
                                      diags[a].clip_fraction, diags[a].value_loss});
      aborted |= diags[a].aborted;
    }
    if (aborted) {
      // keep the last finite parameters and stop training
      result.aborted = true;
      break;
    }
  }
  return result;
}

namespace {

metrics::MetricsReport report_from_collector(const LockstepCollector& collector,
                                             const std::string& method) {
  metrics::MetricsReport report;
  report.method = method;
  const int episodes = collector.episodes;
  const int horizon = collector.horizon;
  report.cumulative_profit.assign(static_cast<size_t>(horizon), 0.0);
  for (int e = 0; e < episodes; ++e) {
    metrics::EpisodeRow row;
    row.episode = e;
    row.reward = collector.episode_reward[static_cast<size_t>(e)];
    row.mean_inventory = collector.episode_inventory[static_cast<size_t>(e)];
    row.mean_backlog = collector.episode_backlog[static_cast<size_t>(e)];
    report.episodes.push_back(row);
    double cum = 0;
    for (int t = 0; t < horizon; ++t) {
      cum += collector.episode_profit_by_t[static_cast<size_t>(e)][static_cast<size_t>(t)];
      report.cumulative_profit[static_cast<size_t>(t)] += cum / episodes;
    }
  }
  report.finalize();
  return report;
}

}  // namespace

metrics::MetricsReport evaluate_policy(const PolicyBundle& bundle,
                                       const network::NetworkTopology& topo,
                                       const stochastic::UncertaintyConfig& uncertainty,
                                       const EvalOptions& options) {
  PolicyBundle copy = bundle;  // collector takes a mutable reference; evaluation is pure
  LockstepCollector collector(copy, topo, uncertainty, options.horizon, options.episodes,
                              options.eval_seed, 0, /*sample=*/false);
  collector.run();
  auto report = report_from_collector(collector, to_string(bundle.scheme.kind));
  report.trace_hash = evaluation_trace_hash(topo, uncertainty, options);
  return report;
}

namespace {

template <typename StepFn, typename ResetFn>
metrics::MetricsReport evaluate_with_orders(const network::NetworkTopology& topo,
                                            const stochastic::UncertaintyConfig& uncertainty,
                                            const EvalOptions& options,
                                            const std::string& method, ResetFn&& on_episode,
                                            StepFn&& order_fn) {
  metrics::MetricsReport report;
  report.method = method;
  report.episodes.resize(static_cast<size_t>(options.episodes));
  std::vector<std::vector<double>> profit_traces(static_cast<size_t>(options.episodes));
  parallel_for(options.episodes, options.workers, [&](int e) {
    sim::Environment env(topo, uncertainty, sim::ObservationSpec::from_config(1, 1),
                         options.horizon);
    env.reset(options.eval_seed, static_cast<uint64_t>(e));
    auto context = on_episode(e);
    double reward = 0, inv = 0, back = 0;
    auto& trace = profit_traces[static_cast<size_t>(e)];
    for (int t = 0; t < options.horizon; ++t) {
      auto orders = order_fn(env, context, e, t);
      auto res = env.step_orders(orders);
      reward += res.scn_profit;
      trace.push_back(res.scn_profit);
      for (const auto& ns : env.state().nodes) {
        inv += ns.on_hand;
        back += ns.total_backlog();
      }
    }
    auto& row = report.episodes[static_cast<size_t>(e)];
    row.episode = e;
    row.reward = reward;
    row.mean_inventory = inv / options.horizon;
    row.mean_backlog = back / options.horizon;
  });
  report.cumulative_profit.assign(static_cast<size_t>(options.horizon), 0.0);
  for (const auto& trace : profit_traces) {
    double cum = 0;
    for (size_t t = 0; t < trace.size(); ++t) {
      cum += trace[t];
      report.cumulative_profit[t] += cum / options.episodes;
    }
  }
  report.finalize();
  report.trace_hash = evaluation_trace_hash(topo, uncertainty, options);
  return report;
}

}  // namespace

metrics::MetricsReport evaluate_oracle(const network::NetworkTopology& topo,
                                       const stochastic::UncertaintyConfig& uncertainty,
                                       const EvalOptions& options) {
  metrics::MetricsReport report;
  report.method = "oracle";
  report.episodes.resize(static_cast<size_t>(options.episodes));
  std::vector<std::vector<double>> traces(static_cast<size_t>(options.episodes));
  parallel_for(options.episodes, options.workers, [&](int e) {
    auto result = lp::oracle_run(topo, uncertainty, options.eval_seed,
                                 static_cast<uint64_t>(e), options.horizon);
    auto& row = report.episodes[static_cast<size_t>(e)];
    row.episode = e;
    row.reward = result.realized_profit;
    row.mean_inventory = result.mean_inventory;
    row.mean_backlog = result.mean_backlog;
    traces[static_cast<size_t>(e)] = result.period_profit;
  });
  report.cumulative_profit.assign(static_cast<size_t>(options.horizon), 0.0);
  for (const auto& trace : traces) {
    double cum = 0;
    for (size_t t = 0; t < trace.size(); ++t) {
      cum += trace[t];
      report.cumulative_profit[t] += cum / options.episodes;
    }
  }
  report.finalize();
  report.oracle_ratio = 1.0;
  report.trace_hash = evaluation_trace_hash(topo, uncertainty, options);
  return report;
}

metrics::MetricsReport evaluate_shlp(const network::NetworkTopology& topo,
                                     const stochastic::UncertaintyConfig& uncertainty,
                                     const EvalOptions& options) {
  return evaluate_with_orders(
      topo, uncertainty, options, "shlp", [](int) { return 0; },
      [&](sim::Environment& env, int, int, int) { return lp::shlp_orders(env, options.horizon); });
}

metrics::MetricsReport evaluate_dshlp(const network::NetworkTopology& topo,
                                      const stochastic::UncertaintyConfig& uncertainty,
                                      const EvalOptions& options,
                                      const admm::DshlpConfig& config,
                                      std::vector<DshlpConvergenceRow>* convergence) {
  std::vector<std::vector<DshlpConvergenceRow>> logs(static_cast<size_t>(options.episodes));
  auto report = evaluate_with_orders(
      topo, uncertainty, options, "dshlp",
      [&](int) { return std::make_shared<admm::DshlpPolicy>(options.horizon, config); },
      [&](sim::Environment& env, std::shared_ptr<admm::DshlpPolicy>& policy, int e, int t) {
        auto orders = policy->act(env);
        const auto& stats = policy->step_stats().back();
        logs[static_cast<size_t>(e)].push_back(DshlpConvergenceRow{
            e, t, stats.iterations, stats.primal_residual, stats.dual_residual,
            stats.converged});
        return orders;
      });
  if (convergence) {
    for (auto& log : logs)
      convergence->insert(convergence->end(), log.begin(), log.end());
  }
  return report;
}

uint64_t evaluation_trace_hash(const network::NetworkTopology& topo,
                               const stochastic::UncertaintyConfig& uncertainty,
                               const EvalOptions& options) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](int64_t v) { h = fnv1a(&v, sizeof(v), h); };
  mix(static_cast<int64_t>(options.eval_seed));
  mix(options.episodes);
  mix(options.horizon);
  for (int e = 0; e < options.episodes; ++e) {
    for (int r : topo.retailers)
      for (int t = 0; t < options.horizon; ++t)
        mix(stochastic::demand_at(uncertainty, options.eval_seed, static_cast<uint64_t>(e), r,
                                  t));
    for (int id = 1; id <= topo.node_count(); ++id)
      for (int t = 0; t < options.horizon; ++t)
        mix(stochastic::lead_time_at(uncertainty, topo.node(id).lead_time, options.eval_seed,
                                     static_cast<uint64_t>(e), id, t));
  }
  return h;
}

// ---------------------------------------------------------------------------
// checkpoint serialization: little-endian tagged binary, bit-exact doubles
// ---------------------------------------------------------------------------

namespace {

constexpr uint32_t kMagic = 0x4543484Bu;  // "ECHK"
constexpr uint32_t kVersion = 1;

void put_u32(std::ofstream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ofstream& out, uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void put_i32(std::ofstream& out, int32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_f64(std::ofstream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}
uint32_t get_u32(std::ifstream& in) {
  uint32_t v;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint64_t get_u64(std::ifstream& in) {
  uint64_t v;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
int32_t get_i32(std::ifstream& in) {
  int32_t v;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
double get_f64(std::ifstream& in) {
  uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void put_matrix(std::ofstream& out, const Matrix& m) {
  put_i32(out, static_cast<int32_t>(m.rows()));
  put_i32(out, static_cast<int32_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) put_f64(out, m(r, c));
}

Matrix get_matrix(std::ifstream& in) {
  const int rows = get_i32(in), cols = get_i32(in);
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = get_f64(in);
  return m;
}

void put_vector(std::ofstream& out, const Vector& v) {
  put_i32(out, static_cast<int32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}

Vector get_vector(std::ifstream& in) {
  const int n = get_i32(in);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = get_f64(in);
  return v;
}

void put_mlp(std::ofstream& out, const nn::Mlp& net) {
  put_i32(out, static_cast<int32_t>(net.sizes().size()));
  for (int s : net.sizes()) put_i32(out, s);
  put_i32(out, net.tanh_output() ? 1 : 0);
  for (const auto& l : net.layers()) {
    put_matrix(out, l.weight);
    put_vector(out, l.bias);
  }
}

nn::Mlp get_mlp(std::ifstream& in) {
  const int n_sizes = get_i32(in);
  std::vector<int> sizes(static_cast<size_t>(n_sizes));
  for (auto& s : sizes) s = get_i32(in);
  const bool tanh_out = get_i32(in) != 0;
  RngStream dummy(0, 0, 0, 0);
  nn::Mlp net(sizes, tanh_out, dummy);
  for (auto& l : net.layers()) {
    l.weight = get_matrix(in);
    l.bias = get_vector(in);
  }
  return net;
}

void put_adam(std::ofstream& out, const nn::AdamState& opt) {
  put_f64(out, opt.learning_rate);
  put_u64(out, static_cast<uint64_t>(opt.step_count));
  put_u64(out, static_cast<uint64_t>(opt.vec_step_count));
  put_i32(out, static_cast<int32_t>(opt.m.size()));
  for (size_t l = 0; l < opt.m.size(); ++l) {
    put_matrix(out, opt.m[l].weight);
    put_vector(out, opt.m[l].bias);
    put_matrix(out, opt.v[l].weight);
    put_vector(out, opt.v[l].bias);
  }
  put_vector(out, opt.vec_m.size() ? opt.vec_m : Vector::Zero(0));
  put_vector(out, opt.vec_v.size() ? opt.vec_v : Vector::Zero(0));
}

void get_adam(std::ifstream& in, nn::AdamState& opt) {
  opt.learning_rate = get_f64(in);
  opt.step_count = static_cast<long>(get_u64(in));
  opt.vec_step_count = static_cast<long>(get_u64(in));
  const int n_layers = get_i32(in);
  opt.m.resize(static_cast<size_t>(n_layers));
  opt.v.resize(static_cast<size_t>(n_layers));
  for (int l = 0; l < n_layers; ++l) {
    opt.m[static_cast<size_t>(l)].weight = get_matrix(in);
    opt.m[static_cast<size_t>(l)].bias = get_vector(in);
    opt.v[static_cast<size_t>(l)].weight = get_matrix(in);
    opt.v[static_cast<size_t>(l)].bias = get_vector(in);
  }
  opt.vec_m = get_vector(in);
  opt.vec_v = get_vector(in);
}

}  // namespace

void PolicyBundle::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  put_u32(out, kMagic);
  put_u32(out, kVersion);
  put_i32(out, static_cast<int32_t>(scheme.kind));
  put_i32(out, static_cast<int32_t>(scheme.reward_mode));
  put_i32(out, scheme.obs_spec.config_id);
  put_i32(out, scheme.obs_spec.history_length);
  put_i32(out, scheme.obs_spec.append_agent_one_hot ? 1 : 0);
  put_i32(out, scheme.obs_spec.shipment_slots_override);
  put_i32(out, node_count);
  put_f64(out, hp.clip_epsilon);
  put_f64(out, hp.discount);
  put_f64(out, hp.gae_lambda);
  put_f64(out, hp.kl_coef_init);
  put_f64(out, hp.kl_target);
  put_f64(out, hp.learning_rate);
  put_i32(out, hp.batch_size);
  put_i32(out, hp.minibatch_size);
  put_i32(out, hp.epochs);
  put_i32(out, hp.fc1);
  put_i32(out, hp.fc2);
  put_i32(out, hp.history_length);
  put_i32(out, hp.normalize_advantages ? 1 : 0);
  put_i32(out, static_cast<int32_t>(obs_dims.size()));
  for (int d : obs_dims) put_i32(out, d);
  for (int d : critic_dims) put_i32(out, d);
  put_u64(out, config_hash);
  put_i32(out, static_cast<int32_t>(sets.size()));
  for (const auto& set : sets) {
    put_mlp(out, set.actor);
    put_vector(out, set.head.log_std);
    put_mlp(out, set.critic);
    put_adam(out, set.actor_opt);
    put_adam(out, set.critic_opt);
    put_f64(out, set.kl_coef);
  }
}

PolicyBundle PolicyBundle::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  if (get_u32(in) != kMagic) throw std::runtime_error("not a checkpoint file: " + path);
  if (get_u32(in) != kVersion) throw std::runtime_error("unsupported checkpoint version");
  PolicyBundle bundle;
  bundle.scheme.kind = static_cast<Scheme>(get_i32(in));
  bundle.scheme.reward_mode = static_cast<sim::RewardMode>(get_i32(in));
  const int config_id = get_i32(in);
  const int history = get_i32(in);
  bundle.scheme.obs_spec = sim::ObservationSpec::from_config(config_id, history);
  bundle.scheme.obs_spec.append_agent_one_hot = get_i32(in) != 0;
  bundle.scheme.obs_spec.shipment_slots_override = get_i32(in);
  bundle.node_count = get_i32(in);
  bundle.hp.clip_epsilon = get_f64(in);
  bundle.hp.discount = get_f64(in);
  bundle.hp.gae_lambda = get_f64(in);
  bundle.hp.kl_coef_init = get_f64(in);
  bundle.hp.kl_target = get_f64(in);
  bundle.hp.learning_rate = get_f64(in);
  bundle.hp.batch_size = get_i32(in);
  bundle.hp.minibatch_size = get_i32(in);
  bundle.hp.epochs = get_i32(in);
  bundle.hp.fc1 = get_i32(in);
  bundle.hp.fc2 = get_i32(in);
  bundle.hp.history_length = get_i32(in);
  bundle.hp.normalize_advantages = get_i32(in) != 0;
  const int n_dims = get_i32(in);
  bundle.obs_dims.resize(static_cast<size_t>(n_dims));
  for (auto& d : bundle.obs_dims) d = get_i32(in);
  bundle.critic_dims.resize(static_cast<size_t>(n_dims));
  for (auto& d : bundle.critic_dims) d = get_i32(in);
  bundle.config_hash = get_u64(in);
  const int n_sets = get_i32(in);
  for (int s = 0; s < n_sets; ++s) {
    ppo::ActorCritic set;
    set.actor = get_mlp(in);
    set.head.log_std = get_vector(in);
    set.critic = get_mlp(in);
    get_adam(in, set.actor_opt);
    get_adam(in, set.critic_opt);
    set.kl_coef = get_f64(in);
    bundle.sets.push_back(std::move(set));
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return bundle;
}

}  // namespace echelon::marl
