#pragma once

#include <vector>

#include "echelon/neural.hpp"
#include "echelon/rng.hpp"

namespace echelon::ppo {

using nn::Matrix;
using nn::Vector;

struct PpoHyperparams {
  int batch_size = 3000;      // |D|, transitions per agent per iteration
  int minibatch_size = 180;
  int epochs = 14;
  double clip_epsilon = 0.21;
  double discount = 0.99;       // gamma
  double gae_lambda = 0.95;
  double kl_coef_init = 0.19;   // beta
  double kl_target = 0.006;     // d_targ
  double learning_rate = 1e-5;  // alpha
  int fc1 = 128;
  int fc2 = 128;
  int history_length = 1;  // N, observation history
  bool normalize_advantages = true;

  /// Published defaults per scheme.
  static PpoHyperparams ippo();
  static PpoHyperparams mappo();
  static PpoHyperparams centralized();

  std::vector<std::string> validate() const;
};

/// Flat per-agent rollout storage; columns are transitions.
struct TrajectoryBatch {
  Matrix observations;       // obs_dim x n (actor input)
  Matrix critic_inputs;      // critic_dim x n
  Matrix actions;            // act_dim x n, pre-clip samples
  Matrix behavior_means;     // act_dim x n
  Vector behavior_log_std;   // act_dim, behavior-policy snapshot
  Vector behavior_log_probs; // n
  Vector rewards;            // n
  Vector values;             // n, V at collection time
  Vector advantages;         // n, GAE (normalized copies are made on update)
  Vector returns;            // n, discounted rewards-to-go
  std::vector<int> episode_starts;

  int size() const { return static_cast<int>(rewards.size()); }
};

/// Backward-recursive generalized advantage estimate for one episode.
/// `values` holds V(s_0..s_{T-1}); the terminal bootstrap V(s_T) is zero.
Vector compute_gae(const Vector& rewards, const Vector& values, double discount, double lambda);

/// Discounted reward-to-go R_t = sum_k gamma^{k-t} r_k within one episode.
Vector rewards_to_go(const Vector& rewards, double discount);

/// Penalty coefficient adaptation: halve below two thirds of the target,
/// double above 1.5x the target, else unchanged.
double adapt_kl(double beta, double observed_kl, double target_kl);

/// One agent's trainable bundle.
struct ActorCritic {
  nn::Mlp actor;                 // tanh output = action mean
  nn::GaussianPolicyHead head;   // free log-std
  nn::Mlp critic;                // linear scalar output
  nn::AdamState actor_opt;
  nn::AdamState critic_opt;
  double kl_coef = 0.19;         // beta, adapted once per update

  static ActorCritic make(int obs_dim, int critic_dim, int action_dim,
                          const PpoHyperparams& hp, RngStream& init);
};

struct SurrogateEval {
  double objective = 0.0;      // clip objective minus beta * KL, mean over batch
  double mean_kl = 0.0;
  double clip_fraction = 0.0;  // fraction of ratios outside the clip band
};

/// Evaluates the combined surrogate at the current actor parameters against
/// the stored behavior policy, without touching gradients.
SurrogateEval evaluate_surrogate(const nn::Mlp& actor, const nn::GaussianPolicyHead& head,
                                 const TrajectoryBatch& batch, const Vector& advantages,
                                 double clip_epsilon, double beta);

struct UpdateDiagnostics {
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  double value_loss = 0.0;
  double policy_objective = 0.0;
  double beta_after = 0.0;
  bool aborted = false;  // non-finite loss; parameters restored
};

/// One PPO improvement step: `epochs` passes of shuffled minibatches, Adam
/// ascent on the clipped-plus-KL-penalty objective and descent on the value
/// MSE, then a single beta adaptation from the post-loop mean KL.
UpdateDiagnostics update(ActorCritic& agent, const TrajectoryBatch& batch,
                         const PpoHyperparams& hp, RngStream& shuffle);

}  // namespace echelon::ppo
