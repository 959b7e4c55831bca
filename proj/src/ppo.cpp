#include "echelon/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace echelon::ppo {

PpoHyperparams PpoHyperparams::ippo() {
  PpoHyperparams hp;
  hp.batch_size = 3000;
  hp.minibatch_size = 180;
  hp.epochs = 14;
  hp.clip_epsilon = 0.21;
  hp.discount = 0.99;
  hp.gae_lambda = 0.95;
  hp.kl_coef_init = 0.19;
  hp.kl_target = 0.006;
  hp.learning_rate = 1e-5;
  hp.fc1 = 128;
  hp.fc2 = 128;
  hp.history_length = 1;
  return hp;
}

PpoHyperparams PpoHyperparams::mappo() {
  PpoHyperparams hp;
  hp.batch_size = 4147;
  hp.minibatch_size = 92;
  hp.epochs = 12;
  hp.clip_epsilon = 0.41;
  hp.discount = 0.966;
  hp.gae_lambda = 0.973;
  hp.kl_coef_init = 0.69;
  hp.kl_target = 0.003;
  hp.learning_rate = 1e-5;
  hp.fc1 = 256;
  hp.fc2 = 256;
  hp.history_length = 1;
  return hp;
}

PpoHyperparams PpoHyperparams::centralized() {
  PpoHyperparams hp;
  hp.batch_size = 3000;
  hp.minibatch_size = 225;
  hp.epochs = 10;
  hp.clip_epsilon = 0.22;
  hp.discount = 0.99;
  hp.gae_lambda = 0.95;
  hp.kl_coef_init = 0.37;
  hp.kl_target = 0.0043;
  hp.learning_rate = 1e-5;
  hp.fc1 = 64;
  hp.fc2 = 256;
  hp.history_length = 1;
  return hp;
}

std::vector<std::string> PpoHyperparams::validate() const {
  std::vector<std::string> errors;
  if (!(discount > 0 && discount <= 1)) errors.push_back("discount must lie in (0, 1]");
  if (gae_lambda < 0 || gae_lambda > 1) errors.push_back("gae_lambda must lie in [0, 1]");
  if (!(clip_epsilon > 0)) errors.push_back("clip_epsilon must be > 0");
  if (!(kl_coef_init > 0)) errors.push_back("kl_coef_init must be > 0");
  if (!(kl_target > 0)) errors.push_back("kl_target must be > 0");
  if (!(learning_rate > 0)) errors.push_back("learning_rate must be > 0");
  if (batch_size < 1) errors.push_back("batch_size must be >= 1");
  if (minibatch_size < 1 || minibatch_size > batch_size)
    errors.push_back("minibatch_size must lie in [1, batch_size]");
  if (epochs < 0) errors.push_back("epochs must be >= 0");
  if (fc1 < 1 || fc2 < 1) errors.push_back("hidden sizes must be >= 1");
  if (history_length < 1) errors.push_back("history_length must be >= 1");
  return errors;
}

Vector compute_gae(const Vector& rewards, const Vector& values, double discount, double lambda) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n)
    throw std::invalid_argument("compute_gae: rewards/values length mismatch");
  Vector adv(n);
  double running = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double next_value = (t + 1 < n) ? values[t + 1] : 0.0;
    const double delta = rewards[t] + discount * next_value - values[t];
    running = delta + discount * lambda * running;
    adv[t] = running;
  }
  return adv;
}

Vector rewards_to_go(const Vector& rewards, double discount) {
  Vector out(rewards.size());
  double running = 0.0;
  for (Eigen::Index t = rewards.size() - 1; t >= 0; --t) {
    running = rewards[t] + discount * running;
    out[t] = running;
  }
  return out;
}

double adapt_kl(double beta, double observed_kl, double target_kl) {
  if (observed_kl < target_kl * (2.0 / 3.0)) return beta / 2.0;
  if (observed_kl > target_kl * 1.5) return beta * 2.0;
  return beta;
}

ActorCritic ActorCritic::make(int obs_dim, int critic_dim, int action_dim,
                              const PpoHyperparams& hp, RngStream& init) {
  ActorCritic ac;
  ac.actor = nn::Mlp({obs_dim, hp.fc1, hp.fc2, action_dim}, /*tanh_output=*/true, init, 0.01);
  ac.head = nn::GaussianPolicyHead(action_dim, -0.5);
  ac.critic = nn::Mlp({critic_dim, hp.fc1, hp.fc2, 1}, /*tanh_output=*/false, init, 1.0);
  ac.actor_opt = nn::AdamState(ac.actor, hp.learning_rate);
  ac.critic_opt = nn::AdamState(ac.critic, hp.learning_rate);
  ac.kl_coef = hp.kl_coef_init;
  return ac;
}

namespace {

Matrix gather_cols(const Matrix& src, const std::vector<int>& idx, size_t begin, size_t end) {
  Matrix out(src.rows(), static_cast<Eigen::Index>(end - begin));
  for (size_t k = begin; k < end; ++k)
    out.col(static_cast<Eigen::Index>(k - begin)) = src.col(idx[k]);
  return out;
}

Vector gather(const Vector& src, const std::vector<int>& idx, size_t begin, size_t end) {
  Vector out(static_cast<Eigen::Index>(end - begin));
  for (size_t k = begin; k < end; ++k)
    out[static_cast<Eigen::Index>(k - begin)] = src[idx[k]];
  return out;
}

struct KlTerms {
  Vector per_sample;   // KL(old || new) per column
  Matrix d_mean;       // gradient w.r.t. new means
  Vector d_log_std;    // gradient w.r.t. new log-std, summed over batch
};

KlTerms gaussian_kl_batch(const Matrix& mean_old, const Vector& log_std_old,
                          const Matrix& mean_new, const Vector& log_std_new) {
  const Eigen::Index dims = mean_old.rows(), n = mean_old.cols();
  KlTerms out;
  out.per_sample = Vector::Zero(n);
  out.d_mean = Matrix::Zero(dims, n);
  out.d_log_std = Vector::Zero(dims);
  for (Eigen::Index d = 0; d < dims; ++d) {
    const double var_old = std::exp(2.0 * log_std_old[d]);
    const double var_new = std::exp(2.0 * log_std_new[d]);
    const double base = log_std_new[d] - log_std_old[d] - 0.5;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dm = mean_new(d, i) - mean_old(d, i);
      out.per_sample[i] += base + (var_old + dm * dm) / (2.0 * var_new);
      out.d_mean(d, i) = dm / var_new;
      out.d_log_std[d] += 1.0 - (var_old + dm * dm) / var_new;
    }
  }
  return out;
}

}  // namespace

SurrogateEval evaluate_surrogate(const nn::Mlp& actor, const nn::GaussianPolicyHead& head,
                                 const TrajectoryBatch& batch, const Vector& advantages,
                                 double clip_epsilon, double beta) {
  const Eigen::Index n = batch.rewards.size();
  Matrix means = actor.forward(batch.observations);
  Vector new_lp = head.log_prob_batch(means, batch.actions);
  auto kl = gaussian_kl_batch(batch.behavior_means, batch.behavior_log_std, means, head.log_std);
  SurrogateEval eval;
  double obj = 0.0, clipped = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ratio = std::exp(new_lp[i] - batch.behavior_log_probs[i]);
    const double lo = 1.0 - clip_epsilon, hi = 1.0 + clip_epsilon;
    const double surr1 = ratio * advantages[i];
    const double surr2 = std::clamp(ratio, lo, hi) * advantages[i];
    obj += std::min(surr1, surr2);
    if (ratio < lo || ratio > hi) clipped += 1.0;
  }
  eval.mean_kl = kl.per_sample.mean();
  eval.objective = obj / static_cast<double>(n) - beta * eval.mean_kl;
  eval.clip_fraction = clipped / static_cast<double>(n);
  return eval;
}

UpdateDiagnostics update(ActorCritic& agent, const TrajectoryBatch& batch,
                         const PpoHyperparams& hp, RngStream& shuffle) {
  const int n = batch.size();
  if (n < hp.batch_size)
    throw std::invalid_argument("ppo::update: batch smaller than the configured batch size");

  if (!batch.advantages.allFinite() || !batch.returns.allFinite() ||
      !batch.behavior_log_probs.allFinite() || !batch.observations.allFinite() ||
      !batch.critic_inputs.allFinite()) {
    UpdateDiagnostics bad;
    bad.aborted = true;
    bad.beta_after = agent.kl_coef;
    return bad;
  }

  // Per-batch advantage standardization (can be disabled in the config).
  Vector adv = batch.advantages;
  if (hp.normalize_advantages && n > 1) {
    const double mean = adv.mean();
    const double sd = std::sqrt((adv.array() - mean).square().sum() / n);
    adv = (adv.array() - mean) / (sd > 1e-8 ? sd : 1.0);
  }

  // Snapshot so a non-finite loss can roll everything back.
  const ActorCritic saved = agent;

  UpdateDiagnostics diag;
  diag.beta_after = agent.kl_coef;
  const double beta = agent.kl_coef;

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  try {
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
      for (int k = n - 1; k > 0; --k)
        std::swap(order[static_cast<size_t>(k)],
                  order[shuffle.next_below(static_cast<uint64_t>(k) + 1)]);
      for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(hp.minibatch_size)) {
        const size_t end = std::min(order.size(), begin + static_cast<size_t>(hp.minibatch_size));
        const Eigen::Index mb = static_cast<Eigen::Index>(end - begin);
        Matrix obs = gather_cols(batch.observations, order, begin, end);
        Matrix cobs = gather_cols(batch.critic_inputs, order, begin, end);
        Matrix act = gather_cols(batch.actions, order, begin, end);
        Matrix mean_old = gather_cols(batch.behavior_means, order, begin, end);
        Vector lp_old = gather(batch.behavior_log_probs, order, begin, end);
        Vector adv_mb = gather(adv, order, begin, end);
        Vector ret_mb = gather(batch.returns, order, begin, end);

        // ----- policy ascent -----
        nn::Mlp::Workspace ws;
        Matrix means = agent.actor.forward(obs, ws);
        Vector new_lp = agent.head.log_prob_batch(means, act);
        auto kl = gaussian_kl_batch(mean_old, batch.behavior_log_std, means, agent.head.log_std);

        const Vector inv_var = (-2.0 * agent.head.log_std.array()).exp();
        Matrix z2m1 = Matrix::Zero(means.rows(), mb);  // z^2 - 1 per dim
        Matrix dlp_dmean(means.rows(), mb);
        for (Eigen::Index i = 0; i < mb; ++i) {
          for (Eigen::Index d = 0; d < means.rows(); ++d) {
            const double diff = act(d, i) - means(d, i);
            dlp_dmean(d, i) = diff * inv_var[d];
            z2m1(d, i) = diff * diff * inv_var[d] - 1.0;
          }
        }

        Matrix g_mean = Matrix::Zero(means.rows(), mb);
        Vector g_log_std = Vector::Zero(agent.head.log_std.size());
        const double lo = 1.0 - hp.clip_epsilon, hi = 1.0 + hp.clip_epsilon;
        const double inv_mb = 1.0 / static_cast<double>(mb);
        for (Eigen::Index i = 0; i < mb; ++i) {
          const double ratio = std::exp(new_lp[i] - lp_old[i]);
          const double surr1 = ratio * adv_mb[i];
          const double surr2 = std::clamp(ratio, lo, hi) * adv_mb[i];
          const double w = (surr1 <= surr2) ? ratio * adv_mb[i] : 0.0;  // d obj / d log-prob
          if (w != 0.0) {
            g_mean.col(i) += w * dlp_dmean.col(i);
            g_log_std += w * z2m1.col(i);
          }
        }
        g_mean -= beta * kl.d_mean;
        g_log_std -= beta * kl.d_log_std;
        g_mean *= inv_mb;
        g_log_std *= inv_mb;

        auto actor_grads = agent.actor.zeroGradients();
        agent.actor.backward(ws, g_mean, actor_grads);
        agent.actor_opt.apply(agent.actor, actor_grads, /*maximize=*/true);
        agent.actor_opt.applyVector(agent.head.log_std, g_log_std, /*maximize=*/true);
        agent.head.clamp();

        // ----- value descent -----
        nn::Mlp::Workspace vws;
        Matrix v = agent.critic.forward(cobs, vws);
        Matrix dv = (2.0 * inv_mb) * (v - ret_mb.transpose());
        auto critic_grads = agent.critic.zeroGradients();
        agent.critic.backward(vws, dv, critic_grads);
        agent.critic_opt.apply(agent.critic, critic_grads, /*maximize=*/false);
      }
    }

    if (!agent.actor.allFinite() || !agent.critic.allFinite() ||
        !agent.head.log_std.allFinite())
      throw std::runtime_error("non-finite parameters after update");

    auto eval = evaluate_surrogate(agent.actor, agent.head, batch, adv, hp.clip_epsilon, beta);
    Matrix v_all = agent.critic.forward(batch.critic_inputs);
    diag.value_loss =
        (v_all.transpose().col(0) - batch.returns).array().square().mean();
    diag.mean_kl = eval.mean_kl;
    diag.clip_fraction = eval.clip_fraction;
    diag.policy_objective = eval.objective;
    if (!std::isfinite(diag.mean_kl) || !std::isfinite(diag.value_loss))
      throw std::runtime_error("non-finite diagnostics after update");
    agent.kl_coef = adapt_kl(beta, diag.mean_kl, hp.kl_target);
    diag.beta_after = agent.kl_coef;
  } catch (const std::runtime_error&) {
    agent = saved;
    diag.aborted = true;
  }
  return diag;
}

}  // namespace echelon::ppo
