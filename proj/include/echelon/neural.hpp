#pragma once

#include <Eigen/Core>

#include <vector>

#include "echelon/rng.hpp"

namespace echelon::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense multi-layer perceptron with tanh hidden activations. The output is
/// linear for value heads and tanh for policy means. Batches are stored
/// column-wise (feature dim x batch).
class Mlp {
 public:
  struct Layer {
    Matrix weight;  // out x in
    Vector bias;    // out
  };

  /// A per-call scratch pad holding activations for the backward pass.
  struct Workspace {
    std::vector<Matrix> activations;  // activations[0] = input, back() = output
  };

  struct Gradients {
    std::vector<Layer> layers;
    void setZero();
    Gradients& operator+=(const Gradients& other);
    void scale(double factor);
    bool allFinite() const;
  };

  Mlp() = default;
  /// `sizes` = [input, hidden..., output]. Weights use scaled orthogonal
  /// init, the final layer scaled by `final_gain`.
  Mlp(std::vector<int> sizes, bool tanh_output, RngStream& init, double final_gain = 1.0);

  int input_size() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols()); }
  int output_size() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows()); }
  int parameter_count() const;
  bool tanh_output() const { return tanh_output_; }
  const std::vector<int>& sizes() const { return sizes_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  Matrix forward(const Matrix& input) const;
  Matrix forward(const Matrix& input, Workspace& ws) const;
  /// Accumulates d(output . upstream)/d(params) into `grads`; `upstream` is
  /// the gradient w.r.t. the network output (out x batch).
  void backward(const Workspace& ws, const Matrix& upstream, Gradients& grads) const;

  Gradients zeroGradients() const;
  bool allFinite() const;

 private:
  std::vector<int> sizes_;
  std::vector<Layer> layers_;
  bool tanh_output_ = false;
};

/// Adam with bias correction. `maximize` flips the step direction so the
/// same state drives gradient ascent on policy objectives and descent on
/// value losses.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const Mlp& net, double learning_rate);

  /// Throws std::runtime_error on non-finite gradients; parameters untouched.
  void apply(Mlp& net, const Mlp::Gradients& grads, bool maximize);
  /// Same update rule for free parameter vectors (e.g. log-std).
  void applyVector(Vector& params, const Vector& grad, bool maximize);

  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;

  std::vector<Mlp::Layer> m, v;  // per-layer first/second moments
  Vector vec_m, vec_v;           // moments for the free-vector variant
  long vec_step_count = 0;
};

/// Diagonal Gaussian over actions: mean comes from a tanh-output actor,
/// log-std is a free state-independent parameter per action dimension,
/// clamped to [-20, 2]. Samples are clipped to [-1, 1] by the caller; the
/// density is always evaluated at the pre-clip sample.
struct GaussianPolicyHead {
  Vector log_std;

  explicit GaussianPolicyHead(int action_dim = 0, double initial_log_std = -0.5);
  void clamp();

  Vector sample(const Vector& mean, RngStream& rng) const;  // pre-clip
  double log_prob(const Vector& mean, const Vector& action) const;
  /// Per-column log densities for a batch of (mean, action) pairs.
  Vector log_prob_batch(const Matrix& means, const Matrix& actions) const;
  double entropy() const;
};

/// Closed-form KL(old || new) between diagonal Gaussians sharing batch means.
double gaussian_kl(const Vector& mean_old, const Vector& log_std_old, const Vector& mean_new,
                   const Vector& log_std_new);

/// Deterministic orthogonal-ish matrix scaled by `gain`.
Matrix orthogonal_matrix(int rows, int cols, double gain, RngStream& rng);

}  // namespace echelon::nn
