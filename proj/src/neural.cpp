#include "echelon/neural.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace echelon::nn {

namespace {
constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
}  // namespace

Matrix orthogonal_matrix(int rows, int cols, double gain, RngStream& rng) {
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  Matrix g(big, small);
  for (int j = 0; j < small; ++j)
    for (int i = 0; i < big; ++i) g(i, j) = rng.next_gaussian();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(big, small);
  // fix signs so the decomposition is unique
  Matrix r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  Matrix out = (rows >= cols) ? q : Matrix(q.transpose());
  return gain * out;
}

void Mlp::Gradients::setZero() {
  for (auto& l : layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

Mlp::Gradients& Mlp::Gradients::operator+=(const Gradients& other) {
  for (size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight += other.layers[i].weight;
    layers[i].bias += other.layers[i].bias;
  }
  return *this;
}

void Mlp::Gradients::scale(double factor) {
  for (auto& l : layers) {
    l.weight *= factor;
    l.bias *= factor;
  }
}

bool Mlp::Gradients::allFinite() const {
  for (const auto& l : layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

Mlp::Mlp(std::vector<int> sizes, bool tanh_output, RngStream& init, double final_gain)
    : sizes_(std::move(sizes)), tanh_output_(tanh_output) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  const size_t n_layers = sizes_.size() - 1;
  layers_.resize(n_layers);
  for (size_t l = 0; l < n_layers; ++l) {
    const bool last = (l + 1 == n_layers);
    const double gain = last ? final_gain : std::sqrt(2.0);
    layers_[l].weight = orthogonal_matrix(sizes_[l + 1], sizes_[l], gain, init);
    layers_[l].bias = Vector::Zero(sizes_[l + 1]);
  }
}

int Mlp::parameter_count() const {
  int n = 0;
  for (const auto& l : layers_)
    n += static_cast<int>(l.weight.size() + l.bias.size());
  return n;
}

Matrix Mlp::forward(const Matrix& input) const {
  Workspace ws;
  return forward(input, ws);
}

Matrix Mlp::forward(const Matrix& input, Workspace& ws) const {
  if (input.rows() != input_size())
    throw std::invalid_argument("Mlp::forward: input has " + std::to_string(input.rows()) +
                                " rows, expected " + std::to_string(input_size()));
  ws.activations.clear();
  ws.activations.reserve(layers_.size() + 1);
  ws.activations.push_back(input);
  Matrix x = input;
  for (size_t l = 0; l < layers_.size(); ++l) {
    x = (layers_[l].weight * x).colwise() + layers_[l].bias;
    const bool last = (l + 1 == layers_.size());
    if (!last || tanh_output_) x = x.array().tanh().matrix();
    ws.activations.push_back(x);
  }
  return x;
}

void Mlp::backward(const Workspace& ws, const Matrix& upstream, Gradients& grads) const {
  if (ws.activations.size() != layers_.size() + 1)
    throw std::logic_error("Mlp::backward: workspace does not match a forward pass");
  if (grads.layers.size() != layers_.size()) {
    grads.layers.resize(layers_.size());
    for (size_t l = 0; l < layers_.size(); ++l) {
      grads.layers[l].weight = Matrix::Zero(layers_[l].weight.rows(), layers_[l].weight.cols());
      grads.layers[l].bias = Vector::Zero(layers_[l].bias.size());
    }
  }
  Matrix delta = upstream;
  for (size_t l = layers_.size(); l-- > 0;) {
    const bool last = (l + 1 == layers_.size());
    const Matrix& out_act = ws.activations[l + 1];
    if (!last || tanh_output_)
      delta = delta.cwiseProduct((1.0 - out_act.array().square()).matrix());
    grads.layers[l].weight.noalias() += delta * ws.activations[l].transpose();
    grads.layers[l].bias.noalias() += delta.rowwise().sum();
    if (l > 0) delta = layers_[l].weight.transpose() * delta;
  }
}

Mlp::Gradients Mlp::zeroGradients() const {
  Gradients g;
  g.layers.resize(layers_.size());
  for (size_t l = 0; l < layers_.size(); ++l) {
    g.layers[l].weight = Matrix::Zero(layers_[l].weight.rows(), layers_[l].weight.cols());
    g.layers[l].bias = Vector::Zero(layers_[l].bias.size());
  }
  return g;
}

bool Mlp::allFinite() const {
  for (const auto& l : layers_)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

AdamState::AdamState(const Mlp& net, double lr) : learning_rate(lr) {
  m.resize(net.layers().size());
  v.resize(net.layers().size());
  for (size_t l = 0; l < net.layers().size(); ++l) {
    m[l].weight = Matrix::Zero(net.layers()[l].weight.rows(), net.layers()[l].weight.cols());
    m[l].bias = Vector::Zero(net.layers()[l].bias.size());
    v[l] = m[l];
  }
}

void AdamState::apply(Mlp& net, const Mlp::Gradients& grads, bool maximize) {
  if (!grads.allFinite())
    throw std::runtime_error("adam: non-finite gradient, update aborted");
  ++step_count;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  const double sign = maximize ? 1.0 : -1.0;
  for (size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.layers()[l];
    const auto& gw = grads.layers[l].weight;
    const auto& gb = grads.layers[l].bias;
    m[l].weight = beta1 * m[l].weight + (1.0 - beta1) * gw;
    v[l].weight = beta2 * v[l].weight + (1.0 - beta2) * gw.cwiseProduct(gw);
    m[l].bias = beta1 * m[l].bias + (1.0 - beta1) * gb;
    v[l].bias = beta2 * v[l].bias + (1.0 - beta2) * gb.cwiseProduct(gb);
    layer.weight.array() += sign * learning_rate * (m[l].weight.array() / bc1) /
                            ((v[l].weight.array() / bc2).sqrt() + epsilon);
    layer.bias.array() += sign * learning_rate * (m[l].bias.array() / bc1) /
                          ((v[l].bias.array() / bc2).sqrt() + epsilon);
  }
}

void AdamState::applyVector(Vector& params, const Vector& grad, bool maximize) {
  if (!grad.allFinite())
    throw std::runtime_error("adam: non-finite gradient, update aborted");
  if (vec_m.size() != params.size()) {
    vec_m = Vector::Zero(params.size());
    vec_v = Vector::Zero(params.size());
    vec_step_count = 0;
  }
  ++vec_step_count;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(vec_step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(vec_step_count));
  const double sign = maximize ? 1.0 : -1.0;
  vec_m = beta1 * vec_m + (1.0 - beta1) * grad;
  vec_v = beta2 * vec_v + (1.0 - beta2) * grad.cwiseProduct(grad);
  params.array() += sign * learning_rate * (vec_m.array() / bc1) /
                    ((vec_v.array() / bc2).sqrt() + epsilon);
}

GaussianPolicyHead::GaussianPolicyHead(int action_dim, double initial_log_std)
    : log_std(Vector::Constant(action_dim, initial_log_std)) {}

void GaussianPolicyHead::clamp() {
  log_std = log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

Vector GaussianPolicyHead::sample(const Vector& mean, RngStream& rng) const {
  Vector out(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    out[i] = mean[i] + std::exp(log_std[i]) * rng.next_gaussian();
  return out;
}

double GaussianPolicyHead::log_prob(const Vector& mean, const Vector& action) const {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * kLogTwoPi - log_std[i] - 0.5 * z * z;
  }
  return lp;
}

Vector GaussianPolicyHead::log_prob_batch(const Matrix& means, const Matrix& actions) const {
  const Eigen::Index n = means.cols();
  Vector out = Vector::Constant(n, -0.5 * kLogTwoPi * static_cast<double>(log_std.size()) -
                                       log_std.sum());
  const Vector inv_var = (-2.0 * log_std.array()).exp();
  Matrix diff = actions - means;
  out.array() -= 0.5 * (diff.array().square().colwise() * inv_var.array()).colwise().sum().transpose();
  return out;
}

double GaussianPolicyHead::entropy() const {
  return 0.5 * static_cast<double>(log_std.size()) * (1.0 + kLogTwoPi) + log_std.sum();
}

double gaussian_kl(const Vector& mean_old, const Vector& log_std_old, const Vector& mean_new,
                   const Vector& log_std_new) {
  double kl = 0.0;
  for (Eigen::Index i = 0; i < mean_old.size(); ++i) {
    const double var_old = std::exp(2.0 * log_std_old[i]);
    const double var_new = std::exp(2.0 * log_std_new[i]);
    const double dm = mean_new[i] - mean_old[i];
    kl += log_std_new[i] - log_std_old[i] + (var_old + dm * dm) / (2.0 * var_new) - 0.5;
  }
  return kl;
}

}  // namespace echelon::nn
