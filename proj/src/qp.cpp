#include "echelon/qp.hpp"

#include <cmath>
#include <stdexcept>

namespace echelon::qp {

QpSolver::QpSolver(Matrix P, Matrix C, const Vector& lower, const Vector& upper,
                   QpSettings settings)
    : P_(std::move(P)), C_(std::move(C)), lower_(lower), upper_(upper), settings_(settings) {
  const Eigen::Index n = P_.rows();
  const Eigen::Index mc = C_.rows();
  if (P_.cols() != n || (mc > 0 && C_.cols() != n) || lower_.size() != mc ||
      upper_.size() != mc)
    throw std::invalid_argument("QpSolver: inconsistent problem dimensions");

  rho_ = Vector::Constant(mc, settings_.rho_inequality);
  for (Eigen::Index r = 0; r < mc; ++r)
    if (lower_[r] == upper_[r]) rho_[r] = settings_.rho_equality;
  rho_inv_ = rho_.cwiseInverse();

  Matrix kkt = P_ + settings_.sigma * Matrix::Identity(n, n);
  if (mc > 0) kkt.noalias() += C_.transpose() * rho_.asDiagonal() * C_;
  kkt_.compute(kkt);
  if (kkt_.info() != Eigen::Success)
    throw std::runtime_error("QpSolver: factorization failed");

  x_ = Vector::Zero(n);
  z_ = Vector::Zero(mc);
  y_ = Vector::Zero(mc);
}

void QpSolver::reset_warm_start() {
  x_.setZero();
  z_.setZero();
  y_.setZero();
}

QpResult QpSolver::solve(const Vector& q, const Vector& lower, const Vector& upper) {
  lower_ = lower;
  upper_ = upper;
  const Eigen::Index mc = C_.rows();
  const double alpha = settings_.relaxation;

  QpResult out;
  if (mc == 0) {
    out.x = kkt_.solve(-q);
    out.converged = true;
    x_ = out.x;
    return out;
  }

  auto residuals = [&](double& rp, double& rd) {
    rp = (C_ * x_ - z_).cwiseAbs().maxCoeff();
    rd = (P_ * x_ + q + C_.transpose() * y_).cwiseAbs().maxCoeff();
  };

  int it = 0;
  for (; it < settings_.max_iterations; ++it) {
    Vector rhs = settings_.sigma * x_ - q;
    rhs.noalias() += C_.transpose() * (rho_.cwiseProduct(z_) - y_);
    Vector x_tilde = kkt_.solve(rhs);
    Vector v = C_ * x_tilde;
    Vector z_hat = alpha * v + (1.0 - alpha) * z_;
    Vector z_next = (z_hat + rho_inv_.cwiseProduct(y_)).cwiseMax(lower_).cwiseMin(upper_);
    y_ += rho_.cwiseProduct(z_hat - z_next);
    z_ = z_next;
    x_ = alpha * x_tilde + (1.0 - alpha) * x_;

    if ((it + 1) % settings_.check_interval == 0) {
      double rp, rd;
      residuals(rp, rd);
      const double scale_p = 1.0 + std::max((C_ * x_).cwiseAbs().maxCoeff(),
                                            z_.cwiseAbs().maxCoeff());
      const double scale_d = 1.0 + std::max(q.cwiseAbs().maxCoeff(),
                                            (C_.transpose() * y_).cwiseAbs().maxCoeff());
      if (rp < settings_.eps_abs * scale_p && rd < settings_.eps_abs * scale_d) {
        out.converged = true;
        out.primal_residual = rp;
        out.dual_residual = rd;
        ++it;
        break;
      }
    }
  }
  if (!out.converged) residuals(out.primal_residual, out.dual_residual);
  out.x = x_;
  out.iterations = it;
  return out;
}

}  // namespace echelon::qp
