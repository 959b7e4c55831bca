#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace echelon::qp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Convex quadratic program in the form
///   minimize   (1/2) x'Px + q'x
///   subject to l <= Cx <= u     (rows with l == u are equalities)
/// solved by operator splitting with a fixed deterministic schedule. The
/// KKT-like system is factored once per problem shape; q, l and u may change
/// between solves and the solver warm-starts from its previous iterates.
struct QpSettings {
  double rho_inequality = 1.0;
  double rho_equality = 1e3;
  double sigma = 1e-6;
  double relaxation = 1.6;
  double eps_abs = 1e-7;
  int max_iterations = 4000;
  int check_interval = 10;
};

struct QpResult {
  Vector x;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
};

class QpSolver {
 public:
  /// P must be symmetric positive semidefinite; C carries all constraints
  /// (box bounds included as identity rows by the caller).
  QpSolver(Matrix P, Matrix C, const Vector& lower, const Vector& upper,
           QpSettings settings = {});

  /// Solve with fresh linear term and bounds (same structure).
  QpResult solve(const Vector& q, const Vector& lower, const Vector& upper);
  QpResult solve(const Vector& q) { return solve(q, lower_, upper_); }

  void reset_warm_start();
  int num_vars() const { return static_cast<int>(P_.rows()); }
  int num_constraints() const { return static_cast<int>(C_.rows()); }

 private:
  Matrix P_, C_;
  Vector lower_, upper_;
  Vector rho_;      // per constraint row
  Vector rho_inv_;
  QpSettings settings_;
  Eigen::LDLT<Matrix> kkt_;
  // warm-start state
  Vector x_, z_, y_;
};

}  // namespace echelon::qp
