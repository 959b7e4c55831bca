#include "echelon/mathprog.hpp"

#include <cmath>
#include <stdexcept>

namespace echelon::lp {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;

enum class VarState : int8_t { at_lower, at_upper, basic };

/// Dense full-tableau bounded-variable simplex. Columns are structural
/// variables, then slacks for inequality rows, then one artificial per row.
/// Both phase objectives are carried through every pivot so phase 2 starts
/// without a refactorization.
class Tableau {
 public:
  explicit Tableau(const LpModel& model) : model_(model) {
    m_ = model.num_rows();
    n_struct_ = model.num_vars;
    int n_slack = 0;
    for (auto s : model.senses)
      if (s == RowSense::less_equal) ++n_slack;
    n_ = n_struct_ + n_slack;
    n_total_ = n_ + m_;

    lower_ = Vector::Zero(n_total_);
    upper_ = Vector::Constant(n_total_, kInfinity);
    lower_.head(n_struct_) = model.lower;
    upper_.head(n_struct_) = model.upper;

    // minimize internally
    cost_ = Vector::Zero(n_total_);
    cost_.head(n_struct_) = -model.objective;

    tab_ = Matrix::Zero(m_, n_total_);
    tab_.topLeftCorner(m_, n_struct_) = model.rows;
    int slack = n_struct_;
    for (int r = 0; r < m_; ++r)
      if (model.senses[static_cast<size_t>(r)] == RowSense::less_equal)
        tab_(r, slack++) = 1.0;

    state_.assign(static_cast<size_t>(n_total_), VarState::at_lower);
    basis_.resize(static_cast<size_t>(m_));

    // start all real variables at their lower bound (every variable here has
    // a finite one) and absorb the residual into signed artificials
    Vector residual = model.rhs;
    for (int j = 0; j < n_; ++j) {
      if (!(lower_[j] > -kInfinity))
        throw std::invalid_argument("simplex: free variables are not supported");
      if (lower_[j] != 0.0) residual -= tab_.col(j) * lower_[j];
    }
    for (int r = 0; r < m_; ++r) {
      const int art = n_ + r;
      const double sign = residual[r] >= 0 ? 1.0 : -1.0;
      tab_(r, art) = sign;
      basis_[static_cast<size_t>(r)] = art;
      state_[static_cast<size_t>(art)] = VarState::basic;
    }
    xb_ = residual.cwiseAbs();
    // normalize rows so every artificial column is +1
    for (int r = 0; r < m_; ++r)
      if (tab_(r, n_ + r) < 0) tab_.row(r) *= -1.0;

    // reduced costs: phase 1 minimizes the artificial sum, phase 2 the cost
    d1_ = Vector::Zero(n_total_);
    d2_ = cost_;
    for (int r = 0; r < m_; ++r) d1_ -= tab_.row(r).transpose();
    for (int r = 0; r < m_; ++r) d1_[n_ + r] = 0.0;
  }

  LpSolution run() {
    LpSolution sol;
    // ---- phase 1 ----
    if (!iterate(/*phase_one=*/true)) throw std::logic_error("simplex: phase 1 unbounded");
    if (phase1_value() > kFeasTol * (1.0 + model_.rhs.cwiseAbs().maxCoeff())) {
      sol.status = LpSolution::Status::infeasible;
      sol.iterations = iterations_;
      return sol;
    }
    // lock artificials at zero so they can never re-enter or move
    for (int r = 0; r < m_; ++r) {
      const int art = n_ + r;
      upper_[art] = 0.0;
      lower_[art] = 0.0;
    }
    // nonbasic artificials sit harmlessly at their zero bound; basic ones
    // stay pinned at zero by the ratio test
    // ---- phase 2 ----
    if (!iterate(/*phase_one=*/false)) {
      sol.status = LpSolution::Status::unbounded;
      sol.iterations = iterations_;
      return sol;
    }
    sol.status = LpSolution::Status::optimal;
    sol.values = extract();
    sol.objective = model_.objective.dot(sol.values);
    sol.iterations = iterations_;
    return sol;
  }

 private:
  double phase1_value() const {
    double v = 0.0;
    for (int r = 0; r < m_; ++r)
      if (basis_[static_cast<size_t>(r)] >= n_) v += xb_[r];
    return v;
  }

  Vector extract() const {
    Vector x(n_struct_);
    for (int j = 0; j < n_struct_; ++j) {
      switch (state_[static_cast<size_t>(j)]) {
        case VarState::at_lower: x[j] = lower_[j]; break;
        case VarState::at_upper: x[j] = upper_[j]; break;
        case VarState::basic: x[j] = 0.0; break;  // filled below
      }
    }
    for (int r = 0; r < m_; ++r) {
      const int j = basis_[static_cast<size_t>(r)];
      if (j < n_struct_) x[j] = xb_[r];
    }
    return x;
  }

  // Returns false on unboundedness.
  bool iterate(bool phase_one) {
    const Vector& d = phase_one ? d1_ : d2_;
    int degenerate_streak = 0;
    bool bland = false;
    const long max_iters = 2000L + 60L * (static_cast<long>(m_) + n_);
    for (;;) {
      if (iterations_ > max_iters)
        throw std::runtime_error("simplex: iteration limit hit");
      const int entering = price(d, bland, phase_one);
      if (entering < 0) return true;  // optimal for this phase

      const int dir = state_[static_cast<size_t>(entering)] == VarState::at_lower ? 1 : -1;
      Vector w = tab_.col(entering);

      // ratio test: how far can the entering variable move?
      double t_best = upper_[entering] - lower_[entering];  // bound-to-bound flip
      int leave_row = -1;
      bool leave_at_upper = false;
      for (int r = 0; r < m_; ++r) {
        const double wr = w[r];
        if (std::abs(wr) <= kPivotTol) continue;
        const int bj = basis_[static_cast<size_t>(r)];
        const double delta = dir * wr;  // basic value falls by delta * t
        double limit;
        bool hits_upper;
        if (delta > 0) {
          limit = (xb_[r] - lower_[bj]) / delta;
          hits_upper = false;
        } else {
          if (!(upper_[bj] < kInfinity)) continue;
          limit = (xb_[r] - upper_[bj]) / delta;
          hits_upper = true;
        }
        if (limit < -1e-11) limit = 0.0;
        bool better = limit < t_best - 1e-11;
        if (!better && limit < t_best + 1e-11 && leave_row >= 0) {
          // near-tie: Bland mode picks the smallest basis index (the
          // anti-cycling guarantee needs it), otherwise take the more
          // stable pivot element
          if (bland)
            better = bj < basis_[static_cast<size_t>(leave_row)];
          else
            better = std::abs(wr) > std::abs(w[leave_row]) + 1e-12;
        }
        if (better) {
          t_best = limit;
          leave_row = r;
          leave_at_upper = hits_upper;
        }
      }

      if (!(t_best < kInfinity)) return false;  // unbounded direction

      ++iterations_;
      if (t_best <= 1e-11) {
        if (++degenerate_streak > 2 * (m_ + 16)) bland = true;
      } else {
        degenerate_streak = 0;
        bland = false;
      }

      if (leave_row < 0) {
        // bound flip: entering variable crosses to its other bound
        xb_ -= dir * t_best * w;
        state_[static_cast<size_t>(entering)] =
            dir > 0 ? VarState::at_upper : VarState::at_lower;
        continue;
      }

      // basic values move, entering becomes basic at its new value
      const double enter_start =
          dir > 0 ? lower_[entering] : upper_[entering];
      xb_ -= dir * t_best * w;
      const int leaving = basis_[static_cast<size_t>(leave_row)];
      state_[static_cast<size_t>(leaving)] =
          leave_at_upper ? VarState::at_upper : VarState::at_lower;
      state_[static_cast<size_t>(entering)] = VarState::basic;
      basis_[static_cast<size_t>(leave_row)] = entering;
      xb_[leave_row] = enter_start + dir * t_best;

      pivot(leave_row, entering);
    }
  }

  /// Gauss-Jordan elimination on (row, col), maintaining both cost rows.
  void pivot(int row, int col) {
    const double piv = tab_(row, col);
    tab_.row(row) /= piv;
    for (int r = 0; r < m_; ++r) {
      if (r == row) continue;
      const double f = tab_(r, col);
      if (f != 0.0) tab_.row(r) -= f * tab_.row(row);
    }
    const double f1 = d1_[col];
    if (f1 != 0.0) d1_ -= f1 * tab_.row(row).transpose();
    const double f2 = d2_[col];
    if (f2 != 0.0) d2_ -= f2 * tab_.row(row).transpose();
  }

  /// Most-violating eligible column (Dantzig), or smallest index under
  /// Bland's rule. Returns -1 when no column can improve this phase.
  int price(const Vector& d, bool bland, bool phase_one) const {
    int best = -1;
    double best_score = kCostTol;
    for (int j = 0; j < n_total_; ++j) {
      const VarState st = state_[static_cast<size_t>(j)];
      if (st == VarState::basic) continue;
      if (upper_[j] - lower_[j] <= 0.0) continue;  // fixed (includes dead artificials)
      if (phase_one && j >= n_) continue;          // artificials never re-enter
      double score = 0.0;
      if (st == VarState::at_lower && d[j] < -kCostTol) score = -d[j];
      if (st == VarState::at_upper && d[j] > kCostTol) score = d[j];
      if (score <= 0.0) continue;
      if (bland) return j;
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  const LpModel& model_;
  int m_ = 0, n_struct_ = 0, n_ = 0, n_total_ = 0;
  Matrix tab_;
  Vector xb_, lower_, upper_, cost_, d1_, d2_;
  std::vector<VarState> state_;
  std::vector<int> basis_;
  long iterations_ = 0;
};

}  // namespace

LpSolution solve_lp(const LpModel& model) {
  Tableau tableau(model);
  return tableau.run();
}

}  // namespace echelon::lp
