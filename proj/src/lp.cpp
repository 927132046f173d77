#include "mscg/lp.hpp"

#include <algorithm>
#include <cmath>

namespace mscg {

namespace {

constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr int kRefactorEvery = 64;

enum class VarState : char { Basic, AtLower, AtUpper };

struct Eta {
  int pos;
  Eigen::VectorXd d;
};

// Bounded-variable revised simplex over the equality system
//   [A | slacks | artificials] x = b,
// with a product-form basis representation (explicit inverse refreshed every
// kRefactorEvery pivots, eta updates in between).
class Simplex {
 public:
  explicit Simplex(const LinearProgram& lp) : lp_(lp) { build(); }

  LpSolution run() {
    LpSolution sol;
    if (m_ == 0) return solve_unconstrained();

    // Phase 1: minimize the sum of artificials.
    phase1_ = true;
    const LpStatus s1 = iterate();
    if (s1 != LpStatus::Optimal) {
      sol.status = s1 == LpStatus::Unbounded ? LpStatus::NumericalBreakdown : s1;
      return sol;
    }
    double art_sum = 0.0;
    for (int i = 0; i < m_; ++i) art_sum += x_[static_cast<std::size_t>(art_ + i)];
    if (art_sum > feas_tol_) {
      sol.status = LpStatus::Infeasible;
      sol.objective = kInf;
      sol.pivots = pivots_;
      return sol;
    }

    // Phase 2: pin artificials at zero and optimize the real objective.
    phase1_ = false;
    for (int i = 0; i < m_; ++i) upper_[static_cast<std::size_t>(art_ + i)] = 0.0;
    const LpStatus s2 = iterate();
    if (s2 != LpStatus::Optimal) {
      sol.status = s2;
      sol.objective = s2 == LpStatus::Unbounded ? -kInf : 0.0;
      sol.pivots = pivots_;
      return sol;
    }

    refactor();
    Eigen::VectorXd y = btran(basic_costs());
    Eigen::VectorXd rc = cost_ - A_.transpose() * y;

    sol.status = LpStatus::Optimal;
    sol.primal = x_.head(n_);
    sol.duals = y;
    sol.reduced_costs = rc.head(n_);
    sol.objective = lp_.objective.dot(sol.primal);
    sol.pivots = pivots_;

    const double res = (A_ * x_ - b_).cwiseAbs().maxCoeff();
    // Written so NaN residuals fail too.
    if (broken_ || !sol.primal.allFinite() || !y.allFinite() ||
        !(res <= 1e-7 * std::max(1.0, b_.cwiseAbs().maxCoeff())))
      sol.status = LpStatus::NumericalBreakdown;
    return sol;
  }

 private:
  void build() {
    n_ = lp_.num_vars();
    m_ = lp_.num_rows();
    slack_ = n_;
    art_ = n_ + m_;
    total_ = n_ + 2 * m_;

    A_.setZero(m_, total_);
    if (m_ > 0) A_.leftCols(n_) = lp_.row_coeffs;
    b_ = lp_.row_rhs;

    lower_.resize(static_cast<std::size_t>(total_));
    upper_.resize(static_cast<std::size_t>(total_));
    for (int j = 0; j < n_; ++j) {
      lower_[static_cast<std::size_t>(j)] = lp_.lower[j];
      upper_[static_cast<std::size_t>(j)] = lp_.upper[j];
    }
    for (int i = 0; i < m_; ++i) {
      const int s = slack_ + i;
      switch (lp_.row_rel[static_cast<std::size_t>(i)]) {
        case Rel::Le:
          A_(i, s) = 1.0;
          lower_[static_cast<std::size_t>(s)] = 0.0;
          upper_[static_cast<std::size_t>(s)] = kInf;
          break;
        case Rel::Ge:
          A_(i, s) = -1.0;
          lower_[static_cast<std::size_t>(s)] = 0.0;
          upper_[static_cast<std::size_t>(s)] = kInf;
          break;
        case Rel::Eq:
          A_(i, s) = 1.0;
          lower_[static_cast<std::size_t>(s)] = 0.0;
          upper_[static_cast<std::size_t>(s)] = 0.0;
          break;
      }
    }

    cost_.setZero(total_);
    x_.setZero(total_);
    state_.assign(static_cast<std::size_t>(total_), VarState::AtLower);
    for (int j = 0; j < total_; ++j) x_[j] = lower_[static_cast<std::size_t>(j)];

    // Artificials absorb the initial residual so the starting basis is the
    // identity and phase 1 starts feasible.
    Eigen::VectorXd r = b_;
    if (m_ > 0 && n_ > 0) r -= lp_.row_coeffs * x_.head(n_);
    basis_.resize(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) {
      const int a = art_ + i;
      A_(i, a) = r[i] >= 0.0 ? 1.0 : -1.0;
      lower_[static_cast<std::size_t>(a)] = 0.0;
      upper_[static_cast<std::size_t>(a)] = kInf;
      x_[a] = std::abs(r[i]);
      state_[static_cast<std::size_t>(a)] = VarState::Basic;
      basis_[static_cast<std::size_t>(i)] = a;
    }
    feas_tol_ = 1e-7 * std::max(1.0, m_ > 0 ? b_.cwiseAbs().maxCoeff() : 0.0);
    if (m_ > 0) refactor();
  }

  Eigen::VectorXd basic_costs() const {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) {
      const int k = basis_[static_cast<std::size_t>(i)];
      cb[i] = phase1_ ? (k >= art_ ? 1.0 : 0.0) : (k < n_ ? lp_.objective[k] : 0.0);
    }
    return cb;
  }

  double cost_of(int j) const {
    if (phase1_) return j >= art_ ? 1.0 : 0.0;
    return j < n_ ? lp_.objective[j] : 0.0;
  }

  void refactor() {
    Eigen::MatrixXd B(m_, m_);
    for (int i = 0; i < m_; ++i) B.col(i) = A_.col(basis_[static_cast<std::size_t>(i)]);
    binv_ = B.partialPivLu().inverse();
    if (!binv_.allFinite()) broken_ = true;
    etas_.clear();
    // Recompute basic values from scratch to control drift.
    Eigen::VectorXd rhs = b_;
    for (int j = 0; j < total_; ++j)
      if (state_[static_cast<std::size_t>(j)] != VarState::Basic && x_[j] != 0.0)
        rhs -= A_.col(j) * x_[j];
    Eigen::VectorXd xb = binv_ * rhs;
    for (int i = 0; i < m_; ++i) x_[basis_[static_cast<std::size_t>(i)]] = xb[i];
  }

  Eigen::VectorXd ftran(const Eigen::VectorXd& v) const {
    Eigen::VectorXd w = binv_ * v;
    for (const Eta& e : etas_) {
      const double wp = w[e.pos] / e.d[e.pos];
      w -= wp * e.d;
      w[e.pos] = wp;
    }
    return w;
  }

  Eigen::VectorXd btran(const Eigen::VectorXd& c) const {
    Eigen::VectorXd w = c;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      const double dp = it->d[it->pos];
      const double num = w[it->pos] - (it->d.dot(w) - dp * w[it->pos]);
      w[it->pos] = num / dp;
    }
    return binv_.transpose() * w;
  }

  LpStatus iterate() {
    cost_.setZero();
    for (int j = 0; j < total_; ++j) cost_[j] = cost_of(j);
    const long bland_after = pivots_ + 10L * (m_ + total_);
    const long hard_cap = pivots_ + std::max(100000L, 500L * (m_ + total_));

    for (;;) {
      if (pivots_ > hard_cap || broken_) return LpStatus::NumericalBreakdown;
      const bool bland = pivots_ > bland_after;

      const Eigen::VectorXd y = btran(basic_costs());
      const Eigen::VectorXd rc = cost_ - A_.transpose() * y;

      int q = -1;
      double best = kDualTol;
      for (int j = 0; j < total_; ++j) {
        const auto st = state_[static_cast<std::size_t>(j)];
        if (st == VarState::Basic) continue;
        if (lower_[static_cast<std::size_t>(j)] >= upper_[static_cast<std::size_t>(j)]) continue;
        const double v = st == VarState::AtLower ? -rc[j] : rc[j];
        if (v <= kDualTol) continue;
        if (bland) {
          q = j;
          break;
        }
        if (v > best) {
          best = v;
          q = j;
        }
      }
      if (q < 0) return LpStatus::Optimal;

      const int dir = state_[static_cast<std::size_t>(q)] == VarState::AtLower ? 1 : -1;
      const Eigen::VectorXd d = ftran(A_.col(q));

      // Ratio test: the entering variable moves by t in direction dir; each
      // basic value changes at rate -dir*d. A move can also be blocked by the
      // entering variable's own opposite bound (a bound flip).
      double t_min = upper_[static_cast<std::size_t>(q)] - lower_[static_cast<std::size_t>(q)];
      for (int p = 0; p < m_; ++p) {
        const int k = basis_[static_cast<std::size_t>(p)];
        const double rate = dir * d[p];
        double limit;
        if (rate > kPivotTol) {
          limit = (x_[k] - lower_[static_cast<std::size_t>(k)]) / rate;
        } else if (rate < -kPivotTol) {
          if (upper_[static_cast<std::size_t>(k)] == kInf) continue;
          limit = (upper_[static_cast<std::size_t>(k)] - x_[k]) / (-rate);
        } else {
          continue;
        }
        t_min = std::min(t_min, std::max(limit, 0.0));
      }
      if (t_min == kInf) return phase1_ ? LpStatus::NumericalBreakdown : LpStatus::Unbounded;

      // Pick the blocking row among near-ties: largest pivot magnitude, then
      // lowest variable index (lowest index only under Bland's rule).
      const double tie = t_min + 1e-10 * (1.0 + std::abs(t_min));
      int p_star = -1;
      double best_piv = 0.0;
      for (int p = 0; p < m_; ++p) {
        const int k = basis_[static_cast<std::size_t>(p)];
        const double rate = dir * d[p];
        double limit;
        if (rate > kPivotTol) {
          limit = (x_[k] - lower_[static_cast<std::size_t>(k)]) / rate;
        } else if (rate < -kPivotTol) {
          if (upper_[static_cast<std::size_t>(k)] == kInf) continue;
          limit = (upper_[static_cast<std::size_t>(k)] - x_[k]) / (-rate);
        } else {
          continue;
        }
        if (std::max(limit, 0.0) > tie) continue;
        if (bland) {
          if (p_star < 0 || k < basis_[static_cast<std::size_t>(p_star)]) p_star = p;
        } else if (std::abs(d[p]) > best_piv + 1e-12 ||
                   (std::abs(d[p]) > best_piv - 1e-12 && p_star >= 0 &&
                    k < basis_[static_cast<std::size_t>(p_star)])) {
          best_piv = std::abs(d[p]);
          p_star = p;
        }
      }

      ++pivots_;
      if (p_star < 0) {
        // Bound flip: entering jumps to its opposite bound, basis unchanged.
        const double t = t_min;
        for (int p = 0; p < m_; ++p) x_[basis_[static_cast<std::size_t>(p)]] -= t * dir * d[p];
        x_[q] = dir > 0 ? upper_[static_cast<std::size_t>(q)] : lower_[static_cast<std::size_t>(q)];
        state_[static_cast<std::size_t>(q)] =
            dir > 0 ? VarState::AtUpper : VarState::AtLower;
        continue;
      }

      const int k_out = basis_[static_cast<std::size_t>(p_star)];
      const double rate_out = dir * d[p_star];
      double t = rate_out > 0.0
                     ? (x_[k_out] - lower_[static_cast<std::size_t>(k_out)]) / rate_out
                     : (upper_[static_cast<std::size_t>(k_out)] - x_[k_out]) / (-rate_out);
      t = std::max(t, 0.0);
      for (int p = 0; p < m_; ++p) x_[basis_[static_cast<std::size_t>(p)]] -= t * dir * d[p];
      x_[q] = (dir > 0 ? lower_[static_cast<std::size_t>(q)]
                       : upper_[static_cast<std::size_t>(q)]) +
              dir * t;
      x_[k_out] = rate_out > 0.0 ? lower_[static_cast<std::size_t>(k_out)]
                                 : upper_[static_cast<std::size_t>(k_out)];
      state_[static_cast<std::size_t>(k_out)] =
          rate_out > 0.0 ? VarState::AtLower : VarState::AtUpper;
      state_[static_cast<std::size_t>(q)] = VarState::Basic;
      basis_[static_cast<std::size_t>(p_star)] = q;
      etas_.push_back(Eta{p_star, d});
      if (static_cast<int>(etas_.size()) >= kRefactorEvery) refactor();
    }
  }

  LpSolution solve_unconstrained() {
    LpSolution sol;
    sol.primal.setZero(n_);
    sol.duals.resize(0);
    sol.reduced_costs = lp_.objective;
    for (int j = 0; j < n_; ++j) {
      const double c = lp_.objective[j];
      if (c >= 0.0) {
        sol.primal[j] = lp_.lower[j];
      } else if (lp_.upper[j] < kInf) {
        sol.primal[j] = lp_.upper[j];
      } else {
        sol.status = LpStatus::Unbounded;
        sol.objective = -kInf;
        return sol;
      }
    }
    sol.status = LpStatus::Optimal;
    sol.objective = lp_.objective.dot(sol.primal);
    return sol;
  }

  const LinearProgram& lp_;
  int n_ = 0, m_ = 0, slack_ = 0, art_ = 0, total_ = 0;
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  Eigen::VectorXd cost_;
  Eigen::VectorXd x_;
  std::vector<double> lower_, upper_;
  std::vector<VarState> state_;
  std::vector<int> basis_;
  Eigen::MatrixXd binv_;
  std::vector<Eta> etas_;
  bool phase1_ = true;
  bool broken_ = false;
  double feas_tol_ = 1e-7;
  long pivots_ = 0;
};

}  // namespace

void LinearProgram::validate() const {
  const int n = num_vars();
  const int m = num_rows();
  if (row_coeffs.rows() != m || (m > 0 && row_coeffs.cols() != n))
    throw Error("dimension mismatch: row_coeffs");
  if (row_rhs.size() != m) throw Error("dimension mismatch: row_rhs");
  if (lower.size() != n || upper.size() != n) throw Error("dimension mismatch: bounds");
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(lower[j])) throw Error("infinite bound: finite lower bounds required");
    if (lower[j] > upper[j]) throw Error("empty bound interval for variable " + std::to_string(j));
  }
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::NumericalBreakdown: return "numerical_breakdown";
  }
  return "?";
}

LpSolution solve_lp(const LinearProgram& lp) {
  lp.validate();
  Simplex simplex(lp);
  return simplex.run();
}

DualityReport check_duality(const LinearProgram& lp, const LpSolution& sol) {
  if (sol.status != LpStatus::Optimal) throw Error("check_duality requires an Optimal solution");
  DualityReport rep;
  const int n = lp.num_vars();
  const int m = lp.num_rows();
  const Eigen::VectorXd ax = m > 0 ? Eigen::VectorXd(lp.row_coeffs * sol.primal)
                                   : Eigen::VectorXd();

  for (int i = 0; i < m; ++i) {
    const double diff = ax[i] - lp.row_rhs[i];
    double viol = 0.0, slack = 0.0;
    switch (lp.row_rel[static_cast<std::size_t>(i)]) {
      case Rel::Le: viol = std::max(0.0, diff); slack = std::max(0.0, -diff); break;
      case Rel::Ge: viol = std::max(0.0, -diff); slack = std::max(0.0, diff); break;
      case Rel::Eq: viol = std::abs(diff); slack = 0.0; break;
    }
    rep.max_primal_residual = std::max(rep.max_primal_residual,
                                       viol / std::max(1.0, std::abs(lp.row_rhs[i])));
    const double y = sol.duals[i];
    double sign_viol = 0.0;
    if (lp.row_rel[static_cast<std::size_t>(i)] == Rel::Le) sign_viol = std::max(0.0, y);
    if (lp.row_rel[static_cast<std::size_t>(i)] == Rel::Ge) sign_viol = std::max(0.0, -y);
    rep.max_dual_residual = std::max(rep.max_dual_residual, sign_viol);
    rep.max_complementarity =
        std::max(rep.max_complementarity,
                 std::abs(y) * slack / std::max(1.0, std::abs(sol.objective)));
  }

  double dual_obj = m > 0 ? lp.row_rhs.dot(sol.duals) : 0.0;
  for (int j = 0; j < n; ++j) {
    const double x = sol.primal[j];
    const double rc = sol.reduced_costs[j];
    const double span = 1e-7 * (1.0 + std::abs(x));
    rep.max_primal_residual =
        std::max({rep.max_primal_residual, (lp.lower[j] - x) / std::max(1.0, std::abs(lp.lower[j])),
                  lp.upper[j] < kInf ? (x - lp.upper[j]) / std::max(1.0, std::abs(lp.upper[j]))
                                     : 0.0});
    const bool at_lo = x <= lp.lower[j] + span;
    const bool at_hi = lp.upper[j] < kInf && x >= lp.upper[j] - span;
    double dres = 0.0;
    if (at_lo && at_hi) {
      dres = 0.0;  // fixed variable, any rc is dual-feasible
    } else if (at_lo) {
      dres = std::max(0.0, -rc);
    } else if (at_hi) {
      dres = std::max(0.0, rc);
    } else {
      dres = std::abs(rc);
    }
    rep.max_dual_residual = std::max(rep.max_dual_residual, dres / std::max(1.0, std::abs(rc) + 1.0));
    if (rc > 0.0)
      dual_obj += rc * lp.lower[j];
    else if (rc < 0.0 && lp.upper[j] < kInf)
      dual_obj += rc * lp.upper[j];
  }
  rep.duality_gap =
      std::abs(sol.objective - dual_obj) / std::max(1.0, std::abs(sol.objective));
  return rep;
}

}  // namespace mscg
