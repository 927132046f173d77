#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mscg/common.hpp"

namespace mscg {

enum class Rel { Le, Eq, Ge };

// Dense LP in minimization form: min c'x s.t. a_i'x {<=,=,>=} b_i,
// lo <= x <= hi. Lower bounds must be finite; upper bounds may be +inf.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd row_coeffs;  // num_rows x num_vars
  std::vector<Rel> row_rel;
  Eigen::VectorXd row_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(row_rel.size()); }
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalBreakdown };
const char* to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::NumericalBreakdown;
  double objective = 0.0;
  Eigen::VectorXd primal;
  // Row duals in min-sense convention: >= rows have duals >= 0, <= rows have
  // duals <= 0, equality rows are free.
  Eigen::VectorXd duals;
  Eigen::VectorXd reduced_costs;
  long pivots = 0;  // deterministic work counter
};

// Two-phase bounded revised simplex, Dantzig pricing with a Bland fallback
// after 10*(rows+cols) pivots. Deterministic for identical inputs.
LpSolution solve_lp(const LinearProgram& lp);

struct DualityReport {
  double max_primal_residual = 0.0;
  double max_dual_residual = 0.0;
  double max_complementarity = 0.0;
  double duality_gap = 0.0;  // relative
  bool within(double tol = 1e-7) const {
    return max_primal_residual <= tol && max_dual_residual <= tol &&
           max_complementarity <= tol && duality_gap <= tol;
  }
};

// Diagnostic residuals for an Optimal solution.
DualityReport check_duality(const LinearProgram& lp, const LpSolution& sol);

}  // namespace mscg
