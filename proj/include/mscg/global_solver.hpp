#pragma once

#include <functional>
#include <vector>

#include "mscg/factorable.hpp"

namespace mscg {

enum class GlobalStatus { Optimal, Infeasible, BoundsOnly, TimeOut };
const char* to_string(GlobalStatus s);

enum class SolveMode { Exact, FirstImproving };

struct GlobalOptions {
  double abs_tol = 1e-9;
  double rel_tol = 1e-6;
  SolveMode mode = SolveMode::Exact;
  double improve_threshold = 0.0;  // FirstImproving: stop once incumbent < this
  double time_limit_s = kInf;
  long node_limit = 1000000;
  int pool_size = 16;     // distinct integer assignments kept in the pool
  double feas_tol = 1e-6;  // incumbent acceptance threshold on max_violation
  std::function<void(double lb, double ub)> trace;  // after each node expansion
};

struct PoolEntry {
  Eigen::VectorXd point;
  double objective;
};

struct GlobalResult {
  GlobalStatus status = GlobalStatus::BoundsOnly;
  double lower_bound = -kInf;
  double upper_bound = kInf;
  Eigen::VectorXd incumbent;  // empty when no feasible point was found
  // Best accepted point per distinct integer assignment, ascending objective.
  std::vector<PoolEntry> pool;
  long nodes = 0;
  long work = 0;  // accumulated simplex pivots across node relaxations
};

// Deterministic global minimization of a factorable MINLP: best-first
// branch-and-bound, branching on the most fractional integer variable first
// and otherwise on the bilinear link with the largest violation at the node
// relaxation point. At every moment lower_bound <= global optimum <=
// upper_bound; Optimal means the gap closed to max(abs_tol, rel_tol*|ub|).
GlobalResult solve_global(const FactorableModel& model, const GlobalOptions& opts = {});

// Spatial branch point: the relaxation value clamped to the central 60% of
// [lo, hi]; falls back to bisection when the point sits at a bound. Strictly
// interior whenever lo < hi.
double branch_point(double lo, double hi, double x);

}  // namespace mscg
