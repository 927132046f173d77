#pragma once

#include <optional>
#include <span>

#include "mscg/master.hpp"
#include "mscg/sharing.hpp"

namespace mscg {

struct PricedCandidate {
  Eigen::VectorXi x_vec;
  // Objective value of this candidate in the node's pricing problem, i.e.
  // its reduced cost under the duals it was priced against.
  double reduced_cost = 0.0;
  bool cost_is_optimal = false;
};

struct PricingResult {
  double psi_lb = -kInf;  // valid lower bound on the pricing problem
  double psi_ub = kInf;   // best candidate value found
  bool exact = false;     // solver ran to completion (bound proof, not an early stop)
  std::vector<PricedCandidate> candidates;
  long work = 0;
};

class PricingOracle {
 public:
  virtual ~PricingOracle() = default;
  // bound_slack is an absolute tolerance the solve may leave in its bound
  // proof; psi_lb must remain a valid lower bound regardless. `excluded`
  // lists state vectors the node must not price again (columns discarded by
  // sharing, which are provably infeasible for the original problem).
  virtual PricingResult price(NodeId n, const DualPrices& duals, SolveMode mode,
                              int candidate_limit, double bound_slack,
                              std::span<const Eigen::VectorXi> excluded) const = 0;
};

struct Bounds {
  double lb = -kInf;
  double z_rm = kInf;
};

// LB <- max(LB, z_rm + sum psi_lb). Throws when the list size differs from
// expected_nodes (every priced node must report).
Bounds update_lower_bound(Bounds bounds, double z_rm, std::span<const double> psi_lb,
                          int expected_nodes);

// |ub - lb| / max(|ub|, 1e-10); +inf while lb is -inf. Throws if lb exceeds
// ub beyond tolerance.
double relative_gap(double lb, double ub);

struct EngineConfig {
  double eps = 1e-4;  // relative gap tolerance
  int max_iterations = 500;
  double wall_time_limit_s = kInf;
  bool sharing_enabled = false;
  SolveMode pricing_mode = SolveMode::Exact;
  int candidate_limit = 5;
  int worker_count = 1;
  std::uint64_t seed = 0;  // recorded in logs; the loop itself is deterministic
  // Share only when the gap stalls (off by default: share every iteration).
  bool share_when_stalled = false;
  int stall_window = 3;
  double stall_min_gap_delta = 1e-6;
  // Pricing bound slack = slack_factor * eps * max(1,|z_rm|) / #nodes.
  double pricing_slack_factor = 0.25;
  GlobalOptions recovery_opts = [] {
    GlobalOptions g;
    g.abs_tol = 1e-9;
    g.rel_tol = 1e-9;
    return g;
  }();
};

enum class RunStatus { Converged, TimeLimit, IterationLimit, StalledInfeasible, Stalled };
const char* to_string(RunStatus s);

struct IterationRecord {
  int iter = 0;
  double z_rm = 0.0;
  double lb = -kInf;
  double gap = kInf;
  int cols_added = 0;
  int cols_shared = 0;
  int cols_discarded = 0;
  double t_master_ms = 0.0;
  double t_pricing_ms = 0.0;  // summed over nodes
  double t_sharing_ms = 0.0;  // summed over pairs
  double t_pricing_max_ms = 0.0;
  double t_sharing_max_ms = 0.0;
  long det_master = 0;  // deterministic work units
  long det_pricing = 0;
  long det_sharing = 0;
  double artificial_mass = 0.0;
  bool exact_round = false;
};

struct RunResult {
  RunStatus status = RunStatus::Stalled;
  double lb = -kInf;
  double z_rm_final = kInf;
  double cg_gap = kInf;  // relative gap between lb and z_rm at exit
  // Best integer-feasible objective (min-sense); +inf if none.
  double incumbent_objective = kInf;
  double final_gap = kInf;  // relative gap between lb and the incumbent
  std::optional<IntegerMasterSolution> incumbent;
  std::vector<IterationRecord> log;
  int columns_initial = 0;
  int columns_priced = 0;
  int columns_shared = 0;
  int columns_discarded = 0;
  double wall_ms = 0.0;
  double perfect_parallel_ms = 0.0;
  double sharing_time_pct = 0.0;  // share of pricing+sharing time spent sharing
};

// Column generation with bound bookkeeping, inexact pricing support, a
// worker pool for pricing and sharing, and integer recovery on convergence.
// Deterministic for fixed inputs and config at any worker_count.
RunResult run(const ScenarioTree& tree, MasterModel& master, const PricingOracle& oracle,
              const ShareEvaluator* share_evaluator, const EngineConfig& config);

}  // namespace mscg
