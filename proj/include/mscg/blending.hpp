#pragma once

#include "mscg/engine.hpp"
#include "mscg/scenario_tree.hpp"

namespace mscg {

// Multistage blending instance: |I| input tanks with capacities and quality
// specs, |J| output tanks with affine price functions f_jt(c) = m_jt*c + l_jt,
// demand-bound uncertainty realized per non-root tree node. The tree has
// periods+1 stages with two branches per period. Installation decisions x_in
// live on non-leaf nodes (period = stage); flows, qualities and demands live
// on non-root nodes (period = stage - 1).
struct BlendingInstance {
  int tanks = 0;    // |I|
  int outputs = 0;  // |J|
  int periods = 0;  // |T|
  std::uint64_t seed = 0;
  ScenarioTree tree;
  Eigen::VectorXd capacity;         // C_i
  Eigen::VectorXd quality;          // lambda_i in [0,1]
  Eigen::MatrixXd install_cost;     // q(i, t), t = 0..periods-1
  Eigen::MatrixXd production_cost;  // b(i, t)
  Eigen::MatrixXd transport_cost;   // r(i, j)
  Eigen::MatrixXd price_slope;      // m(j, t)
  Eigen::MatrixXd price_intercept;  // l(j, t)
  Eigen::MatrixXd demand_min;       // (j, node id); root column unused
  Eigen::MatrixXd demand_max;

  int flow_period(NodeId n) const { return tree.node(n).stage - 2; }     // 0-based
  int install_period(NodeId n) const { return tree.node(n).stage - 1; }  // 0-based
  std::vector<NodeId> nonroot_nodes() const;
  std::vector<NodeId> nonleaf_nodes() const;
  std::vector<NodeId> interior_nodes() const;  // non-root and non-leaf
};

// Samples an instance; demand draws are retried (then capacities rescaled)
// until the all-tanks configuration can cover every node's minimum demand.
// Deterministic for a given seed.
BlendingInstance sample_instance(int tanks, int outputs, int periods, std::uint64_t seed);

// Extensive-form stochastic program over the scenario tree, minimization
// sense (profit negated), capacity written through root-to-parent path sums.
FactorableModel build_fullspace(const BlendingInstance& inst);

// Same model with explicit per-node install-state variables w_in tied to the
// path sums; used to check the two forms agree.
FactorableModel build_fullspace_augmented(const BlendingInstance& inst);

// Dantzig-Wolfe master for the instance: globals u = x_in on non-leaf nodes,
// per-tank linking rows (interior: sum_k rho w* + x <= 1; non-root:
// sum_k rho w* = path sum of x), one convexity row per non-root node. Pools
// are seeded with the always-feasible all-tanks column plus columns extracted
// from an expected-value solve, and the seed solution's objective is recorded
// as the initial incumbent.
MasterModel build_master(const BlendingInstance& inst);

// Pricing problem for non-root node n under the given master duals; returns
// up to `limit` distinct installed-set vectors with negative reduced cost.
// Candidate costs are re-evaluated exactly with the state vector fixed, so
// every candidate carries its optimal cost. Vectors in `excluded` are cut
// off with no-good rows and never returned.
PricingResult price_node(const BlendingInstance& inst, NodeId n, const DualPrices& duals,
                         SolveMode mode, int limit, double bound_slack,
                         std::span<const Eigen::VectorXi> excluded = {});

// Cost of a fixed installed-set vector at node n (the column-cost problem):
// only the continuous stage variables remain.
ShareResult evaluate_share(const BlendingInstance& inst, NodeId n, const Eigen::VectorXi& w);

class BlendingOracle : public PricingOracle {
 public:
  explicit BlendingOracle(const BlendingInstance& inst) : inst_(inst) {}
  PricingResult price(NodeId n, const DualPrices& duals, SolveMode mode, int candidate_limit,
                      double bound_slack,
                      std::span<const Eigen::VectorXi> excluded) const override {
    return price_node(inst_, n, duals, mode, candidate_limit, bound_slack, excluded);
  }

 private:
  const BlendingInstance& inst_;
};

class BlendingShareEvaluator : public ShareEvaluator {
 public:
  explicit BlendingShareEvaluator(const BlendingInstance& inst) : inst_(inst) {}
  ShareResult evaluate(NodeId n, const Eigen::VectorXi& x_vec) const override {
    return evaluate_share(inst_, n, x_vec);
  }

 private:
  const BlendingInstance& inst_;
};

// Instance JSON (self-describing: dims, branching, all sampled parameters
// keyed by node id, seed, generator version).
std::string instance_to_json(const BlendingInstance& inst);
BlendingInstance instance_from_json(const std::string& text);

}  // namespace mscg
