#include <doctest.h>

#include "oracles.hpp"

using namespace mscg;

TEST_CASE("fullspace model sizes match the reference statistics") {
  const FactorableModel a = build_fullspace(sample_instance(5, 3, 3, 1));
  CHECK(a.num_binary_vars() == 35);
  CHECK(a.num_continuous_vars() == 294);
  const FactorableModel b = build_fullspace(sample_instance(12, 10, 3, 1));
  CHECK(b.num_binary_vars() == 84);
  CHECK(b.num_continuous_vars() == 1960);
  const FactorableModel c = build_fullspace(sample_instance(2, 2, 2, 1));
  CHECK(c.num_binary_vars() == 6);       // 2 tanks x 3 non-leaf nodes
  CHECK(c.num_continuous_vars() == 48);  // (2+2+4) x 6 non-root nodes
}

TEST_CASE("sampling follows the stated distributions and is deterministic") {
  const BlendingInstance inst = sample_instance(4, 3, 4, 99);
  CHECK(inst.tree.branching() == std::vector<int>{1, 2, 2, 2, 2});
  for (int i = 0; i < inst.tanks; ++i) {
    CHECK(inst.capacity[i] >= 500.0);
    CHECK(inst.capacity[i] <= 3000.0 * 10.0);  // may be rescaled upward
    CHECK(inst.quality[i] >= 0.0);
    CHECK(inst.quality[i] <= 1.0);
    // install costs strictly decreasing over periods
    for (int t = 1; t < inst.periods; ++t)
      CHECK(inst.install_cost(i, t) < inst.install_cost(i, t - 1));
    for (int t = 0; t < inst.periods; ++t) {
      CHECK(inst.production_cost(i, t) >= 10.0);
      CHECK(inst.production_cost(i, t) <= 20.0);
    }
  }
  for (NodeId n = 1; n < inst.tree.node_count(); ++n) {
    double sum_min = 0.0;
    for (int j = 0; j < inst.outputs; ++j) {
      CHECK(inst.demand_min(j, n) < inst.demand_max(j, n));
      CHECK(inst.demand_min(j, n) >= 100.0);
      CHECK(inst.demand_max(j, n) <= 10000.0);
      sum_min += inst.demand_min(j, n);
    }
    CHECK(sum_min <= inst.capacity.sum());  // all-tanks column feasible
  }
  const BlendingInstance again = sample_instance(4, 3, 4, 99);
  CHECK(inst.capacity == again.capacity);
  CHECK(inst.demand_min == again.demand_min);
  const BlendingInstance other = sample_instance(4, 3, 4, 100);
  CHECK(inst.capacity != other.capacity);
}

TEST_CASE("instance JSON round-trips byte-for-byte") {
  const BlendingInstance inst = sample_instance(3, 2, 2, 7);
  const std::string once = instance_to_json(inst);
  const std::string twice = instance_to_json(instance_from_json(once));
  CHECK(once == twice);
  CHECK_THROWS_AS((void)instance_from_json("{\"format\":\"other\"}"), Error);
}

TEST_CASE("single-tank single-output node has the closed-form optimum") {
  // lambda = 1 forces c = 1; margin = m + l - r - b per unit of demand.
  BlendingInstance inst;
  inst.tanks = 1;
  inst.outputs = 1;
  inst.periods = 1;
  inst.seed = 0;
  inst.tree = build_tree({1, 2});
  inst.capacity = Eigen::VectorXd::Constant(1, 50.0);
  inst.quality = Eigen::VectorXd::Constant(1, 1.0);
  inst.install_cost = Eigen::MatrixXd::Constant(1, 1, 10.0);
  inst.production_cost = Eigen::MatrixXd::Constant(1, 1, 2.0);
  inst.transport_cost = Eigen::MatrixXd::Constant(1, 1, 0.5);
  inst.price_slope = Eigen::MatrixXd::Constant(1, 1, 10.0);
  inst.price_intercept = Eigen::MatrixXd::Constant(1, 1, 3.0);
  inst.demand_min = Eigen::MatrixXd::Constant(1, 3, 5.0);
  inst.demand_max = Eigen::MatrixXd::Constant(1, 3, 20.0);

  const int n_linking = 1 * static_cast<int>(inst.interior_nodes().size()) +
                        1 * static_cast<int>(inst.nonroot_nodes().size());
  DualPrices duals;
  duals.gamma = Eigen::VectorXd::Zero(n_linking);
  duals.mu = Eigen::VectorXd::Zero(2);

  const PricingResult pr = price_node(inst, 1, duals, SolveMode::Exact, 5, 1e-9);
  REQUIRE(pr.exact);
  REQUIRE(!pr.candidates.empty());
  const double margin = 10.0 + 3.0 - 0.5 - 2.0;
  const double expected = -0.5 * margin * 20.0;  // p_n * margin * d_max, min-sense
  CHECK(pr.psi_ub == doctest::Approx(expected).epsilon(1e-6));
  CHECK(pr.candidates[0].x_vec[0] == 1);
  CHECK(pr.candidates[0].reduced_cost == doctest::Approx(expected).epsilon(1e-6));
  // with zero duals and a feasible all-tanks vector the best value is <= 0
  CHECK(pr.psi_ub <= 0.0);
}

TEST_CASE("pricing matches the exhaustive state enumeration oracle") {
  const BlendingInstance inst = sample_instance(3, 2, 2, 11);
  const int n_linking =
      inst.tanks * static_cast<int>(inst.interior_nodes().size() + inst.nonroot_nodes().size());
  DualPrices duals;
  duals.gamma = Eigen::VectorXd::Zero(n_linking);
  duals.mu = Eigen::VectorXd::Zero(static_cast<int>(inst.nonroot_nodes().size()));
  for (NodeId n = 1; n < inst.tree.node_count(); ++n) {
    double best = kInf;
    for (int mask = 0; mask < (1 << inst.tanks); ++mask) {
      Eigen::VectorXi w(inst.tanks);
      for (int i = 0; i < inst.tanks; ++i) w[i] = (mask >> i) & 1;
      const ShareResult r = evaluate_share(inst, n, w);
      if (std::holds_alternative<ShareFeasible>(r))
        best = std::min(best, std::get<ShareFeasible>(r).cost);
    }
    const PricingResult pr = price_node(inst, n, duals, SolveMode::Exact, 5, 1e-9);
    REQUIRE(pr.exact);
    CHECK(std::abs(pr.psi_ub - best) <= 1e-6 * std::max(1.0, std::abs(best)));
    CHECK(pr.psi_lb <= best + 1e-7 * std::max(1.0, std::abs(best)));
  }
}

TEST_CASE("share evaluation: no tanks is infeasible, all tanks is feasible") {
  const BlendingInstance inst = sample_instance(2, 2, 2, 13);
  const Eigen::VectorXi none = Eigen::VectorXi::Zero(2);
  const Eigen::VectorXi all = Eigen::VectorXi::Ones(2);
  for (NodeId n = 1; n < inst.tree.node_count(); ++n) {
    CHECK(std::holds_alternative<ShareInfeasible>(evaluate_share(inst, n, none)));
    CHECK(std::holds_alternative<ShareFeasible>(evaluate_share(inst, n, all)));
  }
  CHECK_THROWS_AS((void)evaluate_share(inst, 0, all), Error);
}

TEST_CASE("candidate costs equal their own share evaluation") {
  const BlendingInstance inst = sample_instance(2, 2, 2, 17);
  MasterModel master = build_master(inst);
  const RelaxedMasterSolution sol = master.solve_relaxed();
  for (NodeId n = 1; n < inst.tree.node_count(); ++n) {
    const PricingResult pr = price_node(inst, n, sol.duals, SolveMode::Exact, 5, 1e-9);
    for (const PricedCandidate& cand : pr.candidates) {
      const double cost = cand.reduced_cost + master.dual_weight(n, sol.duals, cand.x_vec) +
                          sol.duals.mu[master.pooled_index(n)];
      const ShareResult r = evaluate_share(inst, n, cand.x_vec);
      REQUIRE(std::holds_alternative<ShareFeasible>(r));
      const double zeta = std::get<ShareFeasible>(r).cost;
      CHECK(std::abs(zeta - cost) <= 1e-6 * std::max(1.0, std::abs(zeta)));
      CHECK(cand.cost_is_optimal);
    }
  }
}

TEST_CASE("excluded vectors are never priced again") {
  const BlendingInstance inst = sample_instance(2, 2, 2, 19);
  const int n_linking =
      inst.tanks * static_cast<int>(inst.interior_nodes().size() + inst.nonroot_nodes().size());
  DualPrices duals;
  duals.gamma = Eigen::VectorXd::Zero(n_linking);
  duals.mu = Eigen::VectorXd::Zero(static_cast<int>(inst.nonroot_nodes().size()));
  const PricingResult first = price_node(inst, 1, duals, SolveMode::Exact, 5, 1e-9);
  REQUIRE(!first.candidates.empty());
  const Eigen::VectorXi banned = first.candidates[0].x_vec;
  std::vector<Eigen::VectorXi> excluded{banned};
  const PricingResult second = price_node(inst, 1, duals, SolveMode::Exact, 5, 1e-9, excluded);
  for (const PricedCandidate& cand : second.candidates) CHECK(cand.x_vec != banned);
  CHECK(second.psi_lb >= first.psi_lb - 1e-7);
}

TEST_CASE("master structure: row and dual dimensions") {
  const BlendingInstance inst = sample_instance(2, 2, 2, 23);
  MasterModel master = build_master(inst);
  const int interior = static_cast<int>(inst.interior_nodes().size());
  const int nonroot = static_cast<int>(inst.nonroot_nodes().size());
  CHECK(master.num_linking_rows() == inst.tanks * (interior + nonroot));
  CHECK(master.pooled_nodes().size() == static_cast<std::size_t>(nonroot));  // convexity rows
  CHECK(nonroot == 6);
  const RelaxedMasterSolution sol = master.solve_relaxed();
  CHECK(sol.duals.gamma.size() == inst.tanks * (interior + nonroot));
  CHECK(sol.duals.mu.size() == nonroot);
  // the all-tanks seed pool admits a consistent assignment: no artificials
  CHECK(sol.artificial_mass <= 1e-9);
}

TEST_CASE("augmented and path-sum fullspace forms agree") {
  const BlendingInstance inst = sample_instance(2, 2, 2, 29);
  GlobalOptions opts;
  opts.rel_tol = 1e-8;
  const GlobalResult plain = solve_global(build_fullspace(inst), opts);
  const GlobalResult aug = solve_global(build_fullspace_augmented(inst), opts);
  REQUIRE(plain.status == GlobalStatus::Optimal);
  REQUIRE(aug.status == GlobalStatus::Optimal);
  CHECK(std::abs(plain.upper_bound - aug.upper_bound) <=
        1e-6 * std::max(1.0, std::abs(plain.upper_bound)));
}

TEST_CASE("restricted master over complete pools equals the exhaustive optimum") {
  const BlendingInstance inst = sample_instance(2, 2, 2, 37);
  MasterModel master = build_master(inst);
  for (NodeId n = 1; n < inst.tree.node_count(); ++n) {
    for (int mask = 0; mask < (1 << inst.tanks); ++mask) {
      Eigen::VectorXi w(inst.tanks);
      for (int i = 0; i < inst.tanks; ++i) w[i] = (mask >> i) & 1;
      const ShareResult r = evaluate_share(inst, n, w);
      if (std::holds_alternative<ShareFeasible>(r))
        master.add_column(
            Column{n, w, std::get<ShareFeasible>(r).cost, true, ColumnOrigin::Initial});
    }
  }
  GlobalOptions opts;
  opts.rel_tol = 1e-9;
  const IntegerMasterSolution ip = master.solve_integer(opts);
  REQUIRE(ip.status == GlobalStatus::Optimal);
  const double oracle = oracles::enumerate_blending_optimum(inst);
  CHECK(std::abs(ip.objective - oracle) <= 1e-6 * std::max(1.0, std::abs(oracle)));
}

TEST_CASE("integer master solutions install each tank at most once per path") {
  const BlendingInstance inst = sample_instance(2, 2, 2, 31);
  MasterModel master = build_master(inst);
  const BlendingOracle oracle(inst);
  const BlendingShareEvaluator evaluator(inst);
  EngineConfig config;
  config.sharing_enabled = true;
  const RunResult res = run(inst.tree, master, oracle, &evaluator, config);
  REQUIRE(res.status == RunStatus::Converged);
  REQUIRE(res.incumbent.has_value());
  const auto nonleaf = inst.nonleaf_nodes();
  auto u_index = [&](int i, NodeId n) {
    const auto it = std::lower_bound(nonleaf.begin(), nonleaf.end(), n);
    return static_cast<int>(it - nonleaf.begin()) * inst.tanks + i;
  };
  for (NodeId leaf : inst.tree.leaves()) {
    auto path = path_to_parent(inst.tree, leaf);
    for (int i = 0; i < inst.tanks; ++i) {
      double installs = 0.0;
      for (NodeId a : path) installs += res.incumbent->u[u_index(i, a)];
      CHECK(installs <= 1.0 + 1e-6);
    }
  }
}
