#include "mscg/blending.hpp"

#include <algorithm>
#include <cmath>

#include "mscg/rng.hpp"

namespace mscg {

namespace {

// Stage-variable block for one non-root node: qualities c_j, demands d_j,
// flows F_ij, plus the product carriers P_j = c_j*d_j (blending balance) and
// V_ij = c_j*F_ij (revenue terms). Returns the first index of each group.
struct StageBlock {
  int c0, d0, f0;
  int f(int i, int j, int outputs) const { return f0 + i * outputs + j; }
};

StageBlock add_stage_block(FactorableModel& model, const BlendingInstance& inst, NodeId n) {
  const int I = inst.tanks, J = inst.outputs;
  StageBlock blk{};
  blk.c0 = model.num_vars();
  for (int j = 0; j < J; ++j) model.add_variable(0.0, 1.0);
  blk.d0 = model.num_vars();
  for (int j = 0; j < J; ++j)
    model.add_variable(inst.demand_min(j, n), inst.demand_max(j, n));
  blk.f0 = model.num_vars();
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      model.add_variable(0.0, std::min(inst.capacity[i], inst.demand_max(j, n)));

  const int p = inst.flow_period(n);
  const double pn = inst.tree.node(n).probability;
  // Objective (min-sense): transport + production - revenue.
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      model.add_objective_term(
          blk.f(i, j, J),
          pn * (inst.transport_cost(i, j) + inst.production_cost(i, p) - inst.price_intercept(j, p)));

  for (int j = 0; j < J; ++j) {
    const int pj = model.add_product(blk.c0 + j, blk.d0 + j);
    std::vector<LinearTerm> blend{{pj, -1.0}};
    for (int i = 0; i < I; ++i) blend.push_back({blk.f(i, j, J), inst.quality[i]});
    model.add_row(std::move(blend), Rel::Eq, 0.0);

    std::vector<LinearTerm> demand{{blk.d0 + j, -1.0}};
    for (int i = 0; i < I; ++i) demand.push_back({blk.f(i, j, J), 1.0});
    model.add_row(std::move(demand), Rel::Eq, 0.0);

    // Demand row multiplied through by c_j: sum_i V_ij = P_j. Implied at
    // every feasible point; keeps the relaxation tight in the revenue terms.
    std::vector<LinearTerm> rlt{{pj, -1.0}};
    for (int i = 0; i < I; ++i) {
      const int vij = model.add_product(blk.c0 + j, blk.f(i, j, J));
      model.add_objective_term(vij, -pn * inst.price_slope(j, p));
      rlt.push_back({vij, 1.0});
    }
    model.add_row(std::move(rlt), Rel::Eq, 0.0);
  }
  return blk;
}

void add_capacity_rows(FactorableModel& model, const BlendingInstance& inst, const StageBlock& blk,
                       const std::vector<std::vector<LinearTerm>>& extra_terms,
                       const Eigen::VectorXd& rhs) {
  const int I = inst.tanks, J = inst.outputs;
  for (int i = 0; i < I; ++i) {
    std::vector<LinearTerm> row;
    for (int j = 0; j < J; ++j) row.push_back({blk.f(i, j, J), 1.0});
    for (const auto& t : extra_terms[static_cast<std::size_t>(i)]) row.push_back(t);
    model.add_row(std::move(row), Rel::Le, rhs[i]);
  }
}

// Deterministic single-branch instance with demand bounds at stage means,
// used to extract warm-start columns.
BlendingInstance expected_value_instance(const BlendingInstance& inst) {
  BlendingInstance ev = inst;
  ev.tree = build_tree(std::vector<int>(static_cast<std::size_t>(inst.periods) + 1, 1));
  ev.demand_min.setZero(inst.outputs, ev.tree.node_count());
  ev.demand_max.setZero(inst.outputs, ev.tree.node_count());
  for (int s = 2; s <= inst.tree.stage_count(); ++s) {
    const auto nodes = inst.tree.stage_nodes(s);
    for (int j = 0; j < inst.outputs; ++j) {
      double lo = 0.0, hi = 0.0;
      for (NodeId n : nodes) {
        lo += inst.demand_min(j, n);
        hi += inst.demand_max(j, n);
      }
      ev.demand_min(j, s - 1) = lo / static_cast<double>(nodes.size());
      ev.demand_max(j, s - 1) = hi / static_cast<double>(nodes.size());
    }
  }
  return ev;
}

}  // namespace

std::vector<NodeId> BlendingInstance::nonroot_nodes() const {
  std::vector<NodeId> out;
  for (NodeId n = 1; n < tree.node_count(); ++n) out.push_back(n);
  return out;
}

std::vector<NodeId> BlendingInstance::nonleaf_nodes() const {
  std::vector<NodeId> out;
  for (NodeId n = 0; n < tree.node_count(); ++n)
    if (!tree.is_leaf(n)) out.push_back(n);
  return out;
}

std::vector<NodeId> BlendingInstance::interior_nodes() const {
  std::vector<NodeId> out;
  for (NodeId n = 1; n < tree.node_count(); ++n)
    if (!tree.is_leaf(n)) out.push_back(n);
  return out;
}

BlendingInstance sample_instance(int tanks, int outputs, int periods, std::uint64_t seed) {
  if (tanks < 1 || outputs < 1 || periods < 1)
    throw Error("invalid dimensions: tanks, outputs and periods must be >= 1");
  BlendingInstance inst;
  inst.tanks = tanks;
  inst.outputs = outputs;
  inst.periods = periods;
  inst.seed = seed;

  Rng rng(seed);
  inst.capacity.resize(tanks);
  for (int i = 0; i < tanks; ++i) inst.capacity[i] = rng.uniform(0.5, 3.0) * 1e3;
  inst.quality.resize(tanks);
  for (int i = 0; i < tanks; ++i) inst.quality[i] = rng.uniform(0.0, 1.0);

  // One install-cost draw per tank; the (|T| - t + 1) factor makes q_it
  // strictly decreasing over time.
  const double cap_sum = inst.capacity.sum();
  inst.install_cost.resize(tanks, periods);
  for (int i = 0; i < tanks; ++i) {
    const double draw = rng.uniform(200.0, 400.0);
    for (int t = 0; t < periods; ++t)
      inst.install_cost(i, t) =
          static_cast<double>(periods - t) * draw * 1e3 * inst.capacity[i] / cap_sum;
  }
  inst.production_cost.resize(tanks, periods);
  for (int i = 0; i < tanks; ++i)
    for (int t = 0; t < periods; ++t) inst.production_cost(i, t) = rng.uniform(10.0, 20.0);
  inst.transport_cost.resize(tanks, outputs);
  for (int i = 0; i < tanks; ++i)
    for (int j = 0; j < outputs; ++j) inst.transport_cost(i, j) = rng.uniform(0.1, 0.2);
  inst.price_slope.resize(outputs, periods);
  for (int j = 0; j < outputs; ++j)
    for (int t = 0; t < periods; ++t) inst.price_slope(j, t) = rng.uniform(20.0, 50.0);
  inst.price_intercept.resize(outputs, periods);
  for (int j = 0; j < outputs; ++j)
    for (int t = 0; t < periods; ++t) inst.price_intercept(j, t) = rng.uniform(5.0, 20.0);

  std::vector<int> branching(static_cast<std::size_t>(periods) + 1, 2);
  branching[0] = 1;
  inst.tree = build_tree(branching);

  inst.demand_min.setZero(outputs, inst.tree.node_count());
  inst.demand_max.setZero(outputs, inst.tree.node_count());
  double worst_min = 0.0;
  for (NodeId n = 1; n < inst.tree.node_count(); ++n) {
    double sum_min = 0.0;
    for (int attempt = 0; attempt < 100; ++attempt) {
      sum_min = 0.0;
      for (int j = 0; j < outputs; ++j) {
        inst.demand_min(j, n) = rng.uniform(0.1, 2.0) * 1e3;
        inst.demand_max(j, n) = rng.uniform(5.0, 10.0) * 1e3;
        sum_min += inst.demand_min(j, n);
      }
      if (sum_min <= cap_sum) break;
    }
    worst_min = std::max(worst_min, sum_min);
  }
  if (worst_min > cap_sum) {
    // Retries exhausted at some node: scale all capacities up, which keeps
    // the install-cost ratios C_i / sum C unchanged.
    inst.capacity *= 1.05 * worst_min / cap_sum;
  }
  for (NodeId n = 1; n < inst.tree.node_count(); ++n) {
    double s = 0.0;
    for (int j = 0; j < outputs; ++j) s += inst.demand_min(j, n);
    if (s > inst.capacity.sum())
      throw InfeasibleError("instance generation failed at node " + std::to_string(n));
  }
  return inst;
}

FactorableModel build_fullspace(const BlendingInstance& inst) {
  const int I = inst.tanks;
  FactorableModel model;
  const auto nonleaf = inst.nonleaf_nodes();
  auto x_index = [&](int i, NodeId n) {
    const auto it = std::lower_bound(nonleaf.begin(), nonleaf.end(), n);
    return static_cast<int>(it - nonleaf.begin()) * I + i;
  };
  for (NodeId n : nonleaf)
    for (int i = 0; i < I; ++i) {
      const int v = model.add_variable(0.0, 1.0, true);
      model.add_objective_term(v, inst.tree.node(n).probability *
                                      inst.install_cost(i, inst.install_period(n)));
    }

  for (NodeId n : inst.nonroot_nodes()) {
    const StageBlock blk = add_stage_block(model, inst, n);
    const auto path = path_to_parent(inst.tree, n);
    std::vector<std::vector<LinearTerm>> cap_terms(static_cast<std::size_t>(I));
    for (int i = 0; i < I; ++i)
      for (NodeId a : path)
        cap_terms[static_cast<std::size_t>(i)].push_back({x_index(i, a), -inst.capacity[i]});
    add_capacity_rows(model, inst, blk, cap_terms, Eigen::VectorXd::Zero(I));
    if (!inst.tree.is_leaf(n)) {
      for (int i = 0; i < I; ++i) {
        std::vector<LinearTerm> once{{x_index(i, n), 1.0}};
        for (NodeId a : path) once.push_back({x_index(i, a), 1.0});
        model.add_row(std::move(once), Rel::Le, 1.0);
      }
    }
  }
  return model;
}

FactorableModel build_fullspace_augmented(const BlendingInstance& inst) {
  const int I = inst.tanks;
  FactorableModel model;
  const auto nonleaf = inst.nonleaf_nodes();
  auto x_index = [&](int i, NodeId n) {
    const auto it = std::lower_bound(nonleaf.begin(), nonleaf.end(), n);
    return static_cast<int>(it - nonleaf.begin()) * I + i;
  };
  for (NodeId n : nonleaf)
    for (int i = 0; i < I; ++i) {
      const int v = model.add_variable(0.0, 1.0, true);
      model.add_objective_term(v, inst.tree.node(n).probability *
                                      inst.install_cost(i, inst.install_period(n)));
    }

  for (NodeId n : inst.nonroot_nodes()) {
    std::vector<int> w(static_cast<std::size_t>(I));
    for (int i = 0; i < I; ++i) w[static_cast<std::size_t>(i)] = model.add_variable(0.0, 1.0, true);
    const StageBlock blk = add_stage_block(model, inst, n);
    const auto path = path_to_parent(inst.tree, n);
    for (int i = 0; i < I; ++i) {
      std::vector<LinearTerm> def{{w[static_cast<std::size_t>(i)], 1.0}};
      for (NodeId a : path) def.push_back({x_index(i, a), -1.0});
      model.add_row(std::move(def), Rel::Eq, 0.0);
    }
    std::vector<std::vector<LinearTerm>> cap_terms(static_cast<std::size_t>(I));
    for (int i = 0; i < I; ++i)
      cap_terms[static_cast<std::size_t>(i)].push_back(
          {w[static_cast<std::size_t>(i)], -inst.capacity[i]});
    add_capacity_rows(model, inst, blk, cap_terms, Eigen::VectorXd::Zero(I));
    if (!inst.tree.is_leaf(n)) {
      for (int i = 0; i < I; ++i)
        model.add_row({{w[static_cast<std::size_t>(i)], 1.0}, {x_index(i, n), 1.0}}, Rel::Le, 1.0);
    }
  }
  return model;
}

ShareResult evaluate_share(const BlendingInstance& inst, NodeId n, const Eigen::VectorXi& w) {
  if (inst.tree.is_root(n)) throw Error("root node has no column space");
  if (w.size() != inst.tanks) throw Error("dimension mismatch: state vector");
  FactorableModel model;
  const StageBlock blk = add_stage_block(model, inst, n);
  Eigen::VectorXd rhs(inst.tanks);
  for (int i = 0; i < inst.tanks; ++i) rhs[i] = inst.capacity[i] * static_cast<double>(w[i]);
  add_capacity_rows(model, inst, blk, std::vector<std::vector<LinearTerm>>(
                                          static_cast<std::size_t>(inst.tanks)),
                    rhs);
  GlobalOptions opts;
  opts.abs_tol = 1e-7;
  opts.rel_tol = 1e-9;
  opts.node_limit = 200000;
  const GlobalResult res = solve_global(model, opts);
  if (res.status == GlobalStatus::Infeasible) return ShareInfeasible{res.work};
  if (res.status != GlobalStatus::Optimal)
    throw Error("column cost evaluation did not complete at node " + std::to_string(n));
  return ShareFeasible{res.upper_bound, res.work};
}

PricingResult price_node(const BlendingInstance& inst, NodeId n, const DualPrices& duals,
                         SolveMode mode, int limit, double bound_slack,
                         std::span<const Eigen::VectorXi> excluded) {
  if (inst.tree.is_root(n)) throw Error("root node has no pricing problem");
  const int I = inst.tanks;
  const auto interior = inst.interior_nodes();
  const auto nonroot = inst.nonroot_nodes();
  const int interior_pos =
      static_cast<int>(std::lower_bound(interior.begin(), interior.end(), n) - interior.begin());
  const bool is_interior = interior_pos < static_cast<int>(interior.size()) &&
                           interior[static_cast<std::size_t>(interior_pos)] == n;
  const int nonroot_pos =
      static_cast<int>(std::lower_bound(nonroot.begin(), nonroot.end(), n) - nonroot.begin());
  const double mu_n = duals.mu[nonroot_pos];

  // Dual weight on w_i: gamma1 (interior only) + gamma2, matching the master
  // row layout from build_master.
  Eigen::VectorXd gamma_w = Eigen::VectorXd::Zero(I);
  for (int i = 0; i < I; ++i) {
    if (is_interior) gamma_w[i] += duals.gamma[interior_pos * I + i];
    gamma_w[i] += duals.gamma[static_cast<int>(interior.size()) * I + nonroot_pos * I + i];
  }

  FactorableModel model;
  std::vector<int> w(static_cast<std::size_t>(I));
  for (int i = 0; i < I; ++i) {
    w[static_cast<std::size_t>(i)] = model.add_variable(0.0, 1.0, true);
    model.add_objective_term(w[static_cast<std::size_t>(i)], -gamma_w[i]);
  }
  model.add_objective_constant(-mu_n);
  const StageBlock blk = add_stage_block(model, inst, n);
  std::vector<std::vector<LinearTerm>> cap_terms(static_cast<std::size_t>(I));
  for (int i = 0; i < I; ++i)
    cap_terms[static_cast<std::size_t>(i)].push_back(
        {w[static_cast<std::size_t>(i)], -inst.capacity[i]});
  add_capacity_rows(model, inst, blk, cap_terms, Eigen::VectorXd::Zero(I));

  // No-good rows cutting off discarded state vectors.
  for (const Eigen::VectorXi& bad : excluded) {
    if (bad.size() != I) throw Error("dimension mismatch: excluded vector");
    std::vector<LinearTerm> row;
    double rhs = 1.0;
    for (int i = 0; i < I; ++i) {
      if (bad[i] > 0) {
        row.push_back({w[static_cast<std::size_t>(i)], -1.0});
        rhs -= 1.0;
      } else {
        row.push_back({w[static_cast<std::size_t>(i)], 1.0});
      }
    }
    model.add_row(std::move(row), Rel::Ge, rhs);
  }

  GlobalOptions opts;
  opts.abs_tol = std::max(1e-9, bound_slack);
  opts.rel_tol = 1e-9;
  opts.node_limit = 200000;
  opts.pool_size = std::max(4 * limit, 16);
  opts.mode = mode;
  opts.improve_threshold = -std::max(1e-9, bound_slack);
  const GlobalResult res = solve_global(model, opts);
  if (res.status == GlobalStatus::Infeasible)
    throw InfeasibleError("pricing problem infeasible at node " + std::to_string(n) +
                          ": the instance admits no feasible state here");

  PricingResult pr;
  pr.psi_lb = res.lower_bound;
  pr.psi_ub = res.upper_bound;
  pr.exact = res.status == GlobalStatus::Optimal;
  pr.work = res.work;

  for (const PoolEntry& entry : res.pool) {
    Eigen::VectorXi wv(I);
    for (int i = 0; i < I; ++i)
      wv[i] = static_cast<int>(std::llround(entry.point[w[static_cast<std::size_t>(i)]]));
    double cost;
    try {
      const ShareResult sr = evaluate_share(inst, n, wv);
      if (std::holds_alternative<ShareInfeasible>(sr)) continue;
      cost = std::get<ShareFeasible>(sr).cost;
      pr.work += std::get<ShareFeasible>(sr).work;
    } catch (const Error&) {
      continue;
    }
    const double rc = cost - gamma_w.dot(wv.cast<double>()) - mu_n;
    if (rc < -1e-9) pr.candidates.push_back(PricedCandidate{wv, rc, true});
    pr.psi_ub = std::min(pr.psi_ub, rc);
  }
  std::stable_sort(pr.candidates.begin(), pr.candidates.end(),
                   [](const PricedCandidate& a, const PricedCandidate& b) {
                     return a.reduced_cost < b.reduced_cost;
                   });
  if (static_cast<int>(pr.candidates.size()) > limit)
    pr.candidates.resize(static_cast<std::size_t>(limit));
  return pr;
}

MasterModel build_master(const BlendingInstance& inst) {
  const int I = inst.tanks;
  MasterModel master;
  const auto nonleaf = inst.nonleaf_nodes();
  auto u_index = [&](int i, NodeId n) {
    const auto it = std::lower_bound(nonleaf.begin(), nonleaf.end(), n);
    return static_cast<int>(it - nonleaf.begin()) * I + i;
  };
  for (NodeId n : nonleaf)
    for (int i = 0; i < I; ++i)
      master.add_global_var(0.0, 1.0, true,
                            inst.tree.node(n).probability *
                                inst.install_cost(i, inst.install_period(n)),
                            "x_" + std::to_string(i) + "_" + std::to_string(n));
  for (NodeId n : inst.nonroot_nodes())
    master.ensure_node_pool(n, Eigen::VectorXi::Zero(I), Eigen::VectorXi::Ones(I));

  // Interior rows: sum_k rho_nk w*_ink + x_in <= 1.
  for (NodeId n : inst.interior_nodes()) {
    for (int i = 0; i < I; ++i) {
      const int row = master.add_linking_row({{u_index(i, n), 1.0}}, Rel::Le, 1.0);
      master.set_node_row(row, n, Eigen::VectorXd::Unit(I, i));
    }
  }
  // Non-root rows: sum_k rho_nk w*_ink = sum over the root-to-parent path of x.
  for (NodeId n : inst.nonroot_nodes()) {
    const auto path = path_to_parent(inst.tree, n);
    for (int i = 0; i < I; ++i) {
      std::vector<std::pair<int, double>> terms;
      for (NodeId a : path) terms.emplace_back(u_index(i, a), -1.0);
      const int row = master.add_linking_row(terms, Rel::Eq, 0.0);
      master.set_node_row(row, n, Eigen::VectorXd::Unit(I, i));
    }
  }

  // Seed pools: the all-tanks column is feasible at every node by the
  // instance invariant; its node costs plus installing everything at the
  // root give an integer-feasible warm incumbent.
  const Eigen::VectorXi all_ones = Eigen::VectorXi::Ones(I);
  double seed_objective = 0.0;
  for (int i = 0; i < I; ++i) seed_objective += inst.install_cost(i, 0);
  for (NodeId n : inst.nonroot_nodes()) {
    const ShareResult sr = evaluate_share(inst, n, all_ones);
    if (!std::holds_alternative<ShareFeasible>(sr))
      throw Error("seed column infeasible at node " + std::to_string(n) +
                  " despite the capacity invariant");
    const double cost = std::get<ShareFeasible>(sr).cost;
    master.add_column(Column{n, all_ones, cost, true, ColumnOrigin::Initial});
    seed_objective += cost;
  }
  master.set_initial_incumbent(seed_objective);

  // Expected-value warm start: solve the mean-demand single-branch model and
  // map its install schedule onto every node of the matching stage.
  const BlendingInstance ev = expected_value_instance(inst);
  GlobalOptions ev_opts;
  ev_opts.rel_tol = 1e-6;
  ev_opts.node_limit = 20000;
  const GlobalResult ev_res = solve_global(build_fullspace(ev), ev_opts);
  if (ev_res.incumbent.size() > 0) {
    // x block comes first in build_fullspace: one var per (non-leaf node, tank).
    for (int s = 2; s <= inst.tree.stage_count(); ++s) {
      Eigen::VectorXi wv(I);
      for (int i = 0; i < I; ++i) {
        double installed = 0.0;
        for (int stage = 1; stage < s; ++stage)
          installed += ev_res.incumbent[(stage - 1) * I + i];
        wv[i] = installed > 0.5 ? 1 : 0;
      }
      for (NodeId n : inst.tree.stage_nodes(s)) {
        if (master.has_column(n, wv, false)) continue;
        const ShareResult sr = evaluate_share(inst, n, wv);
        if (std::holds_alternative<ShareFeasible>(sr))
          master.add_column(
              Column{n, wv, std::get<ShareFeasible>(sr).cost, true, ColumnOrigin::Initial});
      }
    }
  }
  return master;
}

}  // namespace mscg
