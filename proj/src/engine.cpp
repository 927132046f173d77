#include "mscg/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mscg/parallel.hpp"

namespace mscg {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::TimeLimit: return "time_limit";
    case RunStatus::IterationLimit: return "iteration_limit";
    case RunStatus::StalledInfeasible: return "infeasible";
    case RunStatus::Stalled: return "stalled";
  }
  return "?";
}

Bounds update_lower_bound(Bounds bounds, double z_rm, std::span<const double> psi_lb,
                          int expected_nodes) {
  if (static_cast<int>(psi_lb.size()) != expected_nodes)
    throw Error("missing node: expected one pricing bound per node");
  double sum = 0.0;
  for (double v : psi_lb) sum += v;
  bounds.z_rm = z_rm;
  bounds.lb = std::max(bounds.lb, z_rm + sum);
  return bounds;
}

double relative_gap(double lb, double ub) {
  if (lb == -kInf) return kInf;
  if (lb > ub + std::max(1e-9, 1e-9 * std::abs(ub)))
    throw Error("bound crossing: lb " + std::to_string(lb) + " > ub " + std::to_string(ub));
  return std::abs(ub - lb) / std::max(std::abs(ub), 1e-10);
}

RunResult run(const ScenarioTree& tree, MasterModel& master, const PricingOracle& oracle,
              const ShareEvaluator* share_evaluator, const EngineConfig& config) {
  const auto t_start = Clock::now();
  const std::vector<NodeId> nodes = master.pooled_nodes();
  const int n_nodes = static_cast<int>(nodes.size());

  RunResult res;
  res.columns_initial = master.total_columns();
  if (master.initial_incumbent()) res.incumbent_objective = *master.initial_incumbent();

  Bounds bounds;
  bool force_exact = config.pricing_mode == SolveMode::Exact;
  int penalty_bumps = 0;
  res.status = RunStatus::IterationLimit;
  std::optional<RelaxedMasterSolution> last_rsol;

  auto out_of_time = [&] {
    return ms_since(t_start) >= config.wall_time_limit_s * 1000.0;
  };

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    if (out_of_time()) {
      res.status = RunStatus::TimeLimit;
      break;
    }
    IterationRecord rec;
    rec.iter = iter;

    const auto t_master = Clock::now();
    const RelaxedMasterSolution rsol = master.solve_relaxed();
    last_rsol = rsol;
    rec.t_master_ms = ms_since(t_master);
    rec.det_master = rsol.pivots;
    rec.z_rm = rsol.z_rm;
    rec.artificial_mass = rsol.artificial_mass;

    const bool exact_this_round = force_exact || config.pricing_mode == SolveMode::Exact;
    const double slack =
        std::max(1e-9, config.pricing_slack_factor * config.eps *
                           std::max(1.0, std::abs(rsol.z_rm)) / std::max(1, n_nodes));

    std::vector<std::vector<Eigen::VectorXi>> excluded(static_cast<std::size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i)
      excluded[static_cast<std::size_t>(i)] =
          master.tombstoned_vectors(nodes[static_cast<std::size_t>(i)]);

    struct TimedPricing {
      PricingResult result;
      double ms = 0.0;
    };
    const auto priced = parallel_map(n_nodes, config.worker_count, [&](int i) {
      const auto t0 = Clock::now();
      TimedPricing tp;
      tp.result = oracle.price(nodes[static_cast<std::size_t>(i)], rsol.duals,
                               exact_this_round ? SolveMode::Exact : config.pricing_mode,
                               config.candidate_limit, slack,
                               excluded[static_cast<std::size_t>(i)]);
      tp.ms = ms_since(t0);
      return tp;
    });

    std::vector<double> psi_lb(static_cast<std::size_t>(n_nodes));
    bool round_exact = true;
    std::map<NodeId, std::vector<Column>> new_columns;
    for (int i = 0; i < n_nodes; ++i) {
      const NodeId n = nodes[static_cast<std::size_t>(i)];
      const PricingResult& pr = priced[static_cast<std::size_t>(i)].result;
      rec.t_pricing_ms += priced[static_cast<std::size_t>(i)].ms;
      rec.t_pricing_max_ms = std::max(rec.t_pricing_max_ms, priced[static_cast<std::size_t>(i)].ms);
      rec.det_pricing += pr.work;
      psi_lb[static_cast<std::size_t>(i)] = std::min(pr.psi_lb, 0.0);
      round_exact = round_exact && pr.exact;
      for (const PricedCandidate& cand : pr.candidates) {
        if (!(cand.reduced_cost < -1e-9)) continue;
        const double cost = cand.reduced_cost +
                            master.dual_weight(n, rsol.duals, cand.x_vec) +
                            rsol.duals.mu[master.pooled_index(n)];
        Column col{n, cand.x_vec, cost, cand.cost_is_optimal, ColumnOrigin::Priced};
        const AddOutcome outcome = master.add_column(col);
        if (outcome == AddOutcome::Added) {
          ++rec.cols_added;
          new_columns[n].push_back(col);
        } else if (outcome == AddOutcome::ReplacedCheaper) {
          new_columns[n].push_back(col);
        }
      }
    }
    res.columns_priced += rec.cols_added;
    rec.exact_round = round_exact;

    if (share_evaluator && config.sharing_enabled && !new_columns.empty()) {
      bool stalled = true;
      if (config.share_when_stalled) {
        const int w = config.stall_window;
        const int k = static_cast<int>(res.log.size());
        stalled = k >= w &&
                  res.log[static_cast<std::size_t>(k - w)].gap -
                          res.log[static_cast<std::size_t>(k - 1)].gap <
                      config.stall_min_gap_delta;
      }
      if (stalled) {
        try {
          const ShareRoundStats stats =
              share_round(new_columns, tree, *share_evaluator, master, config.worker_count);
          rec.cols_shared = stats.shared;
          rec.cols_discarded = stats.discarded;
          rec.t_sharing_ms = stats.total_ms;
          rec.t_sharing_max_ms = stats.max_pair_ms;
          rec.det_sharing = stats.work;
          res.columns_shared += stats.shared;
          res.columns_discarded += stats.discarded;
        } catch (const Error&) {
          // Evaluator failure: columns stay as priced, round proceeds
          // without sharing.
        }
      }
    }

    bounds = update_lower_bound(bounds, rsol.z_rm, psi_lb, n_nodes);
    rec.lb = bounds.lb;
    rec.gap = relative_gap(bounds.lb, rsol.z_rm);
    res.log.push_back(rec);
    res.lb = bounds.lb;
    res.z_rm_final = rsol.z_rm;
    res.cg_gap = rec.gap;

    if (rec.gap <= config.eps) {
      if (round_exact) {
        res.status = RunStatus::Converged;
        break;
      }
      force_exact = true;  // prove the gap with exact pricing before exiting
      continue;
    }
    if (rec.cols_added == 0 && rec.cols_shared == 0) {
      if (!round_exact) {
        force_exact = true;
        continue;
      }
      if (rsol.artificial_mass > 1e-6 * std::max(1.0, std::abs(rsol.z_rm))) {
        if (penalty_bumps < 3) {
          master.bump_penalty();
          ++penalty_bumps;
          continue;
        }
        res.status = RunStatus::StalledInfeasible;
        break;
      }
      res.status = RunStatus::Stalled;
      break;
    }
  }

  // Integer recovery once the gap has closed: take the relaxation solution
  // directly when it is already integral, otherwise solve the restricted
  // master as a MIP. The seed solution lives inside the pools, so an optimal
  // recovery is never worse than the warm incumbent.
  if (res.status == RunStatus::Converged && last_rsol) {
    bool lp_integral =
        last_rsol->rho_fractionality <= 1e-6 && last_rsol->artificial_mass <= 1e-9;
    for (int j = 0; j < master.num_global_vars() && lp_integral; ++j)
      if (master.global_var_is_integer(j) &&
          std::abs(last_rsol->u[j] - std::round(last_rsol->u[j])) > 1e-6)
        lp_integral = false;
    const std::vector<NodeId> pooled = master.pooled_nodes();
    if (lp_integral) {
      IntegerMasterSolution from_lp;
      from_lp.status = GlobalStatus::Optimal;
      from_lp.objective = last_rsol->z_rm;
      from_lp.u = last_rsol->u;
      for (std::size_t k = 0; k < pooled.size(); ++k) {
        int chosen = -1;
        for (int c = 0; c < last_rsol->rho[k].size(); ++c)
          if (last_rsol->rho[k][c] > 0.5) chosen = c;
        if (chosen < 0) lp_integral = false;
        from_lp.selected[pooled[k]] = chosen;
      }
      if (lp_integral && from_lp.objective <=
                             res.incumbent_objective +
                                 1e-9 * std::max(1.0, std::abs(res.incumbent_objective))) {
        res.incumbent_objective = std::min(res.incumbent_objective, from_lp.objective);
        res.incumbent = std::move(from_lp);
      }
    }
    if (!lp_integral) {
      const IntegerMasterSolution ims = master.solve_integer(config.recovery_opts);
      if (ims.status == GlobalStatus::Optimal &&
          ims.objective <= res.incumbent_objective +
                               1e-9 * std::max(1.0, std::abs(res.incumbent_objective))) {
        res.incumbent_objective = std::min(res.incumbent_objective, ims.objective);
        res.incumbent = ims;
      }
    }
  }
  if (res.incumbent_objective < kInf && res.lb > -kInf)
    res.final_gap = relative_gap(std::min(res.lb, res.incumbent_objective),
                                 res.incumbent_objective);

  res.wall_ms = ms_since(t_start);
  double pricing_ms = 0.0, sharing_ms = 0.0;
  for (const auto& r : res.log) {
    res.perfect_parallel_ms += r.t_master_ms + r.t_pricing_max_ms + r.t_sharing_max_ms;
    pricing_ms += r.t_pricing_ms;
    sharing_ms += r.t_sharing_ms;
  }
  if (pricing_ms + sharing_ms > 0.0)
    res.sharing_time_pct = 100.0 * sharing_ms / (pricing_ms + sharing_ms);
  return res;
}

}  // namespace mscg
