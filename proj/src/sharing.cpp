#include "mscg/sharing.hpp"

#include <algorithm>
#include <chrono>

#include "mscg/parallel.hpp"

namespace mscg {

namespace {

void discard_everywhere(NodeId origin, const Eigen::VectorXi& x_vec, const ScenarioTree& tree,
                        MasterModel& master) {
  master.tombstone(origin, x_vec);
  for (NodeId s : siblings(tree, origin)) master.tombstone(s, x_vec);
}

}  // namespace

ShareOutcome share_from(NodeId origin, const Column& col, const ScenarioTree& tree,
                        const ShareEvaluator& evaluator, MasterModel& master) {
  ShareOutcome outcome;
  for (NodeId sib : siblings(tree, origin)) {
    if (master.has_column(sib, col.x_vec, /*require_optimal=*/true)) {
      outcome.per_sibling.emplace_back(sib, SiblingOutcome::SkippedDuplicate);
      ++outcome.skipped;
      continue;
    }
    const ShareResult res = evaluator.evaluate(sib, col.x_vec);
    if (std::holds_alternative<ShareInfeasible>(res)) {
      discard_everywhere(origin, col.x_vec, tree, master);
      outcome.per_sibling.emplace_back(sib, SiblingOutcome::InfeasibleDiscardAll);
      outcome.discarded = true;
      return outcome;
    }
    const double cost = std::get<ShareFeasible>(res).cost;
    const AddOutcome add = master.add_column(
        Column{sib, col.x_vec, cost, /*cost_is_optimal=*/true, ColumnOrigin::Shared});
    if (add == AddOutcome::Added) ++outcome.added;
    outcome.per_sibling.emplace_back(sib, SiblingOutcome::Added);
  }
  return outcome;
}

ShareRoundStats share_round(const std::map<NodeId, std::vector<Column>>& new_columns,
                            const ScenarioTree& tree, const ShareEvaluator& evaluator,
                            MasterModel& master, int worker_count) {
  struct Pair {
    NodeId origin;
    NodeId sibling;
    int col_idx;
    const Column* col;
  };
  // Application order is (origin, sibling, column index).
  std::vector<Pair> pairs;
  for (const auto& [origin, cols] : new_columns) {
    for (NodeId sib : siblings(tree, origin))
      for (int k = 0; k < static_cast<int>(cols.size()); ++k)
        pairs.push_back(Pair{origin, sib, k, &cols[static_cast<std::size_t>(k)]});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.origin != b.origin) return a.origin < b.origin;
    if (a.sibling != b.sibling) return a.sibling < b.sibling;
    return a.col_idx < b.col_idx;
  });

  struct Eval {
    bool ran = false;
    ShareResult result;
    double ms = 0.0;
  };
  const auto evaluations =
      parallel_map(static_cast<int>(pairs.size()), worker_count, [&](int i) {
        const Pair& p = pairs[static_cast<std::size_t>(i)];
        Eval e;
        // Pre-round duplicates are never worth solving; re-checked at apply
        // time for duplicates created within the round.
        if (master.has_column(p.sibling, p.col->x_vec, true)) return e;
        const auto t0 = std::chrono::steady_clock::now();
        e.result = evaluator.evaluate(p.sibling, p.col->x_vec);
        e.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                   .count();
        e.ran = true;
        return e;
      });

  ShareRoundStats stats;
  std::map<std::pair<NodeId, int>, bool> column_discarded;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Pair& p = pairs[i];
    const Eval& e = evaluations[i];
    if (e.ran) {
      ++stats.evaluations;
      stats.total_ms += e.ms;
      stats.max_pair_ms = std::max(stats.max_pair_ms, e.ms);
      stats.work += std::holds_alternative<ShareFeasible>(e.result)
                        ? std::get<ShareFeasible>(e.result).work
                        : std::get<ShareInfeasible>(e.result).work;
    }
    if (column_discarded[{p.origin, p.col_idx}]) continue;
    if (!e.ran || master.has_column(p.sibling, p.col->x_vec, true)) {
      ++stats.skipped;
      continue;
    }
    if (std::holds_alternative<ShareInfeasible>(e.result)) {
      discard_everywhere(p.origin, p.col->x_vec, tree, master);
      column_discarded[{p.origin, p.col_idx}] = true;
      ++stats.discarded;
      continue;
    }
    const double cost = std::get<ShareFeasible>(e.result).cost;
    const AddOutcome add = master.add_column(
        Column{p.sibling, p.col->x_vec, cost, true, ColumnOrigin::Shared});
    if (add == AddOutcome::Added) ++stats.shared;
  }
  return stats;
}

}  // namespace mscg
