#pragma once

#include <map>
#include <variant>

#include "mscg/master.hpp"

namespace mscg {

struct ShareFeasible {
  double cost = 0.0;  // exact cost of the fixed state vector at the node
  long work = 0;
};
struct ShareInfeasible {
  long work = 0;
};
using ShareResult = std::variant<ShareFeasible, ShareInfeasible>;

// Evaluates a sibling's state vector at a node. Implementations fix the
// vector as data (only stage variables remain) and solve exactly.
class ShareEvaluator {
 public:
  virtual ~ShareEvaluator() = default;
  virtual ShareResult evaluate(NodeId n, const Eigen::VectorXi& x_vec) const = 0;
};

enum class SiblingOutcome { SkippedDuplicate, Added, InfeasibleDiscardAll };

struct ShareOutcome {
  std::vector<std::pair<NodeId, SiblingOutcome>> per_sibling;
  int added = 0;    // new pool entries created
  int skipped = 0;  // siblings already holding the column at optimal cost
  bool discarded = false;
};

// Shares one freshly priced column with every sibling of its origin node:
// skip siblings that already hold (node, x) at optimal cost; add on success
// regardless of the column's reduced cost at the sibling; on infeasibility
// remove the column from the whole sibling group, tombstone it, and stop.
ShareOutcome share_from(NodeId origin, const Column& col, const ScenarioTree& tree,
                        const ShareEvaluator& evaluator, MasterModel& master);

struct ShareRoundStats {
  int shared = 0;
  int discarded = 0;
  int skipped = 0;
  int evaluations = 0;
  long work = 0;
  double total_ms = 0.0;
  double max_pair_ms = 0.0;
};

// Applies share_from over all newly priced columns of one pricing round.
// Evaluations run concurrently on the worker pool; outcomes are applied in
// (origin id, sibling id, column index) order, so the round is deterministic
// for any worker count.
ShareRoundStats share_round(const std::map<NodeId, std::vector<Column>>& new_columns,
                            const ScenarioTree& tree, const ShareEvaluator& evaluator,
                            MasterModel& master, int worker_count);

}  // namespace mscg
