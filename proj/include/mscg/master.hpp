#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "mscg/global_solver.hpp"
#include "mscg/scenario_tree.hpp"

namespace mscg {

enum class ColumnOrigin { Initial, Priced, Shared };
const char* to_string(ColumnOrigin o);

// One discretized state vector for a node together with its (min-sense) cost.
struct Column {
  NodeId node = 0;
  Eigen::VectorXi x_vec;
  double cost = 0.0;
  bool cost_is_optimal = false;
  ColumnOrigin origin = ColumnOrigin::Initial;
};

enum class AddOutcome { Added, ReplacedCheaper, DedupedKept, RejectedTombstoned };

struct DualPrices {
  Eigen::VectorXd gamma;  // one entry per linking row
  Eigen::VectorXd mu;     // one entry per pooled node, ascending node id
};

struct RelaxedMasterSolution {
  double z_rm = 0.0;
  Eigen::VectorXd u;
  std::vector<Eigen::VectorXd> rho;  // aligned with pooled_nodes()/pool order
  DualPrices duals;
  double artificial_mass = 0.0;
  long pivots = 0;
  // Largest distance of any rho entry from {0,1}.
  double rho_fractionality = 0.0;
};

struct IntegerMasterSolution {
  GlobalStatus status = GlobalStatus::Infeasible;
  double objective = kInf;
  Eigen::VectorXd u;
  std::map<NodeId, int> selected;  // node -> pool index of the chosen column
  long work = 0;
};

// Restricted Dantzig-Wolfe master: global variables u, linking rows
// A u + sum_n D_n (sum_k rho_nk x*_nk) {<=,=,>=} b, one convexity row per
// pooled node, and artificial slacks with penalty M on every structural row
// so the LP relaxation is always feasible. Owns the column pools.
class MasterModel {
 public:
  int add_global_var(double lower, double upper, bool integer, double obj_coef,
                     std::string name = {});

  // Registers a node pool; columns must respect [lower, upper] elementwise.
  void ensure_node_pool(NodeId n, Eigen::VectorXi lower, Eigen::VectorXi upper);

  // Returns the linking row index. u_coeffs is the A-row over global vars
  // (may be shorter than the final u count; missing entries are zero).
  int add_linking_row(const std::vector<std::pair<int, double>>& u_terms, Rel rel, double rhs);

  // Sets D_n's entries for one linking row: coefficient vector over the
  // node's state dimension.
  void set_node_row(int row, NodeId n, Eigen::VectorXd coeffs);

  AddOutcome add_column(Column col);
  bool remove_column(NodeId n, const Eigen::VectorXi& x_vec);
  // Removes the column if present and blocks any future re-add of (n, x).
  void tombstone(NodeId n, const Eigen::VectorXi& x_vec);
  bool is_tombstoned(NodeId n, const Eigen::VectorXi& x_vec) const;
  std::vector<Eigen::VectorXi> tombstoned_vectors(NodeId n) const;
  // True when the pool holds (n, x); require_optimal additionally requires
  // the stored cost to be flagged optimal.
  bool has_column(NodeId n, const Eigen::VectorXi& x_vec, bool require_optimal) const;

  const std::vector<Column>& pool(NodeId n) const;
  std::vector<NodeId> pooled_nodes() const;
  int pooled_index(NodeId n) const;
  int num_linking_rows() const { return static_cast<int>(rows_.size()); }
  int num_global_vars() const { return static_cast<int>(u_.size()); }
  bool global_var_is_integer(int j) const { return u_.at(static_cast<std::size_t>(j)).integer; }
  int total_columns() const;

  // LP relaxation of the restricted master (rho and u relaxed to boxes).
  RelaxedMasterSolution solve_relaxed() const;

  // MIP over the current pools (rho binary, u integrality as marked);
  // artificials are excluded, so Infeasible means the pools cannot support
  // any consistent integer solution.
  IntegerMasterSolution solve_integer(const GlobalOptions& opts = {}) const;

  // gamma' D_n x for the given node and state vector.
  double dual_weight(NodeId n, const DualPrices& duals, const Eigen::VectorXi& x_vec) const;
  // cost - gamma' D_n x - mu_n.
  double reduced_cost(const Column& col, const DualPrices& duals) const;

  // Grows the artificial penalty by 10x (used when artificials persist at
  // optimum although pricing is exhausted).
  void bump_penalty() { penalty_bump_ = std::min(penalty_bump_ * 10.0, 1e9); }
  double penalty() const;

  void set_initial_incumbent(double objective) { initial_incumbent_ = objective; }
  std::optional<double> initial_incumbent() const { return initial_incumbent_; }

 private:
  struct GlobalVar {
    double lower, upper;
    bool integer;
    double obj;
    std::string name;
  };
  struct LinkRow {
    Eigen::VectorXd u_coeffs;  // resized lazily to u count
    Rel rel = Rel::Le;
    double rhs = 0.0;
    std::map<NodeId, Eigen::VectorXd> node_coeffs;
  };
  struct Pool {
    Eigen::VectorXi lower, upper;
    std::vector<Column> cols;
    std::map<std::vector<int>, int> index;
  };

  static std::vector<int> key_of(const Eigen::VectorXi& x);
  const Pool& pool_at(NodeId n) const;

  std::vector<GlobalVar> u_;
  std::vector<LinkRow> rows_;
  std::map<NodeId, Pool> pools_;
  std::map<NodeId, std::set<std::vector<int>>> tombstones_;
  double penalty_bump_ = 1.0;
  mutable double penalty_value_ = 0.0;
  std::optional<double> initial_incumbent_;
};

}  // namespace mscg
