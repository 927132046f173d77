#include "mscg/master.hpp"

#include <algorithm>
#include <cmath>

namespace mscg {

const char* to_string(ColumnOrigin o) {
  switch (o) {
    case ColumnOrigin::Initial: return "initial";
    case ColumnOrigin::Priced: return "priced";
    case ColumnOrigin::Shared: return "shared";
  }
  return "?";
}

std::vector<int> MasterModel::key_of(const Eigen::VectorXi& x) {
  return {x.data(), x.data() + x.size()};
}

const MasterModel::Pool& MasterModel::pool_at(NodeId n) const {
  auto it = pools_.find(n);
  if (it == pools_.end()) throw Error("unknown node: no pool for " + std::to_string(n));
  return it->second;
}

int MasterModel::add_global_var(double lower, double upper, bool integer, double obj_coef,
                                std::string name) {
  u_.push_back(GlobalVar{lower, upper, integer, obj_coef, std::move(name)});
  return static_cast<int>(u_.size()) - 1;
}

void MasterModel::ensure_node_pool(NodeId n, Eigen::VectorXi lower, Eigen::VectorXi upper) {
  if (lower.size() != upper.size()) throw Error("dimension mismatch: pool bounds");
  auto it = pools_.find(n);
  if (it != pools_.end()) return;
  pools_[n] = Pool{std::move(lower), std::move(upper), {}, {}};
}

int MasterModel::add_linking_row(const std::vector<std::pair<int, double>>& u_terms, Rel rel,
                                 double rhs) {
  LinkRow row;
  row.u_coeffs.setZero(static_cast<Eigen::Index>(u_.size()));
  for (const auto& [j, c] : u_terms) {
    if (j < 0 || j >= num_global_vars()) throw Error("dimension mismatch: linking row u term");
    row.u_coeffs[j] += c;
  }
  row.rel = rel;
  row.rhs = rhs;
  rows_.push_back(std::move(row));
  return num_linking_rows() - 1;
}

void MasterModel::set_node_row(int row, NodeId n, Eigen::VectorXd coeffs) {
  if (row < 0 || row >= num_linking_rows()) throw Error("dimension mismatch: linking row index");
  if (coeffs.size() != pool_at(n).lower.size())
    throw Error("dimension mismatch: node row coefficients");
  rows_[static_cast<std::size_t>(row)].node_coeffs[n] = std::move(coeffs);
}

AddOutcome MasterModel::add_column(Column col) {
  auto it = pools_.find(col.node);
  if (it == pools_.end()) throw Error("unknown node: no pool for " + std::to_string(col.node));
  Pool& pool = it->second;
  if (col.x_vec.size() != pool.lower.size()) throw Error("dimension mismatch: column");
  for (int i = 0; i < col.x_vec.size(); ++i)
    if (col.x_vec[i] < pool.lower[i] || col.x_vec[i] > pool.upper[i])
      throw Error("bounds violation: column outside state bounds");

  const auto key = key_of(col.x_vec);
  if (auto tn = tombstones_.find(col.node);
      tn != tombstones_.end() && tn->second.count(key) > 0)
    return AddOutcome::RejectedTombstoned;

  auto at = pool.index.find(key);
  if (at == pool.index.end()) {
    pool.index[key] = static_cast<int>(pool.cols.size());
    pool.cols.push_back(std::move(col));
    return AddOutcome::Added;
  }
  Column& held = pool.cols[static_cast<std::size_t>(at->second)];
  const bool opt = held.cost_is_optimal || col.cost_is_optimal;
  if (col.cost < held.cost) {
    held.cost = col.cost;
    held.origin = col.origin;
    held.cost_is_optimal = opt;
    return AddOutcome::ReplacedCheaper;
  }
  held.cost_is_optimal = opt;
  return AddOutcome::DedupedKept;
}

bool MasterModel::remove_column(NodeId n, const Eigen::VectorXi& x_vec) {
  auto it = pools_.find(n);
  if (it == pools_.end()) return false;
  Pool& pool = it->second;
  const auto key = key_of(x_vec);
  auto at = pool.index.find(key);
  if (at == pool.index.end()) return false;
  pool.cols.erase(pool.cols.begin() + at->second);
  pool.index.clear();
  for (int k = 0; k < static_cast<int>(pool.cols.size()); ++k)
    pool.index[key_of(pool.cols[static_cast<std::size_t>(k)].x_vec)] = k;
  return true;
}

void MasterModel::tombstone(NodeId n, const Eigen::VectorXi& x_vec) {
  remove_column(n, x_vec);
  tombstones_[n].insert(key_of(x_vec));
}

bool MasterModel::is_tombstoned(NodeId n, const Eigen::VectorXi& x_vec) const {
  auto it = tombstones_.find(n);
  return it != tombstones_.end() && it->second.count(key_of(x_vec)) > 0;
}

std::vector<Eigen::VectorXi> MasterModel::tombstoned_vectors(NodeId n) const {
  std::vector<Eigen::VectorXi> out;
  auto it = tombstones_.find(n);
  if (it == tombstones_.end()) return out;
  for (const auto& key : it->second) {
    Eigen::VectorXi x(static_cast<Eigen::Index>(key.size()));
    for (std::size_t i = 0; i < key.size(); ++i) x[static_cast<Eigen::Index>(i)] = key[i];
    out.push_back(std::move(x));
  }
  return out;
}

bool MasterModel::has_column(NodeId n, const Eigen::VectorXi& x_vec, bool require_optimal) const {
  auto it = pools_.find(n);
  if (it == pools_.end()) return false;
  auto at = it->second.index.find(key_of(x_vec));
  if (at == it->second.index.end()) return false;
  return !require_optimal ||
         it->second.cols[static_cast<std::size_t>(at->second)].cost_is_optimal;
}

const std::vector<Column>& MasterModel::pool(NodeId n) const { return pool_at(n).cols; }

std::vector<NodeId> MasterModel::pooled_nodes() const {
  std::vector<NodeId> out;
  out.reserve(pools_.size());
  for (const auto& [n, p] : pools_) out.push_back(n);
  return out;
}

int MasterModel::pooled_index(NodeId n) const {
  int i = 0;
  for (const auto& [id, p] : pools_) {
    if (id == n) return i;
    ++i;
  }
  throw Error("unknown node: no pool for " + std::to_string(n));
}

int MasterModel::total_columns() const {
  int c = 0;
  for (const auto& [n, p] : pools_) c += static_cast<int>(p.cols.size());
  return c;
}

double MasterModel::penalty() const {
  // Frozen at the first solve so the relaxation value stays monotone under
  // column additions; bump_penalty() is the only way it grows afterwards.
  if (penalty_value_ == 0.0) {
    double max_cost = 0.0, max_rhs = 0.0;
    for (const auto& [n, p] : pools_)
      for (const auto& col : p.cols) max_cost = std::max(max_cost, std::abs(col.cost));
    for (const auto& row : rows_) max_rhs = std::max(max_rhs, std::abs(row.rhs));
    penalty_value_ = 1e3 * std::max(1.0, max_cost + max_rhs);
  }
  return penalty_value_ * penalty_bump_;
}

double MasterModel::dual_weight(NodeId n, const DualPrices& duals,
                                const Eigen::VectorXi& x_vec) const {
  if (duals.gamma.size() != num_linking_rows()) throw Error("dimension mismatch: duals");
  double w = 0.0;
  const Eigen::VectorXd x = x_vec.cast<double>();
  for (int r = 0; r < num_linking_rows(); ++r) {
    const auto& nc = rows_[static_cast<std::size_t>(r)].node_coeffs;
    auto it = nc.find(n);
    if (it != nc.end()) w += duals.gamma[r] * it->second.dot(x);
  }
  return w;
}

double MasterModel::reduced_cost(const Column& col, const DualPrices& duals) const {
  const int k = pooled_index(col.node);
  if (duals.mu.size() != static_cast<Eigen::Index>(pools_.size()))
    throw Error("dimension mismatch: duals");
  return col.cost - dual_weight(col.node, duals, col.x_vec) - duals.mu[k];
}

RelaxedMasterSolution MasterModel::solve_relaxed() const {
  for (const auto& [n, p] : pools_)
    if (p.cols.empty()) throw Error("empty pool at node " + std::to_string(n));

  const int nu = num_global_vars();
  const int nlink = num_linking_rows();
  const int npool = static_cast<int>(pools_.size());
  int nrho = 0;
  for (const auto& [n, p] : pools_) nrho += static_cast<int>(p.cols.size());

  // Column layout: u | rho (node-major, pool order) | artificials.
  // Every structural row gets artificials so the LP is always feasible.
  int nart = 0;
  for (const auto& row : rows_) nart += row.rel == Rel::Eq ? 2 : 1;
  nart += 2 * npool;

  const int n_total = nu + nrho + nart;
  const int m_total = nlink + npool;
  const double big_m = penalty();

  LinearProgram lp;
  lp.objective.setZero(n_total);
  lp.lower.setZero(n_total);
  lp.upper.setZero(n_total);
  lp.row_coeffs.setZero(m_total, n_total);
  lp.row_rhs.setZero(m_total);
  lp.row_rel.assign(static_cast<std::size_t>(m_total), Rel::Eq);

  for (int j = 0; j < nu; ++j) {
    lp.objective[j] = u_[static_cast<std::size_t>(j)].obj;
    lp.lower[j] = u_[static_cast<std::size_t>(j)].lower;
    lp.upper[j] = u_[static_cast<std::size_t>(j)].upper;
  }
  std::vector<std::pair<NodeId, int>> rho_offset;  // (node, first rho column)
  int off = nu;
  for (const auto& [n, p] : pools_) {
    rho_offset.emplace_back(n, off);
    for (const auto& col : p.cols) {
      lp.objective[off] = col.cost;
      lp.lower[off] = 0.0;
      // rho <= 1 is implied by the convexity row; writing it as an explicit
      // bound would allow columns to sit nonbasic at the upper bound with
      // negative reduced cost, breaking the pricing termination argument.
      lp.upper[off] = kInf;
      ++off;
    }
  }

  for (int r = 0; r < nlink; ++r) {
    const LinkRow& row = rows_[static_cast<std::size_t>(r)];
    lp.row_rel[static_cast<std::size_t>(r)] = row.rel;
    lp.row_rhs[r] = row.rhs;
    lp.row_coeffs.block(r, 0, 1, static_cast<int>(row.u_coeffs.size())) =
        row.u_coeffs.transpose();
    int pi = 0;
    for (const auto& [n, p] : pools_) {
      auto it = row.node_coeffs.find(n);
      if (it != row.node_coeffs.end()) {
        const int base = rho_offset[static_cast<std::size_t>(pi)].second;
        for (int k = 0; k < static_cast<int>(p.cols.size()); ++k)
          lp.row_coeffs(r, base + k) =
              it->second.dot(p.cols[static_cast<std::size_t>(k)].x_vec.cast<double>());
      }
      ++pi;
    }
  }
  {
    int pi = 0;
    for (const auto& [n, p] : pools_) {
      const int r = nlink + pi;
      lp.row_rel[static_cast<std::size_t>(r)] = Rel::Eq;
      lp.row_rhs[r] = 1.0;
      const int base = rho_offset[static_cast<std::size_t>(pi)].second;
      for (int k = 0; k < static_cast<int>(p.cols.size()); ++k)
        lp.row_coeffs(r, base + k) = 1.0;
      ++pi;
    }
  }

  // Artificials: +1 on >= rows, -1 on <= rows, a plus/minus pair on = rows.
  int art = nu + nrho;
  for (int r = 0; r < m_total; ++r) {
    const Rel rel = lp.row_rel[static_cast<std::size_t>(r)];
    const auto put = [&](double coef) {
      lp.row_coeffs(r, art) = coef;
      lp.objective[art] = big_m;
      lp.lower[art] = 0.0;
      lp.upper[art] = kInf;
      ++art;
    };
    if (rel == Rel::Le) {
      put(-1.0);
    } else if (rel == Rel::Ge) {
      put(1.0);
    } else {
      put(1.0);
      put(-1.0);
    }
  }

  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal)
    throw Error(std::string("restricted master LP not optimal: ") + to_string(sol.status));

  RelaxedMasterSolution out;
  out.z_rm = sol.objective;
  out.u = sol.primal.head(nu);
  out.duals.gamma = sol.duals.head(nlink);
  out.duals.mu = sol.duals.segment(nlink, npool);
  out.pivots = sol.pivots;
  out.rho.reserve(static_cast<std::size_t>(npool));
  {
    int pi = 0;
    for (const auto& [n, p] : pools_) {
      const int base = rho_offset[static_cast<std::size_t>(pi)].second;
      Eigen::VectorXd r = sol.primal.segment(base, static_cast<int>(p.cols.size()));
      for (int k = 0; k < r.size(); ++k)
        out.rho_fractionality =
            std::max(out.rho_fractionality, std::min(r[k], std::abs(1.0 - r[k])));
      out.rho.push_back(std::move(r));
      ++pi;
    }
  }
  out.artificial_mass = sol.primal.tail(nart).sum();
  return out;
}

IntegerMasterSolution MasterModel::solve_integer(const GlobalOptions& opts) const {
  for (const auto& [n, p] : pools_)
    if (p.cols.empty()) throw Error("empty pool at node " + std::to_string(n));

  FactorableModel mip;
  for (const auto& v : u_) mip.add_variable(v.lower, v.upper, v.integer, v.name);
  std::vector<std::pair<NodeId, int>> rho_offset;
  for (const auto& [n, p] : pools_) {
    rho_offset.emplace_back(n, mip.num_vars());
    for (std::size_t k = 0; k < p.cols.size(); ++k) mip.add_variable(0.0, 1.0, true);
  }
  for (int j = 0; j < num_global_vars(); ++j)
    mip.add_objective_term(j, u_[static_cast<std::size_t>(j)].obj);
  {
    int pi = 0;
    for (const auto& [n, p] : pools_) {
      const int base = rho_offset[static_cast<std::size_t>(pi)].second;
      for (int k = 0; k < static_cast<int>(p.cols.size()); ++k)
        mip.add_objective_term(base + k, p.cols[static_cast<std::size_t>(k)].cost);
      ++pi;
    }
  }
  for (const auto& row : rows_) {
    std::vector<LinearTerm> terms;
    for (int j = 0; j < static_cast<int>(row.u_coeffs.size()); ++j)
      if (row.u_coeffs[j] != 0.0) terms.push_back({j, row.u_coeffs[j]});
    int pi = 0;
    for (const auto& [n, p] : pools_) {
      auto it = row.node_coeffs.find(n);
      if (it != row.node_coeffs.end()) {
        const int base = rho_offset[static_cast<std::size_t>(pi)].second;
        for (int k = 0; k < static_cast<int>(p.cols.size()); ++k) {
          const double c =
              it->second.dot(p.cols[static_cast<std::size_t>(k)].x_vec.cast<double>());
          if (c != 0.0) terms.push_back({base + k, c});
        }
      }
      ++pi;
    }
    mip.add_row(std::move(terms), row.rel, row.rhs);
  }
  {
    int pi = 0;
    for (const auto& [n, p] : pools_) {
      std::vector<LinearTerm> terms;
      const int base = rho_offset[static_cast<std::size_t>(pi)].second;
      for (int k = 0; k < static_cast<int>(p.cols.size()); ++k) terms.push_back({base + k, 1.0});
      mip.add_row(std::move(terms), Rel::Eq, 1.0);
      ++pi;
    }
  }

  const GlobalResult res = solve_global(mip, opts);
  IntegerMasterSolution out;
  out.status = res.status;
  out.work = res.work;
  if (res.status != GlobalStatus::Optimal) return out;
  out.objective = res.upper_bound;
  out.u = res.incumbent.head(num_global_vars());
  {
    int pi = 0;
    for (const auto& [n, p] : pools_) {
      const int base = rho_offset[static_cast<std::size_t>(pi)].second;
      int chosen = -1;
      for (int k = 0; k < static_cast<int>(p.cols.size()); ++k)
        if (res.incumbent[base + k] > 0.5) chosen = k;
      out.selected[n] = chosen;
      ++pi;
    }
  }
  return out;
}

}  // namespace mscg
