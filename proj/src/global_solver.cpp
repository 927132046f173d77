#include "mscg/global_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <queue>
#include <set>

namespace mscg {

namespace {

struct Node {
  Eigen::VectorXd lo, hi;
  double bound;  // inherited lower bound on the subregion
  long index;    // creation order, used as a deterministic tie-break
};

struct WorseBound {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.index > b.index;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const FactorableModel& model, const GlobalOptions& opts)
      : model_(model), opts_(opts), start_(std::chrono::steady_clock::now()) {}

  GlobalResult run() {
    model_.validate();
    compute_linearizing_set();
    Node root;
    root.lo.resize(model_.num_vars());
    root.hi.resize(model_.num_vars());
    root.bound = -kInf;
    root.index = 0;
    for (int j = 0; j < model_.num_vars(); ++j) {
      const Variable& v = model_.var(j);
      root.lo[j] = v.integer ? std::ceil(v.lower - 1e-9) : v.lower;
      root.hi[j] = v.integer ? std::floor(v.upper + 1e-9) : v.upper;
      if (root.lo[j] > root.hi[j]) return finish(GlobalStatus::Infeasible);
    }
    queue_.push(std::move(root));

    while (!queue_.empty()) {
      if (elapsed_s() > opts_.time_limit_s || result_.nodes >= opts_.node_limit)
        return finish(GlobalStatus::TimeOut);
      Node node = queue_.top();
      queue_.pop();
      expand(std::move(node));
      if (opts_.trace) opts_.trace(current_lb(), incumbent_obj_);
      if (opts_.mode == SolveMode::FirstImproving && incumbent_obj_ < opts_.improve_threshold)
        return finish(GlobalStatus::BoundsOnly);
    }
    return finish(incumbent_obj_ < kInf ? GlobalStatus::Optimal : GlobalStatus::Infeasible);
  }

 private:
  double elapsed_s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  double prune_eps() const {
    if (incumbent_obj_ >= kInf) return 0.0;
    return std::max(opts_.abs_tol, opts_.rel_tol * std::abs(incumbent_obj_));
  }

  double current_lb() const {
    double lb = std::min(pruned_min_, incumbent_obj_);
    if (!queue_.empty()) lb = std::min(lb, queue_.top().bound);
    return lb;
  }

  void expand(Node node) {
    if (node.bound >= incumbent_obj_ - prune_eps()) {
      pruned_min_ = std::min(pruned_min_, node.bound);
      return;
    }
    ++result_.nodes;

    const LpSolution rel = solve_relaxation(node);
    result_.work += rel.pivots;
    if (rel.status == LpStatus::Infeasible) return;
    if (rel.status == LpStatus::Unbounded)
      throw Error("unbounded relaxation: model lacks finite bounds");

    if (rel.status == LpStatus::NumericalBreakdown) {
      // Keep the search valid with the inherited bound; branch on the widest
      // box dimension to force progress.
      branch_widest(node);
      return;
    }

    const double node_lb = std::max(node.bound, rel.objective + model_.objective_constant());
    if (node_lb >= incumbent_obj_ - prune_eps()) {
      pruned_min_ = std::min(pruned_min_, node_lb);
      return;
    }
    const Eigen::VectorXd& point = rel.primal;

    // Integer branching first: most fractional variable.
    int frac_var = -1;
    double frac_score = 1e-6;
    for (int j = 0; j < model_.num_vars(); ++j) {
      if (!model_.var(j).integer) continue;
      const double f = point[j] - std::floor(point[j]);
      const double score = std::min(f, 1.0 - f);
      if (score > frac_score) {
        frac_score = score;
        frac_var = j;
      }
    }
    if (frac_var >= 0) {
      probe(node, point);
      Node down = node, up = node;
      down.hi[frac_var] = std::floor(point[frac_var]);
      up.lo[frac_var] = std::floor(point[frac_var]) + 1.0;
      push_child(std::move(down), node_lb);
      push_child(std::move(up), node_lb);
      return;
    }

    // All integers integral: examine bilinear links.
    int worst_link = -1;
    double worst_viol = 0.0;
    for (std::size_t l = 0; l < model_.links().size(); ++l) {
      const auto& link = model_.links()[l];
      const double v = std::abs(point[link.product] - point[link.factor_a] * point[link.factor_b]);
      if (v > worst_viol + 1e-15) {
        worst_viol = v;
        worst_link = static_cast<int>(l);
      }
    }

    if (worst_viol <= opts_.feas_tol) {
      // The relaxation point achieves the node's own lower bound, so the
      // subregion is resolved regardless of whether it improves the incumbent.
      pruned_min_ = std::min(pruned_min_, node_lb);
      try_incumbent(point);
      return;
    }
    probe(node, point);

    const auto& link = model_.links()[static_cast<std::size_t>(worst_link)];
    // Branch the factor carrying more total link violation at the point (a
    // shared factor improves every envelope it appears in); fall back to the
    // wider box.
    auto factor_score = [&](int f) {
      double s = 0.0;
      for (const auto& l : model_.links())
        if (l.factor_a == f || l.factor_b == f)
          s += std::abs(point[l.product] - point[l.factor_a] * point[l.factor_b]);
      return s;
    };
    const double wa = node.hi[link.factor_a] - node.lo[link.factor_a];
    const double wb = node.hi[link.factor_b] - node.lo[link.factor_b];
    const double sa = factor_score(link.factor_a);
    const double sb = factor_score(link.factor_b);
    int f = link.factor_a;
    if (wa <= 1e-12 * (1.0 + std::abs(node.lo[link.factor_a])))
      f = link.factor_b;  // degenerate box cannot be split
    else if (wb > 1e-12 * (1.0 + std::abs(node.lo[link.factor_b])) &&
             (sb > sa + 1e-15 || (sb > sa - 1e-15 && wb > wa)))
      f = link.factor_b;
    const double t = branch_point(node.lo[f], node.hi[f], point[f]);
    Node left = node, right = node;
    left.hi[f] = t;
    right.lo[f] = t;
    push_child(std::move(left), node_lb);
    push_child(std::move(right), node_lb);
  }

  void branch_widest(const Node& node) {
    int widest = -1;
    double w = 0.0;
    for (int j = 0; j < model_.num_vars(); ++j) {
      const double width = node.hi[j] - node.lo[j];
      if (width > w) {
        w = width;
        widest = j;
      }
    }
    if (widest < 0) return;  // point box that failed numerically; drop it
    const double t = branch_point(node.lo[widest], node.hi[widest], 0.5 * (node.lo[widest] + node.hi[widest]));
    Node left = node, right = node;
    if (model_.var(widest).integer) {
      left.hi[widest] = std::floor(t);
      right.lo[widest] = std::floor(t) + 1.0;
    } else {
      left.hi[widest] = t;
      right.lo[widest] = t;
    }
    push_child(std::move(left), node.bound);
    push_child(std::move(right), node.bound);
  }

  void push_child(Node child, double bound) {
    for (int j = 0; j < model_.num_vars(); ++j)
      if (child.lo[j] > child.hi[j]) return;
    child.bound = bound;
    child.index = ++node_counter_;
    queue_.push(std::move(child));
  }

  void try_incumbent(const Eigen::VectorXd& point) {
    for (int j = 0; j < model_.num_vars(); ++j)
      if (model_.var(j).integer &&
          std::abs(point[j] - std::llround(point[j])) > opts_.feas_tol)
        return;
    if (max_violation(model_, point) > opts_.feas_tol) return;
    const double obj = model_.objective_value(point);

    std::vector<long long> key;
    for (int j = 0; j < model_.num_vars(); ++j)
      if (model_.var(j).integer) key.push_back(std::llround(point[j]));
    auto it = pool_.find(key);
    if (it == pool_.end() || obj < it->second.objective)
      pool_[key] = PoolEntry{point, obj};

    if (obj < incumbent_obj_) {
      incumbent_obj_ = obj;
      incumbent_ = point;
    }
  }

  // Fixing every integer variable and one factor of every bilinear link at
  // the relaxation point leaves a pure LP; its optimum is an exactly
  // feasible point and usually a strong incumbent long before spatial
  // subdivision alone could certify one. Two complementary covers are kept:
  // when one side of the links is structurally determined (so pinning it is
  // almost never feasible), the opposite cover still produces points.
  void compute_linearizing_set() {
    std::vector<char> covered(model_.links().size(), 0);
    std::map<int, std::vector<int>> links_of;
    for (std::size_t l = 0; l < model_.links().size(); ++l) {
      links_of[model_.links()[l].factor_a].push_back(static_cast<int>(l));
      links_of[model_.links()[l].factor_b].push_back(static_cast<int>(l));
    }
    for (;;) {
      int best_var = -1;
      int best_cover = 0;
      for (const auto& [v, ls] : links_of) {
        int cover = 0;
        for (int l : ls)
          if (!covered[static_cast<std::size_t>(l)]) ++cover;
        if (cover > best_cover) {
          best_cover = cover;
          best_var = v;
        }
      }
      if (best_var < 0) break;
      cover_a_.push_back(best_var);
      for (int l : links_of[best_var]) covered[static_cast<std::size_t>(l)] = 1;
    }
    const std::set<int> in_a(cover_a_.begin(), cover_a_.end());
    std::set<int> in_b;
    for (const auto& link : model_.links()) {
      if (in_b.count(link.factor_a) || in_b.count(link.factor_b)) continue;
      if (!in_a.count(link.factor_b))
        in_b.insert(link.factor_b);
      else if (!in_a.count(link.factor_a))
        in_b.insert(link.factor_a);
      else
        in_b.insert(link.factor_b);
    }
    cover_b_.assign(in_b.begin(), in_b.end());
    if (cover_b_ == cover_a_) cover_b_.clear();
  }

  void probe(const Node& node, const Eigen::VectorXd& point) {
    probe_with(cover_a_, node, point);
    if (!cover_b_.empty()) probe_with(cover_b_, node, point);
  }

  void probe_with(const std::vector<int>& cover, const Node& node,
                  const Eigen::VectorXd& point) {
    const int n = model_.num_vars();
    Eigen::VectorXd lo = node.lo, hi = node.hi;
    auto pin = [&](int j) {
      double v = point[j];
      if (!std::isfinite(v)) v = node.lo[j];
      if (model_.var(j).integer) v = std::round(v);
      v = std::clamp(v, node.lo[j], node.hi[j]);
      lo[j] = v;
      hi[j] = v;
    };
    for (int j = 0; j < n; ++j)
      if (model_.var(j).integer) pin(j);
    for (int j : cover) pin(j);

    const int base_rows = model_.num_rows();
    LinearProgram lp;
    lp.objective = model_.objective();
    lp.lower = std::move(lo);
    lp.upper = std::move(hi);
    const int link_rows = static_cast<int>(model_.links().size());
    lp.row_coeffs.setZero(base_rows + link_rows, n);
    lp.row_rhs.resize(base_rows + link_rows);
    lp.row_rel.resize(static_cast<std::size_t>(base_rows + link_rows));
    for (int i = 0; i < base_rows; ++i) {
      const auto& row = model_.rows()[static_cast<std::size_t>(i)];
      for (const auto& t : row.terms) lp.row_coeffs(i, t.var) += t.coef;
      lp.row_rhs[i] = row.rhs;
      lp.row_rel[static_cast<std::size_t>(i)] = row.rel;
    }
    int r = base_rows;
    for (const auto& link : model_.links()) {
      // With a pinned factor the product identity is the linear row
      // w - pinned*other = 0 (both pinned: w equals the constant product).
      const bool a_pinned = lp.lower[link.factor_a] == lp.upper[link.factor_a];
      lp.row_rel[static_cast<std::size_t>(r)] = Rel::Eq;
      if (a_pinned) {
        lp.row_coeffs(r, link.product) += 1.0;
        lp.row_coeffs(r, link.factor_b) += -lp.lower[link.factor_a];
        lp.row_rhs[r] = 0.0;
      } else {
        lp.row_coeffs(r, link.product) += 1.0;
        lp.row_coeffs(r, link.factor_a) += -lp.lower[link.factor_b];
        lp.row_rhs[r] = 0.0;
      }
      ++r;
    }
    const LpSolution sol = solve_lp(lp);
    result_.work += sol.pivots;
    if (sol.status == LpStatus::Optimal) try_incumbent(sol.primal);
  }

  LpSolution solve_relaxation(const Node& node) const {
    const int n = model_.num_vars();
    const int base_rows = model_.num_rows();
    const int mc_rows = 4 * static_cast<int>(model_.links().size());
    LinearProgram lp;
    lp.objective = model_.objective();
    lp.lower = node.lo;
    lp.upper = node.hi;
    lp.row_coeffs.setZero(base_rows + mc_rows, n);
    lp.row_rhs.resize(base_rows + mc_rows);
    lp.row_rel.resize(static_cast<std::size_t>(base_rows + mc_rows));
    for (int i = 0; i < base_rows; ++i) {
      const auto& row = model_.rows()[static_cast<std::size_t>(i)];
      for (const auto& t : row.terms) lp.row_coeffs(i, t.var) += t.coef;
      lp.row_rhs[i] = row.rhs;
      lp.row_rel[static_cast<std::size_t>(i)] = row.rel;
    }
    int r = base_rows;
    for (const auto& link : model_.links()) {
      const auto cuts = mccormick_cuts(node.lo[link.factor_a], node.hi[link.factor_a],
                                       node.lo[link.factor_b], node.hi[link.factor_b]);
      for (const auto& cut : cuts) {
        lp.row_coeffs(r, link.product) += cut.w_coef;
        lp.row_coeffs(r, link.factor_a) += cut.a_coef;
        lp.row_coeffs(r, link.factor_b) += cut.b_coef;
        lp.row_rhs[r] = cut.rhs;
        lp.row_rel[static_cast<std::size_t>(r)] = cut.rel;
        ++r;
      }
    }
    return solve_lp(lp);
  }

  GlobalResult finish(GlobalStatus status) {
    result_.status = status;
    result_.upper_bound = incumbent_obj_;
    result_.incumbent = incumbent_;
    if (status == GlobalStatus::Infeasible) {
      result_.lower_bound = kInf;
      result_.upper_bound = kInf;
    } else {
      result_.lower_bound = current_lb();
    }
    result_.pool.reserve(pool_.size());
    for (const auto& [key, entry] : pool_) result_.pool.push_back(entry);
    std::stable_sort(result_.pool.begin(), result_.pool.end(),
                     [](const PoolEntry& a, const PoolEntry& b) { return a.objective < b.objective; });
    if (static_cast<int>(result_.pool.size()) > opts_.pool_size)
      result_.pool.resize(static_cast<std::size_t>(opts_.pool_size));
    return result_;
  }

  const FactorableModel& model_;
  const GlobalOptions& opts_;
  std::chrono::steady_clock::time_point start_;
  std::priority_queue<Node, std::vector<Node>, WorseBound> queue_;
  std::map<std::vector<long long>, PoolEntry> pool_;
  Eigen::VectorXd incumbent_;
  double incumbent_obj_ = kInf;
  double pruned_min_ = kInf;
  long node_counter_ = 0;
  std::vector<int> cover_a_, cover_b_;
  GlobalResult result_;
};

}  // namespace

const char* to_string(GlobalStatus s) {
  switch (s) {
    case GlobalStatus::Optimal: return "optimal";
    case GlobalStatus::Infeasible: return "infeasible";
    case GlobalStatus::BoundsOnly: return "bounds_only";
    case GlobalStatus::TimeOut: return "time_out";
  }
  return "?";
}

double branch_point(double lo, double hi, double x) {
  const double width = hi - lo;
  if (width <= 0.0) return lo;
  if (!(x > lo) || !(x < hi)) return lo + 0.5 * width;
  return std::clamp(x, lo + 0.2 * width, hi - 0.2 * width);
}

GlobalResult solve_global(const FactorableModel& model, const GlobalOptions& opts) {
  BranchAndBound bnb(model, opts);
  return bnb.run();
}

}  // namespace mscg
