#include "mscg/factorable.hpp"

#include <algorithm>
#include <cmath>

namespace mscg {

int FactorableModel::add_variable(double lower, double upper, bool integer, std::string name) {
  if (!(lower <= upper)) throw Error("empty bound interval for variable " + name);
  vars_.push_back(Variable{lower, upper, integer, false, std::move(name)});
  const auto old = objective_;
  objective_.setZero(num_vars());
  if (old.size() > 0) objective_.head(old.size()) = old;
  return num_vars() - 1;
}

int FactorableModel::add_product(int factor_a, int factor_b, std::string name) {
  const Variable& a = var(factor_a);
  const Variable& b = var(factor_b);
  if (!std::isfinite(a.lower) || !std::isfinite(a.upper) || !std::isfinite(b.lower) ||
      !std::isfinite(b.upper))
    throw Error("infinite bound: bilinear factors need finite boxes");
  const std::array<double, 4> corners = {a.lower * b.lower, a.lower * b.upper,
                                         a.upper * b.lower, a.upper * b.upper};
  const double lo = *std::min_element(corners.begin(), corners.end());
  const double hi = *std::max_element(corners.begin(), corners.end());
  const int w = add_variable(lo, hi, false, std::move(name));
  vars_.back().product_aux = true;
  links_.push_back(BilinearLink{w, factor_a, factor_b});
  return w;
}

void FactorableModel::add_row(std::vector<LinearTerm> terms, Rel rel, double rhs) {
  for (const auto& t : terms)
    if (t.var < 0 || t.var >= num_vars()) throw Error("dimension mismatch: row term");
  rows_.push_back(LinearRow{std::move(terms), rel, rhs});
}

void FactorableModel::add_objective_term(int var_idx, double coef) {
  if (var_idx < 0 || var_idx >= num_vars()) throw Error("dimension mismatch: objective term");
  objective_[var_idx] += coef;
}

int FactorableModel::num_binary_vars() const {
  int c = 0;
  for (const auto& v : vars_)
    if (v.integer && !v.product_aux) ++c;
  return c;
}

int FactorableModel::num_continuous_vars() const {
  int c = 0;
  for (const auto& v : vars_)
    if (!v.integer && !v.product_aux) ++c;
  return c;
}

double FactorableModel::objective_value(const Eigen::VectorXd& point) const {
  if (point.size() != num_vars()) throw Error("dimension mismatch: point");
  return objective_.dot(point) + objective_constant_;
}

void FactorableModel::validate() const {
  for (const auto& link : links_) {
    const Variable& a = var(link.factor_a);
    const Variable& b = var(link.factor_b);
    if (!std::isfinite(a.lower) || !std::isfinite(a.upper) || !std::isfinite(b.lower) ||
        !std::isfinite(b.upper))
      throw Error("infinite bound: bilinear factors need finite boxes");
  }
  for (const auto& v : vars_)
    if (!std::isfinite(v.lower)) throw Error("infinite bound: finite lower bounds required");
}

std::array<LinearCut, 4> mccormick_cuts(double a_lo, double a_hi, double b_lo, double b_hi) {
  if (!std::isfinite(a_lo) || !std::isfinite(a_hi) || !std::isfinite(b_lo) ||
      !std::isfinite(b_hi))
    throw Error("infinite bound: McCormick box must be finite");
  // w >= b_lo*a + a_lo*b - a_lo*b_lo        (underestimators)
  // w >= b_hi*a + a_hi*b - a_hi*b_hi
  // w <= b_hi*a + a_lo*b - a_lo*b_hi        (overestimators)
  // w <= b_lo*a + a_hi*b - a_hi*b_lo
  return {LinearCut{1.0, -b_lo, -a_lo, Rel::Ge, -a_lo * b_lo},
          LinearCut{1.0, -b_hi, -a_hi, Rel::Ge, -a_hi * b_hi},
          LinearCut{1.0, -b_hi, -a_lo, Rel::Le, -a_lo * b_hi},
          LinearCut{1.0, -b_lo, -a_hi, Rel::Le, -a_hi * b_lo}};
}

double max_violation(const FactorableModel& model, const Eigen::VectorXd& point) {
  if (point.size() != model.num_vars()) throw Error("dimension mismatch: point");
  double worst = 0.0;
  for (const auto& link : model.links()) {
    worst = std::max(worst,
                     std::abs(point[link.product] - point[link.factor_a] * point[link.factor_b]));
  }
  for (const auto& row : model.rows()) {
    double lhs = 0.0;
    for (const auto& t : row.terms) lhs += t.coef * point[t.var];
    switch (row.rel) {
      case Rel::Le: worst = std::max(worst, lhs - row.rhs); break;
      case Rel::Ge: worst = std::max(worst, row.rhs - lhs); break;
      case Rel::Eq: worst = std::max(worst, std::abs(lhs - row.rhs)); break;
    }
  }
  return worst;
}

}  // namespace mscg
