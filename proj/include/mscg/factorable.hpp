#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "mscg/lp.hpp"

namespace mscg {

struct Variable {
  double lower = 0.0;
  double upper = 0.0;
  bool integer = false;
  bool product_aux = false;  // introduced to carry a bilinear product
  std::string name;
};

struct LinearTerm {
  int var;
  double coef;
};

struct LinearRow {
  std::vector<LinearTerm> terms;
  Rel rel;
  double rhs;
};

// product == factor_a * factor_b at any feasible point.
struct BilinearLink {
  int product;
  int factor_a;
  int factor_b;
};

// One inequality over the triple (product, factor_a, factor_b).
struct LinearCut {
  double w_coef, a_coef, b_coef;
  Rel rel;
  double rhs;
};

// Linear objective and rows plus explicit bilinear product links and
// integrality marks; minimization sense. The input language of the global
// solver used for pricing, sharing and fullspace solves.
class FactorableModel {
 public:
  int add_variable(double lower, double upper, bool integer = false, std::string name = {});

  // Registers w = a*b: adds an auxiliary product variable bounded by the
  // interval hull of the factor boxes and records the link. Both factors must
  // have finite bounds.
  int add_product(int factor_a, int factor_b, std::string name = {});

  void add_row(std::vector<LinearTerm> terms, Rel rel, double rhs);
  void add_objective_term(int var, double coef);  // accumulates
  void add_objective_constant(double value) { objective_constant_ += value; }

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  // Model-variable counts: auxiliary product carriers are excluded.
  int num_binary_vars() const;
  int num_continuous_vars() const;

  const Variable& var(int j) const { return vars_.at(static_cast<std::size_t>(j)); }
  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<LinearRow>& rows() const { return rows_; }
  const std::vector<BilinearLink>& links() const { return links_; }
  const Eigen::VectorXd& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }

  double objective_value(const Eigen::VectorXd& point) const;
  void validate() const;

 private:
  std::vector<Variable> vars_;
  std::vector<LinearRow> rows_;
  std::vector<BilinearLink> links_;
  Eigen::VectorXd objective_;  // resized lazily with vars
  double objective_constant_ = 0.0;
};

// The four McCormick envelope inequalities for w = a*b over the box
// [a_lo,a_hi] x [b_lo,b_hi]. Throws on infinite bounds.
std::array<LinearCut, 4> mccormick_cuts(double a_lo, double a_hi, double b_lo, double b_hi);

// Max over links of |w - a*b| and over rows of the constraint violation.
double max_violation(const FactorableModel& model, const Eigen::VectorXd& point);

}  // namespace mscg
