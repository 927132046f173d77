#include <doctest.h>

#include "oracles.hpp"

using namespace mscg;

namespace {

// min c_w*(x*y) + cx*x + cy*y over a box with one link; optionally a row.
FactorableModel one_link_model(double xl, double xu, double yl, double yu, double cw, double cx,
                               double cy) {
  FactorableModel m;
  const int x = m.add_variable(xl, xu);
  const int y = m.add_variable(yl, yu);
  const int w = m.add_product(x, y);
  m.add_objective_term(w, cw);
  m.add_objective_term(x, cx);
  m.add_objective_term(y, cy);
  return m;
}

}  // namespace

TEST_CASE("mccormick cuts on the unit box") {
  const auto cuts = mccormick_cuts(0.0, 1.0, 0.0, 1.0);
  // w >= 0; w >= x + y - 1; w <= y; w <= x
  CHECK(cuts[0].rhs == doctest::Approx(0.0));
  CHECK(cuts[0].a_coef == doctest::Approx(0.0));
  CHECK(cuts[0].b_coef == doctest::Approx(0.0));
  CHECK(cuts[1].a_coef == doctest::Approx(-1.0));
  CHECK(cuts[1].b_coef == doctest::Approx(-1.0));
  CHECK(cuts[1].rhs == doctest::Approx(-1.0));
  CHECK(cuts[2].a_coef == doctest::Approx(-1.0));
  CHECK(cuts[2].b_coef == doctest::Approx(0.0));
  CHECK(cuts[3].a_coef == doctest::Approx(0.0));
  CHECK(cuts[3].b_coef == doctest::Approx(-1.0));
}

TEST_CASE("mccormick cuts on [1,2]x[3,4] match the closed forms") {
  // w >= 3x + y - 3; w >= 4x + 2y - 8; w <= 4x + y - 4; w <= 3x + 2y - 6
  const auto cuts = mccormick_cuts(1.0, 2.0, 3.0, 4.0);
  const double expected[4][3] = {
      {-3.0, -1.0, -3.0}, {-4.0, -2.0, -8.0}, {-4.0, -1.0, -4.0}, {-3.0, -2.0, -6.0}};
  for (int k = 0; k < 4; ++k) {
    CHECK(cuts[k].w_coef == doctest::Approx(1.0));
    CHECK(cuts[k].a_coef == doctest::Approx(expected[k][0]));
    CHECK(cuts[k].b_coef == doctest::Approx(expected[k][1]));
    CHECK(cuts[k].rhs == doctest::Approx(expected[k][2]));
  }
  // containment of w = x*y at sampled points
  Rng rng(5);
  for (int s = 0; s < 1000; ++s) {
    const double x = rng.uniform(1.0, 2.0), y = rng.uniform(3.0, 4.0), w = x * y;
    for (const auto& cut : cuts) {
      const double lhs = cut.w_coef * w + cut.a_coef * x + cut.b_coef * y;
      if (cut.rel == Rel::Ge)
        CHECK(lhs >= cut.rhs - 1e-12);
      else
        CHECK(lhs <= cut.rhs + 1e-12);
    }
  }
}

TEST_CASE("degenerate box collapses the envelope to w = c*y") {
  const double c = 0.7;
  const auto cuts = mccormick_cuts(c, c, -2.0, 5.0);
  Rng rng(6);
  for (int s = 0; s < 200; ++s) {
    const double y = rng.uniform(-2.0, 5.0);
    // all four cuts pin w to c*y within 1e-12
    for (const auto& cut : cuts) {
      const double w_bound = (cut.rhs - cut.a_coef * c - cut.b_coef * y) / cut.w_coef;
      CHECK(std::abs(w_bound - c * y) <= 1e-12 * (1.0 + std::abs(c * y)));
    }
  }
  CHECK_THROWS_AS((void)mccormick_cuts(0.0, kInf, 0.0, 1.0), Error);
}

TEST_CASE("corner maxima of products") {
  // min -x*y over [0,1]^2 -> -1 at (1,1)
  FactorableModel m1 = one_link_model(0, 1, 0, 1, -1.0, 0.0, 0.0);
  const GlobalResult r1 = solve_global(m1);
  REQUIRE(r1.status == GlobalStatus::Optimal);
  CHECK(r1.upper_bound == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(r1.incumbent[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r1.incumbent[1] == doctest::Approx(1.0).epsilon(1e-5));

  // min x*y s.t. x + y = 1 over [0,1]^2 -> 0 on the boundary
  FactorableModel m2 = one_link_model(0, 1, 0, 1, 1.0, 0.0, 0.0);
  m2.add_row({{0, 1.0}, {1, 1.0}}, Rel::Eq, 1.0);
  const GlobalResult r2 = solve_global(m2);
  REQUIRE(r2.status == GlobalStatus::Optimal);
  CHECK(r2.upper_bound == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("grid oracle example: min c*d - 5*c*F with F = d") {
  // c in [0,1], d in [0,2], F in [0,2], F = d
  FactorableModel m;
  const int c = m.add_variable(0.0, 1.0);
  const int d = m.add_variable(0.0, 2.0);
  const int f = m.add_variable(0.0, 2.0);
  const int cd = m.add_product(c, d);
  const int cf = m.add_product(c, f);
  m.add_objective_term(cd, 1.0);
  m.add_objective_term(cf, -5.0);
  m.add_row({{f, 1.0}, {d, -1.0}}, Rel::Eq, 0.0);
  const GlobalResult res = solve_global(m);
  REQUIRE(res.status == GlobalStatus::Optimal);
  const double grid = oracles::grid_minimize(m, c, 1e-3);
  CHECK(std::abs(res.upper_bound - grid) <= 1e-3);
}

TEST_CASE("max_violation arithmetic") {
  FactorableModel m = one_link_model(0, 1, 0, 1, 1.0, 0.0, 0.0);
  Eigen::VectorXd exact(3);
  exact << 0.5, 0.5, 0.25;
  CHECK(max_violation(m, exact) == doctest::Approx(0.0));
  Eigen::VectorXd off(3);
  off << 0.5, 0.5, 0.5;
  CHECK(max_violation(m, off) == doctest::Approx(0.25));
  Eigen::VectorXd wrong_dim(2);
  CHECK_THROWS_AS((void)max_violation(m, wrong_dim), Error);
}

TEST_CASE("anytime validity against the grid oracle") {
  // two links sharing x as the complicating factor
  FactorableModel m;
  const int x = m.add_variable(0.0, 1.0);
  const int y1 = m.add_variable(0.0, 2.0);
  const int y2 = m.add_variable(0.0, 3.0);
  const int w1 = m.add_product(x, y1);
  const int w2 = m.add_product(x, y2);
  m.add_objective_term(w1, -2.0);
  m.add_objective_term(w2, 1.0);
  m.add_objective_term(y2, -0.4);
  m.add_row({{y1, 1.0}, {y2, 1.0}}, Rel::Le, 3.5);
  const double oracle = oracles::grid_minimize(m, x, 1e-3);

  GlobalOptions opts;
  opts.rel_tol = 1e-9;
  opts.abs_tol = 1e-9;
  bool sandwich_ok = true;
  opts.trace = [&](double lb, double ub) {
    if (!(lb <= oracle + 1e-5 && oracle <= ub + 1e-5)) sandwich_ok = false;
  };
  const GlobalResult res = solve_global(m, opts);
  REQUIRE(res.status == GlobalStatus::Optimal);
  CHECK(sandwich_ok);
  CHECK(std::abs(res.upper_bound - oracle) <= 1e-5);
}

TEST_CASE("branch point stays strictly interior") {
  CHECK(branch_point(0.0, 1.0, 0.5) == doctest::Approx(0.5));
  CHECK(branch_point(0.0, 1.0, 0.05) == doctest::Approx(0.2));
  CHECK(branch_point(0.0, 1.0, 0.99) == doctest::Approx(0.8));
  CHECK(branch_point(0.0, 1.0, 0.0) == doctest::Approx(0.5));  // at-bound fallback
  CHECK(branch_point(0.0, 1.0, 1.0) == doctest::Approx(0.5));
  Rng rng(9);
  for (int k = 0; k < 500; ++k) {
    const double lo = rng.uniform(-5.0, 5.0);
    const double hi = lo + rng.uniform(1e-6, 10.0);
    const double t = branch_point(lo, hi, rng.uniform(lo - 1.0, hi + 1.0));
    CHECK(t > lo);
    CHECK(t < hi);
  }
}

TEST_CASE("fixing all integers and factors reduces to a single LP") {
  // integer z in {0,..,3}, x fixed box, one link z*x
  FactorableModel m;
  const int z = m.add_variable(0.0, 3.0, true);
  const int x = m.add_variable(0.5, 0.5);
  const int w = m.add_product(z, x);
  const int y = m.add_variable(0.0, 10.0);
  m.add_objective_term(w, 1.0);
  m.add_objective_term(y, 1.0);
  m.add_row({{y, 1.0}, {z, 1.0}}, Rel::Ge, 2.0);
  const GlobalResult res = solve_global(m);
  REQUIRE(res.status == GlobalStatus::Optimal);
  // direct check: z in {0..3}, cost 0.5z + max(0, 2 - z); best z = 2 -> 1.0
  CHECK(res.upper_bound == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.lower_bound == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("pool entries are feasible points keyed by integer assignment") {
  FactorableModel m;
  const int z = m.add_variable(0.0, 2.0, true);
  const int y = m.add_variable(0.0, 2.0);
  const int w = m.add_product(z, y);
  m.add_objective_term(w, -1.0);
  m.add_objective_term(y, 0.3);
  const GlobalResult res = solve_global(m);
  REQUIRE(res.status == GlobalStatus::Optimal);
  REQUIRE(!res.pool.empty());
  for (const PoolEntry& entry : res.pool) {
    CHECK(max_violation(m, entry.point) <= 1e-6);
    CHECK(std::abs(entry.point[z] - std::round(entry.point[z])) <= 1e-6);
    CHECK(entry.objective == doctest::Approx(m.objective_value(entry.point)));
  }
  // entries are sorted by objective
  for (std::size_t k = 1; k < res.pool.size(); ++k)
    CHECK(res.pool[k - 1].objective <= res.pool[k].objective);
}

TEST_CASE("first improving mode returns early with valid bounds") {
  FactorableModel m = one_link_model(0, 1, 0, 1, -1.0, 0.0, 0.0);
  GlobalOptions opts;
  opts.mode = SolveMode::FirstImproving;
  opts.improve_threshold = -0.5;
  const GlobalResult res = solve_global(m, opts);
  CHECK((res.status == GlobalStatus::BoundsOnly || res.status == GlobalStatus::Optimal));
  CHECK(res.upper_bound < -0.5);
  CHECK(res.lower_bound <= -1.0 + 1e-6);  // still a valid global bound
}

TEST_CASE("infeasible box combinations are detected") {
  FactorableModel m = one_link_model(0, 1, 0, 1, 1.0, 0.0, 0.0);
  m.add_row({{0, 1.0}, {1, 1.0}}, Rel::Ge, 3.0);  // x + y <= 2 impossible
  CHECK(solve_global(m).status == GlobalStatus::Infeasible);
}
