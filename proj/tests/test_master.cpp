#include <doctest.h>

#include "mscg/master.hpp"
#include "mscg/rng.hpp"

using namespace mscg;

namespace {

Eigen::VectorXi iv(std::initializer_list<int> vals) {
  Eigen::VectorXi v(static_cast<Eigen::Index>(vals.size()));
  int i = 0;
  for (int x : vals) v[i++] = x;
  return v;
}

// Two nodes, one global variable pinned to 1 by an equality, and one
// consistency row per node tying the selected column to u.
MasterModel two_node_master(double cost1, double cost2) {
  MasterModel m;
  const int u = m.add_global_var(0.0, 1.0, true, 3.0, "u");
  m.ensure_node_pool(1, iv({0}), iv({1}));
  m.ensure_node_pool(2, iv({0}), iv({1}));
  const int pin = m.add_linking_row({{u, 1.0}}, Rel::Eq, 1.0);
  (void)pin;
  for (NodeId n : {1, 2}) {
    const int row = m.add_linking_row({{u, -1.0}}, Rel::Eq, 0.0);
    m.set_node_row(row, n, Eigen::VectorXd::Ones(1));
  }
  m.add_column(Column{1, iv({1}), cost1, true, ColumnOrigin::Initial});
  m.add_column(Column{2, iv({1}), cost2, true, ColumnOrigin::Initial});
  return m;
}

// Random master over two nodes with 2-dimensional state vectors.
MasterModel random_master(Rng& rng) {
  MasterModel m;
  const int u = m.add_global_var(0.0, 1.0, false, rng.uniform(-2.0, 2.0));
  m.ensure_node_pool(1, iv({0, 0}), iv({2, 2}));
  m.ensure_node_pool(2, iv({0, 0}), iv({2, 2}));
  for (int r = 0; r < 2; ++r) {
    const int row = m.add_linking_row({{u, rng.uniform(-1.0, 1.0)}},
                                      rng.uniform() < 0.5 ? Rel::Ge : Rel::Le,
                                      rng.uniform(-1.0, 3.0));
    for (NodeId n : {1, 2}) {
      Eigen::VectorXd d(2);
      d << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
      m.set_node_row(row, n, d);
    }
  }
  for (NodeId n : {1, 2}) {
    const int k = rng.uniform_int(1, 3);
    for (int i = 0; i < k; ++i)
      m.add_column(Column{n, iv({rng.uniform_int(0, 2), rng.uniform_int(0, 2)}),
                          rng.uniform(-5.0, 5.0), true, ColumnOrigin::Initial});
  }
  return m;
}

}  // namespace

TEST_CASE("add_column outcomes") {
  MasterModel m;
  m.ensure_node_pool(1, iv({0, 0}), iv({1, 1}));
  CHECK(m.add_column(Column{1, iv({1, 0}), 5.0, false, ColumnOrigin::Priced}) ==
        AddOutcome::Added);
  // duplicate with higher cost keeps the pool unchanged
  CHECK(m.add_column(Column{1, iv({1, 0}), 6.0, false, ColumnOrigin::Priced}) ==
        AddOutcome::DedupedKept);
  CHECK(m.pool(1).size() == 1);
  CHECK(m.pool(1)[0].cost == doctest::Approx(5.0));
  // duplicate with lower optimal cost replaces and sets the flag
  CHECK(m.add_column(Column{1, iv({1, 0}), 4.0, true, ColumnOrigin::Shared}) ==
        AddOutcome::ReplacedCheaper);
  CHECK(m.pool(1)[0].cost == doctest::Approx(4.0));
  CHECK(m.pool(1)[0].cost_is_optimal);
  // the flag survives a later non-optimal duplicate
  CHECK(m.add_column(Column{1, iv({1, 0}), 9.0, false, ColumnOrigin::Priced}) ==
        AddOutcome::DedupedKept);
  CHECK(m.pool(1)[0].cost_is_optimal);
  // tombstoned vectors are rejected
  m.tombstone(1, iv({1, 0}));
  CHECK(m.pool(1).empty());
  CHECK(m.add_column(Column{1, iv({1, 0}), 1.0, true, ColumnOrigin::Priced}) ==
        AddOutcome::RejectedTombstoned);
  // bounds are enforced
  CHECK_THROWS_AS((void)m.add_column(Column{1, iv({2, 0}), 1.0, true, ColumnOrigin::Priced}),
                  Error);
}

TEST_CASE("unique feasible point: rho = 1 per node, z = costs + u term") {
  MasterModel m = two_node_master(2.0, 7.0);
  const RelaxedMasterSolution sol = m.solve_relaxed();
  CHECK(sol.artificial_mass == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(sol.u[0] == doctest::Approx(1.0));
  REQUIRE(sol.rho.size() == 2);
  CHECK(sol.rho[0][0] == doctest::Approx(1.0));
  CHECK(sol.rho[1][0] == doctest::Approx(1.0));
  CHECK(sol.z_rm == doctest::Approx(2.0 + 7.0 + 3.0));
  // every pool column prices non-negative against its own optimal duals
  for (NodeId n : {1, 2})
    for (const Column& col : m.pool(n)) CHECK(m.reduced_cost(col, sol.duals) >= -1e-7);
}

TEST_CASE("inconsistent pools leave artificial mass but still return duals") {
  MasterModel m;
  const int u = m.add_global_var(0.0, 1.0, false, 0.0);
  m.ensure_node_pool(1, iv({0}), iv({1}));
  m.ensure_node_pool(2, iv({0}), iv({1}));
  for (NodeId n : {1, 2}) {
    const int row = m.add_linking_row({{u, -1.0}}, Rel::Eq, 0.0);
    m.set_node_row(row, n, Eigen::VectorXd::Ones(1));
  }
  m.add_column(Column{1, iv({1}), 1.0, true, ColumnOrigin::Initial});
  m.add_column(Column{2, iv({0}), 1.0, true, ColumnOrigin::Initial});
  const RelaxedMasterSolution sol = m.solve_relaxed();
  CHECK(sol.artificial_mass > 1e-6);
  CHECK(sol.duals.gamma.size() == 2);
  CHECK(sol.duals.mu.size() == 2);
}

TEST_CASE("reduced cost arithmetic") {
  MasterModel m;
  m.ensure_node_pool(1, iv({0}), iv({2}));
  const int row = m.add_linking_row({}, Rel::Ge, 0.0);
  m.set_node_row(row, 1, Eigen::VectorXd::Constant(1, 2.0));
  m.add_column(Column{1, iv({1}), 5.0, true, ColumnOrigin::Initial});
  DualPrices duals;
  duals.gamma = Eigen::VectorXd::Constant(1, 1.0);  // gamma' D x = 1 * 2 * 1 = 2
  duals.mu = Eigen::VectorXd::Constant(1, 1.0);
  CHECK(m.reduced_cost(m.pool(1)[0], duals) == doctest::Approx(2.0));
  duals.gamma.setZero();
  duals.mu.setZero();
  CHECK(m.reduced_cost(m.pool(1)[0], duals) == doctest::Approx(5.0));
}

TEST_CASE("integer recovery picks the cheapest consistent column") {
  // One node, columns x=0 and x=2, one row requiring sum rho x >= 1.
  MasterModel m;
  m.ensure_node_pool(1, iv({0}), iv({2}));
  const int row = m.add_linking_row({}, Rel::Ge, 1.0);
  m.set_node_row(row, 1, Eigen::VectorXd::Ones(1));
  m.add_column(Column{1, iv({0}), 0.0, true, ColumnOrigin::Initial});
  m.add_column(Column{1, iv({2}), 3.0, true, ColumnOrigin::Initial});
  const RelaxedMasterSolution lp = m.solve_relaxed();
  CHECK(lp.rho_fractionality > 0.1);  // LP mixes the two columns
  CHECK(lp.z_rm == doctest::Approx(1.5));
  const IntegerMasterSolution ip = m.solve_integer();
  REQUIRE(ip.status == GlobalStatus::Optimal);
  CHECK(ip.objective == doctest::Approx(3.0));
  CHECK(ip.selected.at(1) == 1);
  CHECK(ip.objective >= lp.z_rm - 1e-9);
}

TEST_CASE("LP-integral pools solve at the root") {
  MasterModel m = two_node_master(1.0, 2.0);
  const RelaxedMasterSolution lp = m.solve_relaxed();
  CHECK(lp.rho_fractionality <= 1e-9);
  const IntegerMasterSolution ip = m.solve_integer();
  REQUIRE(ip.status == GlobalStatus::Optimal);
  CHECK(ip.objective == doctest::Approx(lp.z_rm).epsilon(1e-9));
}

TEST_CASE("infeasible integer restriction is reported") {
  // u pinned to 1 but the only columns force u = 0.
  MasterModel m;
  const int u = m.add_global_var(0.0, 1.0, true, 0.0);
  m.ensure_node_pool(1, iv({0}), iv({1}));
  m.add_linking_row({{u, 1.0}}, Rel::Eq, 1.0);
  const int row = m.add_linking_row({{u, -1.0}}, Rel::Eq, 0.0);
  m.set_node_row(row, 1, Eigen::VectorXd::Ones(1));
  m.add_column(Column{1, iv({0}), 1.0, true, ColumnOrigin::Initial});
  CHECK(m.solve_integer().status == GlobalStatus::Infeasible);
  CHECK(m.solve_relaxed().artificial_mass > 1e-6);  // LP stays solvable
}

TEST_CASE("property: negative-rc columns never increase z_rm, integer >= relaxed") {
  Rng rng(321);
  int added = 0;
  for (int trial = 0; trial < 40; ++trial) {
    MasterModel m = random_master(rng);
    const RelaxedMasterSolution before = m.solve_relaxed();
    const IntegerMasterSolution ip = m.solve_integer();
    if (ip.status == GlobalStatus::Optimal) CHECK(ip.objective >= before.z_rm - 1e-9);
    Column cand{rng.uniform() < 0.5 ? 1 : 2, iv({rng.uniform_int(0, 2), rng.uniform_int(0, 2)}),
                rng.uniform(-6.0, 2.0), true, ColumnOrigin::Priced};
    if (m.reduced_cost(cand, before.duals) < -1e-9) {
      if (m.add_column(cand) == AddOutcome::Added) {
        const RelaxedMasterSolution after = m.solve_relaxed();
        CHECK(after.z_rm <= before.z_rm + 1e-9);
        ++added;
      }
    }
  }
  CHECK(added > 5);
}

TEST_CASE("empty pools are rejected") {
  MasterModel m;
  m.ensure_node_pool(1, iv({0}), iv({1}));
  CHECK_THROWS_AS((void)m.solve_relaxed(), Error);
}
