#include <doctest.h>

#include <cmath>
#include <random>

#include "acdcopf/branch_and_bound.hpp"

using namespace acdc;

namespace {

// Exhaustive reference: solve every binary fixing with the continuous solver.
double brute_force(const ConicProgram& prog, bool* feasible) {
  std::vector<int> bins = prog.binary_indices();
  double best = std::numeric_limits<double>::infinity();
  *feasible = false;
  for (int mask = 0; mask < (1 << bins.size()); ++mask) {
    ConicProgram q = prog;
    for (size_t i = 0; i < bins.size(); ++i) {
      double v = (mask >> i) & 1;
      q.vars[bins[i]].lb = v;
      q.vars[bins[i]].ub = v;
    }
    Solution s = solve_continuous(q);
    if (s.status == SolveStatus::Optimal) {
      *feasible = true;
      best = std::min(best, s.objective);
    }
  }
  return best;
}

} // namespace

TEST_CASE("small knapsack reaches the enumerated optimum") {
  ConicProgram p;
  int x1 = p.add_var("x1", 0, 1, VarKind::Binary);
  int x2 = p.add_var("x2", 0, 1, VarKind::Binary);
  int x3 = p.add_var("x3", 0, 1, VarKind::Binary);
  p.objective.add(x1, -3.0).add(x2, -4.0).add(x3, -5.0);
  AffExpr w(-5.0);
  w.add(x1, 2.0).add(x2, 3.0).add(x3, 4.0);
  p.add_le(w, "weight");

  Solution s = solve_mixed(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(-7.0).epsilon(1e-6));
  CHECK(s.x(x1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.x(x2) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.x(x3) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  CHECK(s.mip_gap <= 1e-6);
}

TEST_CASE("binary choice with a conic subproblem") {
  // pick the cheaper of two quadratic generators under a demand equality
  ConicProgram p;
  int b = p.add_var("pick", 0, 1, VarKind::Binary);
  int g1 = p.add_var("g1", 0.0, 1.0);
  int g2 = p.add_var("g2", 0.0, 1.0);
  // g1 <= b, g2 <= 1 - b
  AffExpr c1;
  c1.add(g1, 1.0).add(b, -1.0);
  p.add_le(c1, "on1");
  AffExpr c2(-1.0);
  c2.add(g2, 1.0).add(b, 1.0);
  p.add_le(c2, "on2");
  AffExpr demand(-0.8);
  demand.add(g1, 1.0).add(g2, 1.0);
  p.add_eq(demand, "demand");
  p.add_quadratic_cost(g1, 1.0, "q1");
  p.add_quadratic_cost(g2, 3.0, "q2");

  Solution s = solve_mixed(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  // generator 1 alone costs 0.64, generator 2 alone 1.92
  CHECK(s.objective == doctest::Approx(0.64).epsilon(1e-5));
  CHECK(s.x(b) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sos1 interval selection is forced and found") {
  ConicProgram p;
  int y = p.add_var("y", 0.0, 4.0);
  std::vector<int> bs;
  std::vector<double> lo = {0, 1, 2, 3}, hi = {1, 2, 3, 4};
  AffExpr sum(-1.0), upper, lower;
  upper.add(y, 1.0);
  lower.add(y, -1.0);
  for (int k = 0; k < 4; ++k) {
    int b = p.add_var("b" + std::to_string(k), 0, 1, VarKind::Binary);
    bs.push_back(b);
    sum.add(b, 1.0);
    upper.add(b, -hi[k]);
    lower.add(b, lo[k]);
  }
  p.add_eq(sum, "pick-one");
  p.add_le(upper, "below-hi");
  p.add_le(lower, "above-lo");
  AffExpr pin(-2.5);
  pin.add(y, 1.0);
  p.add_eq(pin, "pin");
  p.sos1.push_back({bs, y, lo, hi});

  Solution s = solve_mixed(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.x(bs[2]) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.x(bs[0]) + s.x(bs[1]) + s.x(bs[3]) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
}

TEST_CASE("infeasible binary program is reported") {
  ConicProgram p;
  int b = p.add_var("b", 0, 1, VarKind::Binary);
  AffExpr lo(0.2);
  lo.add(b, -1.0); // b >= 0.2
  p.add_le(lo, "lo");
  AffExpr hi(-0.8);
  hi.add(b, 1.0); // b <= 0.8
  p.add_le(hi, "hi");
  Solution s = solve_mixed(p);
  CHECK(s.status == SolveStatus::Infeasible);
}

TEST_CASE("random milps match exhaustive enumeration") {
  std::mt19937_64 rng(7041776ull);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  std::uniform_int_distribution<int> nbins(3, 6);
  for (int trial = 0; trial < 10; ++trial) {
    int nb = nbins(rng);
    ConicProgram p;
    std::vector<int> vars;
    for (int i = 0; i < nb; ++i)
      vars.push_back(p.add_var("b" + std::to_string(i), 0, 1, VarKind::Binary));
    for (int i = 0; i < 2; ++i)
      vars.push_back(p.add_var("t" + std::to_string(i), -1.0, 1.0));
    for (int v : vars) p.objective.add(v, ud(rng));
    int rows = 3;
    for (int r = 0; r < rows; ++r) {
      AffExpr e(ud(rng));
      for (int v : vars) e.add(v, ud(rng));
      p.add_le(e, "r" + std::to_string(r));
    }

    bool feasible = false;
    double ref = brute_force(p, &feasible);
    Solution s = solve_mixed(p);
    if (!feasible) {
      CHECK(s.status == SolveStatus::Infeasible);
    } else {
      REQUIRE(s.status == SolveStatus::Optimal);
      CHECK(s.objective == doctest::Approx(ref).epsilon(1e-5).scale(1.0));
    }
  }
}
