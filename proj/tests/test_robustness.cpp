#include <doctest.h>

#include <cmath>

#include "acdcopf/powerflow.hpp"
#include "acdcopf/robustness.hpp"
#include "acdcopf/scenarios.hpp"

using namespace acdc;

namespace {

// One generator sized to cover the load when RES availability drops.
const char* kBoxCase = R"(
[base]
s_base_mva = 100
v_base_kv = 345

[ac_node]
1 0.90 1.10 0.00 0.00 0 0
2 0.90 1.10 0.30 0.06 0 0

[ac_branch]
1 2 1.5384615384615385 -12.307692307692308 1.0 8

[generator]
1 0.20 0.9 0.9 0.1 1.0 0.0

[res]
1 0.5 0.2 0.4

[dc_node]
1 0.90 1.10
2 0.90 1.10

[dc_line]
1 2 0.02 0 1

[vsc]
1 ac 2 1 0.05 0.01 0 0.005 1.0 1.05 0.19992003198720513 -9.9960015993602561 0.19992003198720513 -9.9960015993602561 0.88 1.12
2 res 1 2 0.05 0.01 0 0.005 1.0 1.05 0.19992003198720513 -9.9960015993602561 0.19992003198720513 -9.9960015993602561 0.88 1.12
)";

} // namespace

TEST_CASE("extreme enumeration covers the box vertices exactly once") {
  NetworkCase net = parse_case(kBoxCase);
  net.res_units.push_back({2, 0.5, 0.3, 0.5});
  ScenarioSet s = enumerate_extremes(net);
  REQUIRE(s.extremes.size() == 4);
  CHECK(s.extremes[0] == std::vector<double>({0.2, 0.3}));
  CHECK(s.extremes[1] == std::vector<double>({0.2, 0.5}));
  CHECK(s.extremes[2] == std::vector<double>({0.4, 0.3}));
  CHECK(s.extremes[3] == std::vector<double>({0.4, 0.5}));

  // degenerate box halves the vertex count
  net.res_units[1].p_avail_min = net.res_units[1].p_avail_max = 0.5;
  CHECK(enumerate_extremes(net).extremes.size() == 2);

  net.res_units[1] = {2, 0.5, 0.3, 0.5};
  net.res_units.push_back({3, 0.5, 0.1, 0.2});
  CHECK(enumerate_extremes(net).extremes.size() == 8);
}

TEST_CASE("scenario sampling is reproducible and box-bounded") {
  NetworkCase net = parse_case(kBoxCase);
  auto a = sample_scenarios(net, 100, 42);
  auto b = sample_scenarios(net, 100, 42);
  CHECK(a == b);
  CHECK(sample_scenarios(net, 100, 43) != a);
  for (const auto& s : a) {
    REQUIRE(s.size() == 1);
    CHECK(s[0] >= 0.2);
    CHECK(s[0] <= 0.4);
  }
  // empirical mean near the box midpoint (3 sigma for the uniform mean)
  auto big = sample_scenarios(net, 10000, 7);
  double mean = 0.0;
  for (const auto& s : big) mean += s[0];
  mean /= big.size();
  double sigma = 0.2 / std::sqrt(12.0) / std::sqrt(10000.0);
  CHECK(std::abs(mean - 0.3) <= 3 * sigma);
  CHECK_THROWS_AS(sample_scenarios(net, 0, 1), std::invalid_argument);
}

TEST_CASE("esm validity gate accepts assembled programs and rejects bad structure") {
  NetworkCase net = parse_case(kBoxCase);
  OperatingPoint op = base_operating_point(net);
  ScenarioSet ext = enumerate_extremes(net);
  OpfProgram m = assemble_opf(net, op, OpfMode::Eropf, ext.extremes);
  EsmValidity v = esm_validity_check(m.prog);
  CHECK(v.ok);

  ConicProgram bad = m.prog;
  bad.uncertainty.push_back({"avail", UncertainUse::MatrixCoefficient, "synthetic"});
  CHECK(!esm_validity_check(bad).ok);

  ConicProgram bad2 = m.prog;
  bad2.nonconvex.push_back({"synthetic bilinear equality"});
  CHECK(!esm_validity_check(bad2).ok);
}

TEST_CASE("robustness replay separates deterministic and robust decisions") {
  NetworkCase net = parse_case(kBoxCase);
  OperatingPoint op = base_operating_point(net);
  ScenarioSet ext = enumerate_extremes(net);

  OpfProgram dopf = assemble_opf(net, op, OpfMode::Dopf, {{0.4}});
  Solution sd = solve_mixed(dopf.prog);
  REQUIRE(sd.status == SolveStatus::Optimal);

  OpfProgram ropf = assemble_opf(net, op, OpfMode::Ropf, ext.extremes);
  Solution sr = solve_mixed(ropf.prog);
  REQUIRE(sr.status == SolveStatus::Optimal);

  OpfProgram eropf = assemble_opf(net, op, OpfMode::Eropf, ext.extremes);
  Solution se = solve_mixed(eropf.prog);
  REQUIRE(se.status == SolveStatus::Optimal);

  // consensus can only restrict the feasible set
  CHECK(sr.objective <= se.objective + 1e-8);

  auto samples = sample_scenarios(net, 12, 20260823ull);
  samples.push_back({0.2}); // force the worst vertex into the sample set

  FirstStageDecision dd = extract_first_stage(dopf, sd, net, false);
  RobustnessReport rd = evaluate_robustness(net, op, dd, samples);
  CHECK(rd.feasible < rd.total);

  FirstStageDecision dr = extract_first_stage(ropf, sr, net, false);
  RobustnessReport rr = evaluate_robustness(net, op, dr, samples);
  CHECK(rr.feasible == rr.total);

  FirstStageDecision de = extract_first_stage(eropf, se, net, true);
  RobustnessReport re = evaluate_robustness(net, op, de, samples);
  CHECK(re.feasible == re.total);
  CHECK(re.obj_mean >= rr.obj_mean - 1e-8);

  // robust decisions replayed on the vertices themselves stay feasible
  RobustnessReport rv = evaluate_robustness(net, op, dr, ext.extremes);
  CHECK(rv.feasible == rv.total);

  CHECK(rd.to_json().find("\"ratio\"") != std::string::npos);
}

TEST_CASE("one-res worst case equals the low-endpoint deterministic dispatch") {
  NetworkCase net = parse_case(kBoxCase);
  OperatingPoint op = base_operating_point(net);
  ScenarioSet ext = enumerate_extremes(net);

  OpfProgram ropf = assemble_opf(net, op, OpfMode::Ropf, ext.extremes);
  Solution sr = solve_mixed(ropf.prog);
  OpfProgram low = assemble_opf(net, op, OpfMode::Dopf, {{0.2}});
  Solution sl = solve_mixed(low.prog);
  REQUIRE(sr.status == SolveStatus::Optimal);
  REQUIRE(sl.status == SolveStatus::Optimal);
  CHECK(sr.x(ropf.info.pg[0]) == doctest::Approx(sl.x(low.info.pg[0])).epsilon(1e-4));
}
