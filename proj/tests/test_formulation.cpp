#include <doctest.h>

#include <cmath>

#include "acdcopf/branch_and_bound.hpp"
#include "acdcopf/formulation.hpp"
#include "acdcopf/powerflow.hpp"

using namespace acdc;

namespace {

// 2-bus AC grid importing through a VSC pair over one DC line from a RES.
const char* kMiniCase = R"(
[base]
s_base_mva = 100
v_base_kv = 345

[ac_node]
1 0.90 1.10 0.00 0.00 0 0
2 0.90 1.10 0.30 0.06 0 0

[ac_branch]
1 2 1.5384615384615385 -12.307692307692308 1.0 8

[generator]
1 0.05 0.9 0.9 0.1 1.0 0.0

[res]
1 0.5 0.4 0.4

[dc_node]
1 0.90 1.10
2 0.90 1.10

[dc_line]
1 2 0.02 0 1

[vsc]
1 ac 2 1 0.05 0.01 0 0.005 1.0 1.05 0.19992003198720513 -9.9960015993602561 0.19992003198720513 -9.9960015993602561 0.88 1.12
2 res 1 2 0.05 0.01 0 0.005 1.0 1.05 0.19992003198720513 -9.9960015993602561 0.19992003198720513 -9.9960015993602561 0.88 1.12
)";

NetworkCase two_node_dc() {
  NetworkCase c;
  c.ac_nodes.push_back({1, 0.81, 1.21, 0.0, 0.0, 0.0, 0.0});
  c.dc_nodes.push_back({1, 0.64, 1.21});
  c.dc_nodes.push_back({2, 0.64, 1.21});
  c.dc_lines.push_back({1, 2, 0.01, false, true});
  VscStation v1;
  v1.id = 1;
  v1.dc_node = 1;
  v1.i_max = 1.0;
  VscStation v2 = v1;
  v2.id = 2;
  v2.dc_node = 2;
  c.vsc_stations.push_back(v1);
  c.vsc_stations.push_back(v2);
  return c;
}

} // namespace

TEST_CASE("power-factor wedge caps reactive output") {
  NetworkCase c;
  c.generators.push_back({1, 1.0, 0.9, 0.9, 0.0, 0.0, 0.0});
  ConicProgram p;
  std::vector<int> pg, qg;
  make_generator_vars(p, c, pg, qg, "");
  AffExpr pin(-1.0);
  pin.add(pg[0], 1.0);
  p.add_eq(pin, "pin");
  p.objective.add(qg[0], -1.0);
  Solution s = solve_continuous(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.x(qg[0]) == doctest::Approx(0.4843221048378525).epsilon(1e-6));

  p.objective.terms.clear();
  p.objective.add(qg[0], 1.0);
  s = solve_continuous(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.x(qg[0]) == doctest::Approx(-0.4843221048378525).epsilon(1e-6));
}

TEST_CASE("zero-capacity generator pins both outputs") {
  NetworkCase c;
  c.generators.push_back({1, 0.0, 0.9, 0.9, 0.0, 0.0, 0.0});
  ConicProgram p;
  std::vector<int> pg, qg;
  make_generator_vars(p, c, pg, qg, "");
  p.objective.add(qg[0], -1.0);
  Solution s = solve_continuous(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(std::abs(s.x(pg[0])) <= 1e-7);
  CHECK(std::abs(s.x(qg[0])) <= 1e-7);
}

TEST_CASE("res polygon caps apparent output") {
  NetworkCase c;
  c.res_units.push_back({1, 0.5, 0.0, 0.5});
  auto make = [&](double phi, double avail) {
    ConicProgram p;
    Boundary b;
    b.p = p.add_var("bp", -2, 2);
    b.q = p.add_var("bq", -2, 2);
    b.u = p.add_var("bu", 0.8, 1.2);
    build_res_block(p, c, 0, avail, b, "");
    p.objective.add(b.p, -std::cos(phi)).add(b.q, -std::sin(phi));
    return solve_continuous(p);
  };

  // along a cut normal (45 deg is the n = 4 direction of the N = 8 fan)
  Solution s = make(3.14159265358979323846 / 4.0, 0.5);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(-s.objective == doctest::Approx(0.5).epsilon(1e-6));

  // worst direction between adjacent normals: radius s / cos(pi / 32)
  s = make(3.14159265358979323846 / 4.0 + 3.14159265358979323846 / 32.0, 0.5);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(-s.objective == doctest::Approx(0.5 / std::cos(3.14159265358979323846 / 32.0))
                            .epsilon(1e-6));

  // availability bound gates active power entirely
  s = make(0.0, 0.0);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(-s.objective <= 1e-7);
}

TEST_CASE("res point (0.5, 0.1) violates the polygon at full availability") {
  NetworkCase c;
  c.res_units.push_back({1, 0.5, 0.0, 0.5});
  ConicProgram p;
  Boundary b;
  b.p = p.add_var("bp", -2, 2);
  b.q = p.add_var("bq", -2, 2);
  b.u = p.add_var("bu", 0.8, 1.2);
  build_res_block(p, c, 0, 0.5, b, "");
  AffExpr pinp(-0.5);
  pinp.add(b.p, 1.0);
  p.add_eq(pinp, "pinp");
  AffExpr pinq(-0.1);
  pinq.add(b.q, 1.0);
  p.add_eq(pinq, "pinq");
  CHECK(solve_continuous(p).status == SolveStatus::Infeasible);
}

TEST_CASE("two-node dc line matches the closed-form physics") {
  NetworkCase c = two_node_dc();
  FormulationOptions opts;
  ConicProgram p;
  int inj1 = p.add_var("inj1", -0.5, -0.5); // 0.5 pu pushed into node 1
  int inj2 = p.add_var("inj2", -2.0, 2.0);
  MtdcVars dc = build_mtdc_block(p, c, {}, {{1, inj1}, {2, inj2}}, "", opts);
  AffExpr pin(-1.0);
  pin.add(dc.u[0], 1.0);
  p.add_eq(pin, "pin-u1");
  int l = p.var_index("dc.l(1,2)");
  REQUIRE(l >= 0);
  p.objective.add(l, 1.0);

  Solution s = solve_continuous(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.x(l) == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(s.x(dc.u[1]) == doctest::Approx(0.990025).epsilon(1e-6));
  CHECK(s.x(p.var_index("dc.r(1,2)")) == doctest::Approx(-0.4975).epsilon(1e-6));
  CHECK(s.x(inj2) == doctest::Approx(0.4975).epsilon(1e-6));
}

TEST_CASE("switching gate matches fixed statuses for every assignment") {
  NetworkCase c = two_node_dc();
  FormulationOptions opts;
  for (int a = 0; a <= 1; ++a) {
    for (double push : {0.0, 0.5}) {
      // switched model with alpha pinned
      ConicProgram p;
      int alpha = p.add_var("alpha", a, a, VarKind::Binary, "mtdc");
      int inj1 = p.add_var("inj1", -push, -push);
      int inj2 = p.add_var("inj2", -2.0, 2.0);
      MtdcVars dc = build_mtdc_block(p, c, {alpha}, {{1, inj1}, {2, inj2}}, "", opts);
      AffExpr pin(-1.0);
      pin.add(dc.u[0], 1.0);
      p.add_eq(pin, "pin-u1");
      p.objective.add(p.var_index("dc.l(1,2)"), 1.0);
      Solution s = solve_continuous(p);

      // fixed-status reference
      NetworkCase cf = c;
      cf.dc_lines[0].closed = a == 1;
      ConicProgram q;
      int finj1 = q.add_var("inj1", -push, -push);
      int finj2 = q.add_var("inj2", -2.0, 2.0);
      MtdcVars fdc = build_mtdc_block(q, cf, {}, {{1, finj1}, {2, finj2}}, "", opts);
      AffExpr fpin(-1.0);
      fpin.add(fdc.u[0], 1.0);
      q.add_eq(fpin, "pin-u1");
      q.objective.add(q.var_index("dc.l(1,2)"), 1.0);
      Solution sf = solve_continuous(q);

      CHECK(s.status == sf.status);
      if (s.status == SolveStatus::Optimal)
        CHECK(s.objective == doctest::Approx(sf.objective).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("open switched line decouples the voltages") {
  NetworkCase c = two_node_dc();
  FormulationOptions opts;
  ConicProgram p;
  int alpha = p.add_var("alpha", 0, 0, VarKind::Binary, "mtdc");
  int inj1 = p.add_var("inj1", 0.0, 0.0);
  int inj2 = p.add_var("inj2", 0.0, 0.0);
  MtdcVars dc = build_mtdc_block(p, c, {alpha}, {{1, inj1}, {2, inj2}}, "", opts);
  AffExpr pin(-1.21);
  pin.add(dc.u[0], 1.0);
  p.add_eq(pin, "pin-u1");
  p.objective.add(dc.u[1], 1.0);
  Solution s = solve_continuous(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.x(dc.u[1]) == doctest::Approx(0.64).epsilon(1e-6)); // its own lower bound
}

TEST_CASE("mini case end-to-end deterministic solve") {
  NetworkCase net = parse_case(kMiniCase);
  OperatingPoint op = base_operating_point(net);
  FormulationOptions fopts;
  OpfProgram m = assemble_opf(net, op, OpfMode::Dopf, {{0.4}}, fopts);

  Solution s = solve_mixed(m.prog);
  REQUIRE(s.status == SolveStatus::Optimal);

  // the grid imports roughly load - generation through the converters
  double pg = s.x(m.info.pg[0]);
  double pr = s.x(m.info.res_p[0][0]);
  CHECK(pg >= -1e-7);
  CHECK(pg <= 0.05 + 1e-7);
  CHECK(pr <= 0.4 + 1e-7);
  CHECK(pg + pr >= 0.30); // covers the load plus losses
  CHECK(s.objective > 0.0);

  // converter envelope sandwich: i_c^2 <= l_c <= i_c^2 + (i_max/K)^2/4
  for (int vsc : {1, 2}) {
    double ic = s.x(m.prog.var_index("vsc#" + std::to_string(vsc) + ".ic"));
    double lc = s.x(m.prog.var_index("vsc#" + std::to_string(vsc) + ".lc"));
    CHECK(lc >= ic * ic - 1e-6);
    double width = 1.0 / fopts.envelope_segments;
    CHECK(lc <= ic * ic + width * width / 4.0 + 1e-6);
  }

  // physical relaxations should be tight; only the secant-envelope helper
  // cone (label *.current) may carry slack up to the envelope gap
  ConeResidualReport rep = check_cone_residuals(s.x, m.prog);
  for (const auto& cs : rep.slacks) {
    if (cs.label.find(".current") != std::string::npos) {
      CHECK(cs.relative_slack <= 0.25 * 0.25 / 4.0 + 1e-6);
    } else {
      CHECK(cs.relative_slack <= 1e-4);
    }
  }
}

TEST_CASE("assembled programs register uncertainty and sizes per mode") {
  NetworkCase net = parse_case(kMiniCase);
  OperatingPoint op = base_operating_point(net);
  std::vector<std::vector<double>> scen = {{0.4}, {0.3}};

  OpfProgram ropf = assemble_opf(net, op, OpfMode::Ropf, scen);
  OpfProgram eropf = assemble_opf(net, op, OpfMode::Eropf, scen);

  CHECK(ropf.prog.uncertainty.size() == 2);
  CHECK(eropf.prog.uncertainty.size() == 2);
  // E-ROPF shares one boundary triple per station across scenarios
  int stations = 2, triples = 3;
  CHECK(ropf.prog.vars.size() ==
        eropf.prog.vars.size() + static_cast<size_t>(stations * triples));
  // boundary listing: one AC system and one RES system
  CHECK(eropf.prog.boundary_vars.at("ac#1").size() == 3);
  CHECK(eropf.prog.boundary_vars.at("res#1").size() == 3);
  // binaries live only in MTDC/VSC blocks
  for (int b : eropf.prog.binary_indices()) {
    const std::string& owner = eropf.prog.vars[b].owner;
    CHECK((owner == "mtdc" || owner.rfind("vsc#", 0) == 0));
  }
}

TEST_CASE("scenario order does not change the optimum") {
  NetworkCase net = parse_case(kMiniCase);
  OperatingPoint op = base_operating_point(net);
  OpfProgram a = assemble_opf(net, op, OpfMode::Ropf, {{0.4}, {0.32}});
  OpfProgram b = assemble_opf(net, op, OpfMode::Ropf, {{0.32}, {0.4}});
  Solution sa = solve_mixed(a.prog);
  Solution sb = solve_mixed(b.prog);
  REQUIRE(sa.status == SolveStatus::Optimal);
  REQUIRE(sb.status == SolveStatus::Optimal);
  CHECK(sa.objective == doctest::Approx(sb.objective).epsilon(1e-6));
}
