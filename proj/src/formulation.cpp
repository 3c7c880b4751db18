#include "acdcopf/formulation.hpp"

#include <cmath>
#include <stdexcept>

namespace acdc {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string id_tag(const std::string& base, int id) { return base + std::to_string(id); }

// Half-plane fan covering all four quadrants: for each angle in [0, pi/2],
// +/- (cos a * p + sin a * q) <= cap.
void add_polygon(ConicProgram& prog, const AffExpr& p, const AffExpr& q, double cap,
                 int segments, const std::string& label) {
  for (int n = 0; n <= segments; ++n) {
    double a = n * kPi / (2.0 * segments);
    double c = std::cos(a), s = std::sin(a);
    AffExpr hi(-cap);
    hi.add(p, c).add(q, s);
    prog.add_le(hi, label);
    AffExpr lo(-cap);
    lo.add(p, -c).add(q, -s);
    prog.add_le(lo, label);
  }
}

int pcc_node_of(const NetworkCase& net, const VscStation& v) {
  return v.side == VscSide::AcGrid ? net.ac_node_index(v.ac_ref) : -1;
}

} // namespace

double derive_big_m(const NetworkCase& net) {
  double m = 0.0;
  for (const auto& v : net.vsc_stations) m += v.i_max;
  return std::max(m, 1.0);
}

Boundary make_boundary(ConicProgram& prog, const NetworkCase& net, int vsc_idx,
                       const std::string& tag, const FormulationOptions& opts) {
  const VscStation& v = net.vsc_stations[vsc_idx];
  double m = opts.big_m > 0 ? opts.big_m : derive_big_m(net);
  double u_lo = v.u_min, u_hi = v.u_max;
  if (int node = pcc_node_of(net, v); node >= 0) {
    u_lo = std::max(u_lo, net.ac_nodes[node].u_min);
    u_hi = std::min(u_hi, net.ac_nodes[node].u_max);
  }
  std::string owner = id_tag("boundary#", v.id);
  Boundary b;
  b.p = prog.add_var(owner + ".p" + tag, -m, m, VarKind::Continuous, owner);
  b.q = prog.add_var(owner + ".q" + tag, -m, m, VarKind::Continuous, owner);
  b.u = prog.add_var(owner + ".u" + tag, u_lo, u_hi, VarKind::Continuous, owner);
  return b;
}

void make_generator_vars(ConicProgram& prog, const NetworkCase& net,
                         std::vector<int>& pg, std::vector<int>& qg,
                         const std::string& tag) {
  pg.clear();
  qg.clear();
  for (size_t g = 0; g < net.generators.size(); ++g) {
    const Generator& gen = net.generators[g];
    double t_cap = std::tan(std::acos(gen.pf_cap));
    double t_ind = std::tan(std::acos(gen.pf_ind));
    double q_span = gen.p_max * std::max(t_cap, t_ind);
    std::string name = id_tag("gen", static_cast<int>(g));
    int p = prog.add_var(name + ".p" + tag, 0.0, gen.p_max, VarKind::Continuous, "ac#1");
    int q = prog.add_var(name + ".q" + tag, -q_span, q_span, VarKind::Continuous, "ac#1");
    // power-factor wedge: -tan(phi_cap) p <= q <= tan(phi_ind) p
    AffExpr lo;
    lo.add(q, -1.0).add(p, -t_cap);
    prog.add_le(lo, name + ".wedge" + tag);
    AffExpr hi;
    hi.add(q, 1.0).add(p, -t_ind);
    prog.add_le(hi, name + ".wedge" + tag);
    pg.push_back(p);
    qg.push_back(q);
  }
}

AcBlockVars build_ac_block(ConicProgram& prog, const NetworkCase& net,
                           const OperatingPoint& op, const std::vector<int>& pg,
                           const std::vector<int>& qg,
                           const std::map<int, Boundary>& bnd, const std::string& tag) {
  const int n = static_cast<int>(net.ac_nodes.size());
  if (op.fwd.size() != net.ac_branches.size())
    throw std::invalid_argument("operating point lacks linearization coefficients");

  // PCC boundary per AC node index
  std::vector<const Boundary*> pcc(n, nullptr);
  for (const auto& [vsc_id, b] : bnd) {
    int vi = -1;
    for (size_t k = 0; k < net.vsc_stations.size(); ++k)
      if (net.vsc_stations[k].id == vsc_id) vi = static_cast<int>(k);
    if (vi < 0 || net.vsc_stations[vi].side != VscSide::AcGrid)
      throw std::invalid_argument("boundary does not belong to an AC-side station");
    int node = pcc_node_of(net, net.vsc_stations[vi]);
    if (pcc[node])
      throw std::invalid_argument("two stations share one PCC node");
    pcc[node] = &b;
  }

  AcBlockVars out;
  const double th_box = 3.2;
  for (int i = 0; i < n; ++i) {
    const AcNode& node = net.ac_nodes[i];
    std::string name = id_tag("ac.u", node.id) + tag;
    int u;
    if (pcc[i]) {
      u = pcc[i]->u;
      // boundary variable carries the station's box; intersect with the node's
      AffExpr lo(node.u_min);
      lo.add(u, -1.0);
      prog.add_le(lo, name + ".lb");
      AffExpr hi(-node.u_max);
      hi.add(u, 1.0);
      prog.add_le(hi, name + ".ub");
    } else {
      u = prog.add_var(name, node.u_min, node.u_max, VarKind::Continuous, "ac#1");
    }
    int th = prog.add_var(id_tag("ac.th", node.id) + tag, -th_box, th_box,
                          VarKind::Continuous, "ac#1");
    out.u.push_back(u);
    out.theta.push_back(th);
  }
  prog.add_eq(AffExpr::var(out.theta[0]), "angle-ref" + tag);

  // linearized flow p_ij/q_ij as affine expressions of (u_i, u_j, th_i - th_j)
  auto flow = [&](const BranchLin& l, int ui, int uj, int thi, int thj, bool active) {
    AffExpr e;
    if (active) {
      e.constant = l.p0 - l.dp_dui * l.ui_k - l.dp_duj * l.uj_k - l.dp_dtheta * l.theta_k;
      e.add(ui, l.dp_dui).add(uj, l.dp_duj).add(thi, l.dp_dtheta).add(thj, -l.dp_dtheta);
    } else {
      e.constant = l.q0 - l.dq_dui * l.ui_k - l.dq_duj * l.uj_k - l.dq_dtheta * l.theta_k;
      e.add(ui, l.dq_dui).add(uj, l.dq_duj).add(thi, l.dq_dtheta).add(thj, -l.dq_dtheta);
    }
    return e;
  };

  std::vector<AffExpr> p_bal(n), q_bal(n);
  for (size_t k = 0; k < net.ac_branches.size(); ++k) {
    const AcBranch& br = net.ac_branches[k];
    int i = net.ac_node_index(br.from);
    int j = net.ac_node_index(br.to);
    AffExpr pf = flow(op.fwd[k], out.u[i], out.u[j], out.theta[i], out.theta[j], true);
    AffExpr qf = flow(op.fwd[k], out.u[i], out.u[j], out.theta[i], out.theta[j], false);
    AffExpr pr = flow(op.rev[k], out.u[j], out.u[i], out.theta[j], out.theta[i], true);
    AffExpr qr = flow(op.rev[k], out.u[j], out.u[i], out.theta[j], out.theta[i], false);
    p_bal[i].add(pf);
    q_bal[i].add(qf);
    p_bal[j].add(pr);
    q_bal[j].add(qr);
    std::string lbl = "ac.cap(" + std::to_string(br.from) + "," + std::to_string(br.to) +
                      ")" + tag;
    add_polygon(prog, pf, qf, br.s_max, br.polygon_n, lbl);
    add_polygon(prog, pr, qr, br.s_max, br.polygon_n, lbl);
  }

  for (int i = 0; i < n; ++i) {
    const AcNode& node = net.ac_nodes[i];
    // flows + shunt draw - generation + load + VSC draw == 0
    p_bal[i].add(out.u[i], node.g_shunt);
    q_bal[i].add(out.u[i], -node.b_shunt);
    for (size_t g = 0; g < net.generators.size(); ++g)
      if (net.ac_node_index(net.generators[g].node) == i) {
        p_bal[i].add(pg[g], -1.0);
        q_bal[i].add(qg[g], -1.0);
      }
    p_bal[i].constant += node.p_load;
    q_bal[i].constant += node.q_load;
    if (pcc[i]) {
      p_bal[i].add(pcc[i]->p, 1.0);
      q_bal[i].add(pcc[i]->q, 1.0);
    }
    prog.add_eq(p_bal[i], id_tag("ac.balance-p", node.id) + tag);
    prog.add_eq(q_bal[i], id_tag("ac.balance-q", node.id) + tag);
  }
  return out;
}

int build_res_block(ConicProgram& prog, const NetworkCase& net, int res_idx,
                    double avail, const Boundary& bnd, const std::string& tag) {
  const ResUnit& r = net.res_units[res_idx];
  std::string owner = id_tag("res#", r.id);
  int p = prog.add_var(owner + ".p" + tag, 0.0, r.s_max, VarKind::Continuous, owner);
  int q =
      prog.add_var(owner + ".q" + tag, -r.s_max, r.s_max, VarKind::Continuous, owner);

  std::string avail_lbl = owner + ".avail" + tag;
  AffExpr cap(-avail);
  cap.add(p, 1.0);
  prog.add_le(cap, avail_lbl);
  prog.uncertainty.push_back({owner + ".avail", UncertainUse::LinearRhs, avail_lbl});

  add_polygon(prog, AffExpr::var(p), AffExpr::var(q), r.s_max, 8, owner + ".cap" + tag);

  AffExpr lp;
  lp.add(p, 1.0).add(bnd.p, -1.0);
  prog.add_eq(lp, owner + ".link-p" + tag);
  AffExpr lq;
  lq.add(q, 1.0).add(bnd.q, -1.0);
  prog.add_eq(lq, owner + ".link-q" + tag);
  return p;
}

std::vector<int> make_alpha_vars(ConicProgram& prog, const NetworkCase& net) {
  std::vector<int> alpha;
  for (const auto& l : net.dc_lines) {
    std::string name =
        "alpha(" + std::to_string(l.from) + "," + std::to_string(l.to) + ")";
    if (l.switchable) {
      alpha.push_back(prog.add_var(name, 0, 1, VarKind::Binary, "mtdc"));
    } else {
      double v = l.closed ? 1.0 : 0.0;
      alpha.push_back(prog.add_var(name, v, v, VarKind::Binary, "mtdc"));
    }
  }
  return alpha;
}

MtdcVars build_mtdc_block(ConicProgram& prog, const NetworkCase& net,
                          const std::vector<int>& alpha,
                          const std::map<int, int>& p_m2v_by_vsc,
                          const std::string& tag, const FormulationOptions& opts) {
  double m = opts.big_m > 0 ? opts.big_m : derive_big_m(net);
  double u_floor = kInf;
  for (const auto& nd : net.dc_nodes) u_floor = std::min(u_floor, nd.u_min);
  double l_cap = m * m / std::max(u_floor, 1e-6);

  MtdcVars out;
  for (const auto& nd : net.dc_nodes)
    out.u.push_back(prog.add_var(id_tag("dc.u", nd.id) + tag, nd.u_min, nd.u_max,
                                 VarKind::Continuous, "mtdc"));

  std::vector<AffExpr> balance(net.dc_nodes.size());
  for (size_t k = 0; k < net.dc_lines.size(); ++k) {
    const DcLine& ln = net.dc_lines[k];
    int i = net.dc_node_index(ln.from);
    int j = net.dc_node_index(ln.to);
    std::string lbl = "(" + std::to_string(ln.from) + "," + std::to_string(ln.to) + ")";
    bool switched = !alpha.empty();
    bool open_fixed = !switched && !ln.closed;

    double span = open_fixed ? 0.0 : m;
    int pij = prog.add_var("dc.p" + lbl + tag, -span, span, VarKind::Continuous, "mtdc");
    int pji = prog.add_var("dc.r" + lbl + tag, -span, span, VarKind::Continuous, "mtdc");
    int l = prog.add_var("dc.l" + lbl + tag, 0.0, open_fixed ? 0.0 : l_cap,
                         VarKind::Continuous, "mtdc");
    balance[i].add(pij, 1.0);
    balance[j].add(pji, 1.0);

    AffExpr loss;
    loss.add(pij, 1.0).add(pji, 1.0).add(l, -ln.r);
    prog.add_eq(loss, "dc.loss" + lbl + tag);
    if (!open_fixed) {
      prog.add_rotated(AffExpr::var(pij), AffExpr::var(l), AffExpr::var(out.u[i]),
                       "dc.cone" + lbl + tag);
      prog.add_rotated(AffExpr::var(pji), AffExpr::var(l), AffExpr::var(out.u[j]),
                       "dc.cone" + lbl + tag);
    }

    if (!switched) {
      if (ln.closed) {
        AffExpr drop;
        drop.add(out.u[i], 1.0).add(out.u[j], -1.0).add(pij, -ln.r).add(pji, ln.r);
        prog.add_eq(drop, "dc.drop" + lbl + tag);
      }
      continue;
    }

    int a = alpha[k];
    for (int pvar : {pij, pji}) {
      AffExpr hi;
      hi.add(pvar, 1.0).add(a, -m);
      prog.add_le(hi, "dc.gate" + lbl + tag);
      AffExpr lo;
      lo.add(pvar, -1.0).add(a, -m);
      prog.add_le(lo, "dc.gate" + lbl + tag);
    }

    // relaxed voltage drop via per-line shunt auxiliaries
    int bij = prog.add_var("dc.b" + lbl + tag, 0.0, net.dc_nodes[i].u_max,
                           VarKind::Continuous, "mtdc");
    int tij = prog.add_var("dc.t" + lbl + tag, 0.0, net.dc_nodes[j].u_max,
                           VarKind::Continuous, "mtdc");
    AffExpr drop;
    drop.add(out.u[i], 1.0).add(bij, -1.0).add(out.u[j], -1.0).add(tij, 1.0);
    drop.add(pij, -ln.r).add(pji, ln.r);
    prog.add_eq(drop, "dc.drop" + lbl + tag);

    auto hull = [&](int aux, int u, double lo_b, double hi_b, const char* what) {
      // alpha = 0: lo <= aux <= hi and u - aux = 0; alpha = 1: aux = 0
      AffExpr c1(lo_b);
      c1.add(a, -lo_b).add(aux, -1.0);
      prog.add_le(c1, std::string("dc.") + what + lbl + tag);
      AffExpr c2(-hi_b);
      c2.add(a, hi_b).add(aux, 1.0);
      prog.add_le(c2, std::string("dc.") + what + lbl + tag);
      AffExpr c3;
      c3.add(a, lo_b).add(u, -1.0).add(aux, 1.0);
      prog.add_le(c3, std::string("dc.") + what + lbl + tag);
      AffExpr c4;
      c4.add(u, 1.0).add(aux, -1.0).add(a, -hi_b);
      prog.add_le(c4, std::string("dc.") + what + lbl + tag);
    };
    hull(bij, out.u[i], net.dc_nodes[i].u_min, net.dc_nodes[i].u_max, "hull-b");
    hull(tij, out.u[j], net.dc_nodes[j].u_min, net.dc_nodes[j].u_max, "hull-t");
  }

  for (size_t i = 0; i < net.dc_nodes.size(); ++i) {
    for (const auto& v : net.vsc_stations)
      if (net.dc_node_index(v.dc_node) == static_cast<int>(i)) {
        auto it = p_m2v_by_vsc.find(v.id);
        if (it == p_m2v_by_vsc.end())
          throw std::invalid_argument("missing converter injection variable");
        balance[i].add(it->second, 1.0);
      }
    prog.add_eq(balance[i], id_tag("dc.balance", net.dc_nodes[i].id) + tag);
  }
  return out;
}

void build_vsc_block(ConicProgram& prog, const NetworkCase& net, int vsc_idx,
                     const Boundary& bnd, int p_m2v, int u_dc, const std::string& tag,
                     const FormulationOptions& opts) {
  const VscStation& v = net.vsc_stations[vsc_idx];
  const int K = opts.envelope_segments;
  if (K < 1) throw std::invalid_argument("envelope needs at least one segment");
  double m = opts.big_m > 0 ? opts.big_m : derive_big_m(net);
  std::string o = id_tag("vsc#", v.id);

  int us = bnd.u;
  int uf = prog.add_var(o + ".uf" + tag, v.u_min, v.u_max, VarKind::Continuous, o);
  int uc = prog.add_var(o + ".uc" + tag, v.u_min, v.u_max, VarKind::Continuous, o);
  int csf = prog.add_var(o + ".csf" + tag, -v.u_max, v.u_max, VarKind::Continuous, o);
  int ssf = prog.add_var(o + ".ssf" + tag, -v.u_max, v.u_max, VarKind::Continuous, o);
  int cfc = prog.add_var(o + ".cfc" + tag, -v.u_max, v.u_max, VarKind::Continuous, o);
  int sfc = prog.add_var(o + ".sfc" + tag, -v.u_max, v.u_max, VarKind::Continuous, o);
  int pc = prog.add_var(o + ".pc" + tag, -m, m, VarKind::Continuous, o);
  int qc = prog.add_var(o + ".qc" + tag, -m, m, VarKind::Continuous, o);
  int ic = prog.add_var(o + ".ic" + tag, 0.0, v.i_max, VarKind::Continuous, o);
  int lc = prog.add_var(o + ".lc" + tag, 0.0, v.i_max * v.i_max, VarKind::Continuous, o);

  double gs = v.g_sf, bs = v.b_sf, gf = v.g_fc, bf = v.b_fc;

  // W-variable injections of the s - f - c chain
  AffExpr ps;
  ps.add(us, gs).add(csf, -gs).add(ssf, bs).add(bnd.p, -1.0);
  prog.add_eq(ps, o + ".s-p" + tag);
  AffExpr qs;
  qs.add(us, -bs).add(csf, bs).add(ssf, gs).add(bnd.q, -1.0);
  prog.add_eq(qs, o + ".s-q" + tag);

  AffExpr pf;
  pf.add(uf, gs + gf).add(csf, -gs).add(ssf, -bs).add(cfc, -gf).add(sfc, bf);
  prog.add_eq(pf, o + ".f-p" + tag);
  AffExpr qf;
  qf.add(uf, -(bs + bf)).add(csf, bs).add(ssf, -gs).add(cfc, bf).add(sfc, gf);
  qf.add(uf, -v.b_f); // filter injection q_f = b_f * u_f
  prog.add_eq(qf, o + ".f-q" + tag);

  AffExpr pcx;
  pcx.add(uc, gf).add(cfc, -gf).add(sfc, -bf).add(pc, -1.0);
  prog.add_eq(pcx, o + ".c-p" + tag);
  AffExpr qcx;
  qcx.add(uc, -bf).add(cfc, bf).add(sfc, -gf).add(qc, -1.0);
  prog.add_eq(qcx, o + ".c-q" + tag);

  auto w_cone = [&](int ci, int si, int ua, int ub_, const std::string& lbl) {
    AffExpr t0, t1;
    t0.add(ua, 0.5).add(ub_, 0.5);
    t1.add(ua, 0.5).add(ub_, -0.5);
    prog.add_soc({t0, t1, AffExpr::var(ci), AffExpr::var(si)}, lbl);
  };
  w_cone(csf, ssf, us, uf, o + ".w-sf" + tag);
  w_cone(cfc, sfc, uf, uc, o + ".w-fc" + tag);

  // modulation cap against the DC terminal
  AffExpr mod;
  mod.add(uc, 1.0).add(u_dc, -v.delta_max * v.delta_max);
  prog.add_le(mod, o + ".mod" + tag);

  // converter power balance with the loss model
  AffExpr bal(v.a3);
  bal.add(pc, 1.0).add(p_m2v, -1.0).add(lc, v.a1).add(ic, v.a2);
  prog.add_eq(bal, o + ".dc-balance" + tag);

  // current envelope: segment selection binaries with the secant upper bound
  // and the cone lower bound l_c >= i_c^2
  AffExpr env;
  env.add(lc, 1.0);
  AffExpr pick(-1.0);
  std::vector<int> bks;
  std::vector<double> seg_lo, seg_hi;
  AffExpr ic_sum;
  ic_sum.add(ic, -1.0);
  for (int k = 0; k < K; ++k) {
    double lo = v.i_max * k / K;
    double hi = v.i_max * (k + 1) / K;
    // a single segment is always selected; pin it so the program stays
    // continuous when the topology is also fixed
    int bk = prog.add_var(o + ".b" + std::to_string(k) + tag, K == 1 ? 1 : 0, 1,
                          VarKind::Binary, o);
    int ik = prog.add_var(o + ".i" + std::to_string(k) + tag, 0.0, hi,
                          VarKind::Continuous, o);
    pick.add(bk, 1.0);
    ic_sum.add(ik, 1.0);
    env.add(ik, -(lo + hi)).add(bk, lo * hi);
    AffExpr ge;
    ge.add(bk, lo).add(ik, -1.0);
    prog.add_le(ge, o + ".seg-lo" + tag);
    AffExpr le;
    le.add(ik, 1.0).add(bk, -hi);
    prog.add_le(le, o + ".seg-hi" + tag);
    bks.push_back(bk);
    seg_lo.push_back(lo);
    seg_hi.push_back(hi);
  }
  prog.add_eq(pick, o + ".pick-one" + tag);
  prog.add_eq(ic_sum, o + ".seg-sum" + tag);
  prog.add_le(env, o + ".envelope" + tag);
  prog.add_rotated(AffExpr::var(ic), AffExpr::var(lc), AffExpr(1.0),
                   o + ".current" + tag);
  prog.sos1.push_back({bks, ic, seg_lo, seg_hi});

  // converter cone p_c^2 + q_c^2 <= l_c * u_c
  AffExpr t0, t1;
  t0.add(lc, 0.5).add(uc, 0.5);
  t1.add(lc, 0.5).add(uc, -0.5);
  prog.add_soc({t0, t1, AffExpr::var(pc), AffExpr::var(qc)}, o + ".cone" + tag);
}

void add_generation_cost(ConicProgram& prog, const NetworkCase& net,
                         const std::vector<int>& pg) {
  for (size_t g = 0; g < net.generators.size(); ++g) {
    const Generator& gen = net.generators[g];
    if (gen.c1 < 0) throw std::invalid_argument("negative quadratic cost coefficient");
    if (gen.c1 > 0)
      prog.add_quadratic_cost(pg[g], gen.c1,
                              id_tag("gen", static_cast<int>(g)) + ".cost");
    prog.objective.add(pg[g], gen.c2);
    prog.objective.constant += gen.c3;
  }
}

void add_loss_term(ConicProgram& prog, const NetworkCase& net,
                   const std::vector<int>& pg, const std::vector<int>& res_p,
                   double weight) {
  for (int p : pg) prog.objective.add(p, weight);
  for (const auto& nd : net.ac_nodes) prog.objective.constant -= weight * nd.p_load;
  for (int p : res_p) prog.objective.add(p, weight);
}

OpfProgram assemble_opf(const NetworkCase& net, const OperatingPoint& op, OpfMode mode,
                        const std::vector<std::vector<double>>& scenarios,
                        const FormulationOptions& opts_in) {
  if (scenarios.empty()) throw std::invalid_argument("scenario set is empty");
  if (mode == OpfMode::Dopf && scenarios.size() != 1)
    throw std::invalid_argument("deterministic mode takes exactly one scenario");
  for (const auto& s : scenarios)
    if (s.size() != net.res_units.size())
      throw std::invalid_argument("scenario availability size mismatch");

  FormulationOptions opts = opts_in;
  if (opts.big_m <= 0) opts.big_m = derive_big_m(net);

  OpfProgram out;
  ConicProgram& prog = out.prog;
  ModelInfo& info = out.info;
  info.scenario_count = static_cast<int>(scenarios.size());

  info.alpha = make_alpha_vars(prog, net);
  if (!opts.switching) {
    // statuses frozen at the case defaults
    for (size_t k = 0; k < net.dc_lines.size(); ++k) {
      double v = net.dc_lines[k].closed ? 1.0 : 0.0;
      prog.vars[info.alpha[k]].lb = v;
      prog.vars[info.alpha[k]].ub = v;
    }
  }
  std::vector<int> alpha_for_mtdc = opts.switching ? info.alpha : std::vector<int>{};

  make_generator_vars(prog, net, info.pg, info.qg, "");

  const double w = 1.0 / static_cast<double>(scenarios.size());
  std::map<int, Boundary> shared_bnd;

  for (size_t e = 0; e < scenarios.size(); ++e) {
    std::string tag = scenarios.size() > 1 ? ".s" + std::to_string(e) : "";

    std::map<int, Boundary> bnd;
    if (mode == OpfMode::Eropf) {
      if (e == 0)
        for (size_t vi = 0; vi < net.vsc_stations.size(); ++vi)
          shared_bnd[net.vsc_stations[vi].id] =
              make_boundary(prog, net, static_cast<int>(vi), "", opts);
      bnd = shared_bnd;
    } else {
      for (size_t vi = 0; vi < net.vsc_stations.size(); ++vi)
        bnd[net.vsc_stations[vi].id] =
            make_boundary(prog, net, static_cast<int>(vi), tag, opts);
    }

    std::map<int, int> p_m2v;
    std::vector<int> p_m2v_list;
    for (const auto& v : net.vsc_stations) {
      int var = prog.add_var(id_tag("vsc#", v.id) + ".pm2v" + tag, -opts.big_m,
                             opts.big_m, VarKind::Continuous, id_tag("vsc#", v.id));
      p_m2v[v.id] = var;
      p_m2v_list.push_back(var);
    }

    MtdcVars dc = build_mtdc_block(prog, net, alpha_for_mtdc, p_m2v, tag, opts);
    for (size_t vi = 0; vi < net.vsc_stations.size(); ++vi) {
      const VscStation& v = net.vsc_stations[vi];
      build_vsc_block(prog, net, static_cast<int>(vi), bnd.at(v.id), p_m2v.at(v.id),
                      dc.u[net.dc_node_index(v.dc_node)], tag, opts);
    }

    std::map<int, Boundary> ac_bnd;
    for (const auto& v : net.vsc_stations)
      if (v.side == VscSide::AcGrid) ac_bnd[v.id] = bnd.at(v.id);
    AcBlockVars ac = build_ac_block(prog, net, op, info.pg, info.qg, ac_bnd, tag);

    std::vector<int> res_p;
    for (size_t r = 0; r < net.res_units.size(); ++r) {
      const Boundary* rb = nullptr;
      for (const auto& v : net.vsc_stations)
        if (v.side == VscSide::Res && v.ac_ref == net.res_units[r].id)
          rb = &bnd.at(v.id);
      if (!rb) throw std::invalid_argument("RES unit has no VSC station");
      res_p.push_back(build_res_block(prog, net, static_cast<int>(r),
                                      scenarios[e][r], *rb, tag));
    }

    add_loss_term(prog, net, info.pg, res_p, w);

    info.bnd.push_back(bnd);
    info.res_p.push_back(res_p);
    info.ac_u.push_back(ac.u);
    info.ac_theta.push_back(ac.theta);
    info.p_m2v.push_back(p_m2v_list);
  }

  add_generation_cost(prog, net, info.pg);

  // boundary listing per system, scenario-0 (or shared) triples in VSC order
  for (const auto& v : net.vsc_stations) {
    const Boundary& b = info.bnd[0].at(v.id);
    std::string sys = v.side == VscSide::AcGrid ? "ac#1" : id_tag("res#", v.ac_ref);
    auto& list = prog.boundary_vars[sys];
    list.push_back(b.p);
    list.push_back(b.q);
    list.push_back(b.u);
  }
  return out;
}

} // namespace acdc
