#include "acdcopf/gbd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace acdc {

namespace {

constexpr double kInfVal = std::numeric_limits<double>::infinity();

void pin_coupling(ConicProgram& p, const SpSpec& sp, const Eigen::VectorXd& b_hat) {
  if (b_hat.size() != static_cast<Eigen::Index>(sp.couple_rows.size()))
    throw std::invalid_argument("boundary vector size mismatch for " + sp.name);
  for (size_t i = 0; i < sp.couple_rows.size(); ++i)
    p.lin[sp.couple_rows[i]].expr.constant = -b_hat(static_cast<Eigen::Index>(i));
}

Eigen::VectorXd coupling_duals(const Solution& s, size_t count, const std::string& name) {
  auto it = s.duals.find("couple");
  if (it == s.duals.end() || it->second.size() != count)
    throw std::runtime_error("missing coupling duals in " + name);
  Eigen::VectorXd g(count);
  for (size_t i = 0; i < count; ++i) g(static_cast<Eigen::Index>(i)) = it->second[i];
  return g;
}

} // namespace

Decomposition decompose(const NetworkCase& net, const OperatingPoint& op, OpfMode mode,
                        const std::vector<std::vector<double>>& scenarios,
                        const FormulationOptions& opts_in) {
  if (scenarios.empty()) throw std::invalid_argument("scenario set is empty");
  if (mode == OpfMode::Dopf && scenarios.size() != 1)
    throw std::invalid_argument("deterministic mode takes exactly one scenario");
  if (mode == OpfMode::Ropf)
    throw std::invalid_argument(
        "per-scenario boundaries cannot be replicated in one master; use Eropf");
  for (const auto& s : scenarios)
    if (s.size() != net.res_units.size())
      throw std::invalid_argument("scenario availability size mismatch");
  bool any_ac_side = false;
  for (const auto& v : net.vsc_stations)
    if (v.side == VscSide::AcGrid) any_ac_side = true;
  if (!any_ac_side) throw std::invalid_argument("AC grid has no VSC connection");

  FormulationOptions opts = opts_in;
  if (opts.big_m <= 0) opts.big_m = derive_big_m(net);
  const int S = static_cast<int>(scenarios.size());
  const double w = 1.0 / S;

  Decomposition d;

  // --- master: DC side plus one boundary replica triple per station ---
  d.alpha = make_alpha_vars(d.mp, net);
  if (!opts.switching)
    for (size_t k = 0; k < net.dc_lines.size(); ++k) {
      double v = net.dc_lines[k].closed ? 1.0 : 0.0;
      d.mp.vars[d.alpha[k]].lb = v;
      d.mp.vars[d.alpha[k]].ub = v;
    }
  std::vector<int> alpha_for_mtdc = opts.switching ? d.alpha : std::vector<int>{};

  std::map<int, Boundary> replica;
  for (size_t vi = 0; vi < net.vsc_stations.size(); ++vi)
    replica[net.vsc_stations[vi].id] =
        make_boundary(d.mp, net, static_cast<int>(vi), "", opts);

  std::map<int, int> p_m2v;
  for (const auto& v : net.vsc_stations)
    p_m2v[v.id] = d.mp.add_var("vsc#" + std::to_string(v.id) + ".pm2v", -opts.big_m,
                               opts.big_m, VarKind::Continuous,
                               "vsc#" + std::to_string(v.id));
  MtdcVars dc = build_mtdc_block(d.mp, net, alpha_for_mtdc, p_m2v, "", opts);
  for (size_t vi = 0; vi < net.vsc_stations.size(); ++vi) {
    const VscStation& v = net.vsc_stations[vi];
    build_vsc_block(d.mp, net, static_cast<int>(vi), replica.at(v.id), p_m2v.at(v.id),
                    dc.u[net.dc_node_index(v.dc_node)], "", opts);
  }

  double c3_sum = 0.0;
  for (const auto& g : net.generators) c3_sum += g.c3;
  d.z_min = -10.0 * std::abs(c3_sum) - 10.0;

  // --- subproblem: the AC grid with every scenario copy ---
  {
    SpSpec sp;
    sp.name = "ac#1";
    std::vector<int> pg, qg;
    make_generator_vars(sp.prog, net, pg, qg, "");
    std::map<int, Boundary> bnd;
    std::vector<int> ac_vsc; // station indices, coupling order
    for (size_t vi = 0; vi < net.vsc_stations.size(); ++vi)
      if (net.vsc_stations[vi].side == VscSide::AcGrid) {
        bnd[net.vsc_stations[vi].id] =
            make_boundary(sp.prog, net, static_cast<int>(vi), "", opts);
        ac_vsc.push_back(static_cast<int>(vi));
      }
    for (int e = 0; e < S; ++e) {
      std::string tag = S > 1 ? ".s" + std::to_string(e) : "";
      build_ac_block(sp.prog, net, op, pg, qg, bnd, tag);
      add_loss_term(sp.prog, net, pg, {}, w);
    }
    add_generation_cost(sp.prog, net, pg);

    sp.b_init.resize(3 * ac_vsc.size());
    for (size_t k = 0; k < ac_vsc.size(); ++k) {
      const VscStation& v = net.vsc_stations[ac_vsc[k]];
      const Boundary& b = bnd.at(v.id);
      for (int var : {b.p, b.q, b.u}) {
        sp.b_local.push_back(var);
        sp.couple_rows.push_back(sp.prog.lin.size());
        sp.prog.add_eq(AffExpr::var(var), "couple");
      }
      sp.b_init(3 * k) = 0.0;
      sp.b_init(3 * k + 1) = 0.0;
      sp.b_init(3 * k + 2) = op.u(net.ac_node_index(v.ac_ref));
    }
    d.sps.push_back(std::move(sp));
    std::vector<int> bp;
    for (int vi : ac_vsc) {
      const Boundary& b = replica.at(net.vsc_stations[vi].id);
      bp.push_back(b.p);
      bp.push_back(b.q);
      bp.push_back(b.u);
    }
    d.b_prime.push_back(bp);
  }

  // --- one subproblem per RES unit ---
  for (size_t r = 0; r < net.res_units.size(); ++r) {
    int vi = -1;
    for (size_t k = 0; k < net.vsc_stations.size(); ++k)
      if (net.vsc_stations[k].side == VscSide::Res &&
          net.vsc_stations[k].ac_ref == net.res_units[r].id)
        vi = static_cast<int>(k);
    if (vi < 0) throw std::invalid_argument("RES unit has no VSC station");

    SpSpec sp;
    sp.name = "res#" + std::to_string(net.res_units[r].id);
    Boundary b = make_boundary(sp.prog, net, vi, "", opts);
    for (int e = 0; e < S; ++e) {
      std::string tag = S > 1 ? ".s" + std::to_string(e) : "";
      int p = build_res_block(sp.prog, net, static_cast<int>(r), scenarios[e][r], b, tag);
      sp.prog.objective.add(p, w);
    }
    sp.b_init = Eigen::VectorXd::Zero(3);
    sp.b_init(2) = 1.0;
    for (int var : {b.p, b.q, b.u}) {
      sp.b_local.push_back(var);
      sp.couple_rows.push_back(sp.prog.lin.size());
      sp.prog.add_eq(AffExpr::var(var), "couple");
    }
    d.sps.push_back(std::move(sp));
    const Boundary& rb = replica.at(net.vsc_stations[vi].id);
    d.b_prime.push_back({rb.p, rb.q, rb.u});
  }

  for (size_t n = 0; n < d.sps.size(); ++n) {
    d.z_vars.push_back(d.mp.add_var("z#" + d.sps[n].name, d.z_min, kInf,
                                    VarKind::Continuous, "mp"));
    d.mp.objective.add(d.z_vars.back(), 1.0);
  }
  return d;
}

OspResult solve_osp(const SpSpec& sp, const Eigen::VectorXd& b_hat,
                    const IpmOptions& opts) {
  ConicProgram p = sp.prog;
  pin_coupling(p, sp, b_hat);
  OspResult r;
  r.sol = solve_continuous(p, opts);
  if (r.sol.status == SolveStatus::Infeasible) return r;
  if (r.sol.status != SolveStatus::Optimal)
    throw std::runtime_error("subproblem solve failed: " + sp.name);
  r.feasible = true;
  r.value = r.sol.objective;
  r.gradient = coupling_duals(r.sol, sp.couple_rows.size(), sp.name);
  return r;
}

RspResult solve_rsp(const SpSpec& sp, const Eigen::VectorXd& b_hat,
                    const IpmOptions& opts) {
  ConicProgram p = sp.prog;
  pin_coupling(p, sp, b_hat);
  p.objective = AffExpr();
  for (size_t i = 0; i < sp.couple_rows.size(); ++i) {
    int ep = p.add_var("rsp.ep" + std::to_string(i), 0.0, kInf);
    int em = p.add_var("rsp.em" + std::to_string(i), 0.0, kInf);
    p.lin[sp.couple_rows[i]].expr.add(ep, -1.0).add(em, 1.0);
    p.objective.add(ep, 1.0).add(em, 1.0);
  }
  RspResult r;
  r.sol = solve_continuous(p, opts);
  if (r.sol.status != SolveStatus::Optimal)
    throw std::runtime_error("relaxed subproblem solve failed: " + sp.name);
  r.measure = r.sol.objective;
  r.gradient = coupling_duals(r.sol, sp.couple_rows.size(), sp.name);
  return r;
}

BendersCut make_optimality_cut(const OspResult& r, const Eigen::VectorXd& b_hat,
                               int sp_id, int iteration) {
  BendersCut c;
  c.kind = BendersCut::Kind::Optimality;
  c.sp_id = sp_id;
  c.iteration = iteration;
  c.gradient = r.gradient;
  c.intercept = r.value - r.gradient.dot(b_hat);
  c.source_value = r.value;
  c.generated_at = b_hat;
  return c;
}

BendersCut make_feasibility_cut(const RspResult& r, const Eigen::VectorXd& b_hat,
                                int sp_id, int iteration) {
  BendersCut c;
  c.kind = BendersCut::Kind::Feasibility;
  c.sp_id = sp_id;
  c.iteration = iteration;
  c.gradient = r.gradient;
  c.intercept = r.measure - r.gradient.dot(b_hat);
  c.source_value = r.measure;
  c.generated_at = b_hat;
  return c;
}

namespace {

void append_cut(ConicProgram& mp, const Decomposition& dec, const BendersCut& c) {
  AffExpr e(c.intercept);
  if (c.sp_id >= 0) {
    const auto& bp = dec.b_prime[c.sp_id];
    for (size_t i = 0; i < bp.size(); ++i)
      e.add(bp[i], c.gradient(static_cast<Eigen::Index>(i)));
    if (c.kind == BendersCut::Kind::Optimality) e.add(dec.z_vars[c.sp_id], -1.0);
  } else {
    // aggregate over the concatenated replicas and the epigraph sum
    int off = 0;
    for (const auto& bp : dec.b_prime)
      for (int var : bp) e.add(var, c.gradient(off++));
    if (c.kind == BendersCut::Kind::Optimality)
      for (int z : dec.z_vars) e.add(z, -1.0);
  }
  mp.add_le(e, c.kind == BendersCut::Kind::Optimality ? "cut.opt" : "cut.feas");
}

bool mp_feasible(const Decomposition& dec, const std::vector<BendersCut>& cuts,
                 const BnbOptions& opts) {
  ConicProgram mp = dec.mp;
  for (const auto& c : cuts) append_cut(mp, dec, c);
  return solve_mixed(mp, opts).status != SolveStatus::Infeasible;
}

} // namespace

MpResult solve_mp(const Decomposition& dec, const std::vector<BendersCut>& cuts,
                  const BnbOptions& opts) {
  ConicProgram mp = dec.mp;
  for (const auto& c : cuts) append_cut(mp, dec, c);
  MpResult r;
  r.sol = solve_mixed(mp, opts);
  if (r.sol.status == SolveStatus::Infeasible) {
    std::string msg = "master problem infeasible";
    if (cuts.size() <= 10 && !cuts.empty()) {
      // deletion filter: drop cuts whose removal keeps the master infeasible
      std::vector<BendersCut> core = cuts;
      for (size_t i = core.size(); i-- > 0;) {
        std::vector<BendersCut> trial = core;
        trial.erase(trial.begin() + static_cast<long>(i));
        if (!mp_feasible(dec, trial, opts)) core = trial;
      }
      msg += "; minimal infeasible cut subset: ";
      for (size_t i = 0; i < core.size(); ++i)
        msg += (i ? "," : "") + std::string("sp") + std::to_string(core[i].sp_id) +
               "@it" + std::to_string(core[i].iteration);
    }
    throw std::runtime_error(msg);
  }
  if (r.sol.status != SolveStatus::Optimal && r.sol.status != SolveStatus::GapLimit)
    throw std::runtime_error("master problem solve failed");

  for (size_t n = 0; n < dec.sps.size(); ++n) {
    const auto& bp = dec.b_prime[n];
    Eigen::VectorXd b(bp.size());
    for (size_t i = 0; i < bp.size(); ++i)
      b(static_cast<Eigen::Index>(i)) = r.sol.x(bp[i]);
    r.b_hat.push_back(b);
    r.z_hat.push_back(r.sol.x(dec.z_vars[n]));
    r.lower_bound += r.z_hat.back();
  }
  return r;
}

std::string GbdTrace::to_csv() const {
  std::ostringstream os;
  os << "iteration,virtual_time,ub_raw,ub_best,lower_bound,max_residual,active_set\n";
  os.precision(12);
  for (const auto& r : rows) {
    os << r.iteration << ',' << r.virtual_time << ',';
    if (std::isfinite(r.ub_raw))
      os << r.ub_raw;
    else
      os << "inf";
    os << ',';
    if (std::isfinite(r.ub_best))
      os << r.ub_best;
    else
      os << "inf";
    os << ',' << r.lower_bound << ',' << r.max_residual << ',' << r.active_set << '\n';
  }
  return os.str();
}

GbdResult run_gbd(const Decomposition& dec, const GbdOptions& opts_in) {
  GbdOptions opts = opts_in;
  const int S = static_cast<int>(dec.sps.size());
  if (S == 0) throw std::invalid_argument("decomposition has no subproblems");
  if (opts.latencies.empty()) opts.latencies.assign(S, 1.0);
  if (static_cast<int>(opts.latencies.size()) != S)
    throw std::invalid_argument("one latency per subproblem required");
  int n_min = (!opts.async || opts.n_min <= 0) ? S : std::min(opts.n_min, S);
  // aggregation needs every subproblem sampled at one common boundary
  if (!opts.multi_cut) n_min = S;

  GbdResult res;
  res.trace.seed = opts.seed;

  // per-SP schedule state
  std::vector<double> busy_until(S);
  std::vector<Eigen::VectorXd> pinned_b(S); // boundary the running solve uses
  std::vector<int> pinned_iter(S, 0);       // MP iteration that boundary came from
  std::vector<int> done_iter(S, 0);
  std::vector<bool> collected(S, false);    // finished, waiting for the MP step
  std::vector<double> last_value(S, kInfVal);
  std::vector<bool> last_feasible(S, false);
  std::vector<OspResult> last_osp(S);
  std::vector<RspResult> last_rsp(S);

  std::vector<Eigen::VectorXd> current_b; // MP replica values, per SP
  for (int n = 0; n < S; ++n) {
    current_b.push_back(dec.sps[n].b_init);
    pinned_b[n] = dec.sps[n].b_init;
    busy_until[n] = opts.latencies[n];
  }

  std::vector<BendersCut> cuts;
  double t = 0.0;
  double ub_best = kInfVal;
  int m = 0;

  while (m < opts.max_iterations) {
    // advance virtual time to the next completion
    double t_next = kInfVal;
    for (int n = 0; n < S; ++n)
      if (!collected[n]) t_next = std::min(t_next, busy_until[n]);
    t = t_next;

    std::vector<int> just_done;
    for (int n = 0; n < S; ++n)
      if (!collected[n] && busy_until[n] <= t + 1e-12) just_done.push_back(n);

    for (int n : just_done) {
      collected[n] = true;
      done_iter[n] = pinned_iter[n];
      last_osp[n] = solve_osp(dec.sps[n], pinned_b[n], opts.sp_ipm);
      last_feasible[n] = last_osp[n].feasible;
      if (last_osp[n].feasible) {
        last_value[n] = last_osp[n].value;
        if (opts.multi_cut)
          cuts.push_back(make_optimality_cut(last_osp[n], pinned_b[n], n, pinned_iter[n]));
      } else {
        last_value[n] = kInfVal;
        last_rsp[n] = solve_rsp(dec.sps[n], pinned_b[n], opts.sp_ipm);
        if (opts.multi_cut && last_rsp[n].measure > 1e-9)
          cuts.push_back(make_feasibility_cut(last_rsp[n], pinned_b[n], n, pinned_iter[n]));
      }
    }

    int n_done = 0;
    bool stale_ok = true;
    for (int n = 0; n < S; ++n) {
      if (collected[n]) ++n_done;
      if (m - done_iter[n] >= opts.staleness && !collected[n]) stale_ok = false;
    }
    if (n_done < n_min || !stale_ok) continue;

    // archival single-cut mode: one aggregate per iteration; any infeasible
    // subproblem degrades the whole round to the relaxed form
    if (!opts.multi_cut) {
      bool all_feasible = true;
      for (int n = 0; n < S; ++n)
        if (!last_feasible[n]) all_feasible = false;
      int dim = 0;
      for (const auto& bp : dec.b_prime) dim += static_cast<int>(bp.size());
      Eigen::VectorXd grad(dim), at(dim);
      double value = 0.0;
      int off = 0;
      for (int n = 0; n < S; ++n) {
        Eigen::VectorXd g;
        double v;
        if (all_feasible) {
          g = last_osp[n].gradient;
          v = last_osp[n].value;
        } else if (!last_feasible[n]) {
          g = last_rsp[n].gradient;
          v = last_rsp[n].measure;
        } else {
          RspResult rr = solve_rsp(dec.sps[n], pinned_b[n], opts.sp_ipm);
          g = rr.gradient;
          v = rr.measure;
        }
        grad.segment(off, g.size()) = g;
        at.segment(off, g.size()) = pinned_b[n];
        value += v;
        off += static_cast<int>(g.size());
      }
      BendersCut c;
      c.kind = all_feasible ? BendersCut::Kind::Optimality
                            : BendersCut::Kind::Feasibility;
      c.sp_id = -1;
      c.iteration = m;
      c.gradient = grad;
      c.intercept = value - grad.dot(at);
      c.source_value = value;
      c.generated_at = at;
      if (all_feasible || value > 1e-9) cuts.push_back(c);
    }

    res.mp = solve_mp(dec, cuts, opts.mp_bnb);
    ++m;
    current_b = res.mp.b_hat;

    double ub_raw = 0.0;
    for (int n = 0; n < S; ++n) ub_raw += last_value[n];
    double max_res = 0.0;
    for (int n = 0; n < S; ++n)
      max_res = std::max(max_res,
                         (pinned_b[n] - current_b[n]).cwiseAbs().maxCoeff());
    if (max_res <= opts.residual_tol && std::isfinite(ub_raw))
      ub_best = std::min(ub_best, ub_raw);

    GbdIterationRow row;
    row.iteration = m;
    row.virtual_time = t;
    row.ub_raw = ub_raw;
    row.ub_best = ub_best;
    row.lower_bound = res.mp.lower_bound;
    row.max_residual = max_res;
    std::string act;
    for (int n = 0; n < S; ++n)
      if (collected[n]) act += (act.empty() ? "" : ";") + std::to_string(n);
    row.active_set = act;
    res.trace.rows.push_back(row);

    res.upper_bound = ub_raw;
    res.lower_bound = res.mp.lower_bound;
    res.iterations = m;

    if (max_res <= opts.residual_tol) {
      res.converged = true;
      break;
    }

    // relaunch the collected subproblems at the new replica values
    for (int n = 0; n < S; ++n)
      if (collected[n]) {
        collected[n] = false;
        pinned_b[n] = current_b[n];
        pinned_iter[n] = m;
        busy_until[n] = t + opts.latencies[n];
      }
  }

  res.trace.converged = res.converged;
  res.objective = res.upper_bound;
  res.cuts = std::move(cuts);
  return res;
}

} // namespace acdc
