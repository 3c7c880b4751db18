#include "acdcopf/robustness.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace acdc {

FirstStageDecision extract_first_stage(const OpfProgram& m, const Solution& s,
                                       const NetworkCase& net, bool with_boundaries) {
  FirstStageDecision d;
  for (int a : m.info.alpha) d.alpha.push_back(std::round(s.x(a)));
  for (int p : m.info.pg) d.pg.push_back(s.x(p));
  for (int q : m.info.qg) d.qg.push_back(s.x(q));
  if (with_boundaries) {
    d.pin_boundaries = true;
    for (const auto& v : net.vsc_stations) {
      const Boundary& b = m.info.bnd.at(0).at(v.id);
      d.boundary.push_back({s.x(b.p), s.x(b.q), s.x(b.u)});
    }
  }
  return d;
}

RobustnessReport evaluate_robustness(const NetworkCase& net, const OperatingPoint& op,
                                     const FirstStageDecision& dec,
                                     const std::vector<std::vector<double>>& samples,
                                     const FormulationOptions& opts_in,
                                     const BnbOptions& bnb) {
  if (samples.empty()) throw std::invalid_argument("no scenarios to evaluate");
  if (dec.alpha.size() != net.dc_lines.size() ||
      dec.pg.size() != net.generators.size() || dec.qg.size() != net.generators.size())
    throw std::invalid_argument("first-stage decision does not match the case");
  FormulationOptions opts = opts_in;
  opts.switching = true; // binaries created, then pinned to the decision

  RobustnessReport rep;
  rep.total = static_cast<int>(samples.size());
  double sum = 0.0;
  rep.obj_min = std::numeric_limits<double>::infinity();
  rep.obj_max = -std::numeric_limits<double>::infinity();

  for (size_t k = 0; k < samples.size(); ++k) {
    OpfProgram m = assemble_opf(net, op, OpfMode::Dopf, {samples[k]}, opts);
    auto pin = [&](int var, double v) {
      m.prog.vars[var].lb = v;
      m.prog.vars[var].ub = v;
    };
    for (size_t i = 0; i < dec.alpha.size(); ++i) pin(m.info.alpha[i], dec.alpha[i]);
    for (size_t g = 0; g < dec.pg.size(); ++g) {
      pin(m.info.pg[g], dec.pg[g]);
      pin(m.info.qg[g], dec.qg[g]);
    }
    if (dec.pin_boundaries) {
      if (dec.boundary.size() != net.vsc_stations.size())
        throw std::invalid_argument("boundary decision does not match the case");
      for (size_t v = 0; v < net.vsc_stations.size(); ++v) {
        const Boundary& b = m.info.bnd.at(0).at(net.vsc_stations[v].id);
        pin(b.p, dec.boundary[v][0]);
        pin(b.q, dec.boundary[v][1]);
        pin(b.u, dec.boundary[v][2]);
      }
    }

    Solution s = solve_mixed(m.prog, bnb);
    if (s.status == SolveStatus::Optimal || s.status == SolveStatus::GapLimit) {
      ++rep.feasible;
      rep.objectives.push_back(s.objective);
      sum += s.objective;
      rep.obj_min = std::min(rep.obj_min, s.objective);
      rep.obj_max = std::max(rep.obj_max, s.objective);
    } else {
      rep.objectives.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.infeasible_scenarios.push_back(static_cast<int>(k));
    }
  }
  rep.ratio = static_cast<double>(rep.feasible) / rep.total;
  rep.obj_mean = rep.feasible ? sum / rep.feasible : 0.0;
  if (!rep.feasible) {
    rep.obj_min = 0.0;
    rep.obj_max = 0.0;
  }
  return rep;
}

std::string RobustnessReport::to_json() const {
  std::ostringstream os;
  os.precision(12);
  os << "{\n  \"total\": " << total << ",\n  \"feasible\": " << feasible
     << ",\n  \"ratio\": " << ratio << ",\n  \"objective\": {\"min\": " << obj_min
     << ", \"max\": " << obj_max << ", \"mean\": " << obj_mean << "},\n"
     << "  \"infeasible_scenarios\": [";
  for (size_t i = 0; i < infeasible_scenarios.size(); ++i)
    os << (i ? ", " : "") << infeasible_scenarios[i];
  os << "],\n  \"objectives\": [";
  for (size_t i = 0; i < objectives.size(); ++i) {
    os << (i ? ", " : "");
    if (std::isnan(objectives[i]))
      os << "null";
    else
      os << objectives[i];
  }
  os << "]\n}\n";
  return os.str();
}

EsmValidity esm_validity_check(const ConicProgram& prog) {
  EsmValidity v;
  for (const auto& u : prog.uncertainty)
    if (u.use != UncertainUse::LinearRhs && u.use != UncertainUse::VariableBound) {
      v.ok = false;
      v.issues.push_back("uncertain parameter " + u.param +
                         " enters a non-RHS position (" + u.where + ")");
    }
  for (const auto& nc : prog.nonconvex) {
    v.ok = false;
    v.issues.push_back("nonconvex equality present: " + nc.label);
  }
  return v;
}

} // namespace acdc
