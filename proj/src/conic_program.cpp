#include "acdcopf/conic_program.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace acdc {

void ConicProgram::add_quadratic_cost(int v, double coef, const std::string& label) {
  if (coef < 0) throw std::invalid_argument("quadratic cost coefficient must be >= 0");
  if (coef == 0) return;
  int t = add_var(vars[v].name + ".sq", 0.0, kInf, VarKind::Continuous, vars[v].owner);
  // v^2 <= t * 1
  add_rotated(AffExpr::var(v), AffExpr::var(t), AffExpr(1.0), label);
  objective.add(t, coef);
}

std::vector<int> ConicProgram::binary_indices() const {
  std::vector<int> out;
  for (size_t i = 0; i < vars.size(); ++i)
    if (vars[i].kind == VarKind::Binary) out.push_back(static_cast<int>(i));
  return out;
}

int ConicProgram::var_index(const std::string& name) const {
  for (size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == name) return static_cast<int>(i);
  return -1;
}

std::string ConicProgram::serialize() const {
  std::ostringstream out;
  out.precision(17);
  out << "conic_program v1\n";
  out << "vars " << vars.size() << "\n";
  for (const auto& v : vars)
    out << "  " << v.name << " " << (v.kind == VarKind::Binary ? "bin" : "cont") << " "
        << v.lb << " " << v.ub << " owner=" << (v.owner.empty() ? "-" : v.owner) << "\n";
  auto expr = [&](const AffExpr& e) {
    std::ostringstream s;
    s.precision(17);
    s << e.constant;
    for (const auto& t : e.terms) s << " + " << t.coef << "*x" << t.var;
    return s.str();
  };
  out << "objective " << expr(objective) << "\n";
  out << "linear " << lin.size() << "\n";
  for (const auto& l : lin)
    out << "  [" << l.label << "] " << expr(l.expr)
        << (l.sense == LinSense::Eq ? " == 0" : " <= 0") << "\n";
  out << "soc " << socs.size() << "\n";
  for (const auto& s : socs) {
    out << "  [" << s.label << "] norm(";
    for (size_t i = 1; i < s.entries.size(); ++i)
      out << (i > 1 ? "; " : "") << expr(s.entries[i]);
    out << ") <= " << expr(s.entries[0]) << "\n";
  }
  out << "rotated " << rotated.size() << "\n";
  for (const auto& r : rotated)
    out << "  [" << r.label << "] (" << expr(r.x) << ")^2 <= (" << expr(r.y) << ")*("
        << expr(r.z) << ")\n";
  return out.str();
}

StandardConic to_standard_form(const ConicProgram& prog, bool allow_free_binaries) {
  if (!prog.nonconvex.empty())
    throw std::invalid_argument("program contains nonconvex equalities");

  StandardConic sf;
  sf.n = static_cast<int>(prog.vars.size());
  sf.c = Eigen::VectorXd::Zero(sf.n);
  for (const auto& t : prog.objective.terms) sf.c(t.var) += t.coef;
  sf.obj_constant = prog.objective.constant;

  std::vector<Eigen::Triplet<double>> ta, tg;
  std::vector<double> bvals, hvals;

  auto add_eq_row = [&](const AffExpr& e) {
    int row = static_cast<int>(bvals.size());
    for (const auto& t : e.terms) ta.emplace_back(row, t.var, t.coef);
    bvals.push_back(-e.constant);
    return row;
  };
  auto add_le_row = [&](const AffExpr& e) {
    // expr <= 0  =>  (coef)x <= -constant
    int row = static_cast<int>(hvals.size());
    for (const auto& t : e.terms) tg.emplace_back(row, t.var, t.coef);
    hvals.push_back(-e.constant);
    return row;
  };

  sf.eq_rows.assign(prog.lin.size(), -1);
  sf.ineq_rows.assign(prog.lin.size(), -1);
  for (size_t i = 0; i < prog.lin.size(); ++i) {
    if (prog.lin[i].sense == LinSense::Eq)
      sf.eq_rows[i] = add_eq_row(prog.lin[i].expr);
  }

  // Orthant block: inequality constraints, then variable bounds.
  for (size_t i = 0; i < prog.lin.size(); ++i) {
    if (prog.lin[i].sense == LinSense::Le)
      sf.ineq_rows[i] = add_le_row(prog.lin[i].expr);
  }
  for (int v = 0; v < sf.n; ++v) {
    const Variable& var = prog.vars[v];
    if (var.kind == VarKind::Binary && var.lb != var.ub && !allow_free_binaries)
      throw std::invalid_argument("free binary variable in continuous solve: " + var.name);
    if (var.lb > -kInf) {
      AffExpr e(var.lb);
      e.add(v, -1.0); // lb - x <= 0
      add_le_row(e);
    }
    if (var.ub < kInf) {
      AffExpr e(-var.ub);
      e.add(v, 1.0); // x - ub <= 0
      add_le_row(e);
    }
  }
  sf.n_orthant = static_cast<int>(hvals.size());

  // Cone rows: s_slot = h - Gx must equal the affine entry, so G gets the
  // negated coefficients and h the constant.
  auto add_cone_row = [&](const AffExpr& e) {
    int row = static_cast<int>(hvals.size());
    for (const auto& t : e.terms) tg.emplace_back(row, t.var, -t.coef);
    hvals.push_back(e.constant);
    return row;
  };

  for (const auto& s : prog.socs) {
    if (s.entries.size() < 2)
      throw std::invalid_argument("SOC constraint needs at least two entries");
    sf.soc_first_row.push_back(static_cast<int>(hvals.size()));
    for (const auto& e : s.entries) add_cone_row(e);
    sf.soc_dims.push_back(static_cast<int>(s.entries.size()));
  }
  for (const auto& r : prog.rotated) {
    // x^2 <= y z  <=>  ||(y - z; 2x)|| <= y + z
    sf.rotated_first_row.push_back(static_cast<int>(hvals.size()));
    AffExpr t0 = r.y;
    t0.add(r.z, 1.0);
    AffExpr t1 = r.y;
    t1.add(r.z, -1.0);
    AffExpr t2 = r.x;
    for (auto& term : t2.terms) term.coef *= 2.0;
    t2.constant *= 2.0;
    add_cone_row(t0);
    add_cone_row(t1);
    add_cone_row(t2);
    sf.soc_dims.push_back(3);
  }

  sf.A.resize(static_cast<int>(bvals.size()), sf.n);
  sf.A.setFromTriplets(ta.begin(), ta.end());
  sf.G.resize(static_cast<int>(hvals.size()), sf.n);
  sf.G.setFromTriplets(tg.begin(), tg.end());
  sf.b = Eigen::Map<Eigen::VectorXd>(bvals.data(), static_cast<int>(bvals.size()));
  sf.h = Eigen::Map<Eigen::VectorXd>(hvals.data(), static_cast<int>(hvals.size()));
  return sf;
}

ConeResidualReport check_cone_residuals(const Eigen::VectorXd& x, const ConicProgram& prog,
                                        double flag_tolerance) {
  ConeResidualReport rep;
  auto push = [&](const std::string& label, double slack, double scale) {
    ConeSlack cs;
    cs.label = label;
    cs.slack = slack;
    cs.relative_slack = slack / std::max(1.0, std::abs(scale));
    cs.flagged = cs.relative_slack > flag_tolerance;
    rep.max_relative_slack = std::max(rep.max_relative_slack, cs.relative_slack);
    rep.slacks.push_back(cs);
  };
  for (const auto& s : prog.socs) {
    double t = s.entries[0].eval(x);
    double nrm = 0;
    for (size_t i = 1; i < s.entries.size(); ++i) {
      double v = s.entries[i].eval(x);
      nrm += v * v;
    }
    push(s.label, t - std::sqrt(nrm), t);
  }
  for (const auto& r : prog.rotated) {
    double xx = r.x.eval(x);
    double yz = r.y.eval(x) * r.z.eval(x);
    push(r.label, yz - xx * xx, yz);
  }
  return rep;
}

std::string ConeResidualReport::to_json() const {
  std::ostringstream out;
  out.precision(12);
  out << "{\"max_relative_slack\": " << max_relative_slack << ", \"cones\": [";
  for (size_t i = 0; i < slacks.size(); ++i) {
    if (i) out << ", ";
    out << "{\"label\": \"" << slacks[i].label << "\", \"slack\": " << slacks[i].slack
        << ", \"relative_slack\": " << slacks[i].relative_slack
        << ", \"flagged\": " << (slacks[i].flagged ? "true" : "false") << "}";
  }
  out << "]}";
  return out.str();
}

} // namespace acdc
