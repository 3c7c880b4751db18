#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <map>
#include <string>
#include <vector>

namespace acdc {

constexpr double kInf = 1e30;

enum class VarKind { Continuous, Binary };

struct Variable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lb = -kInf;
  double ub = kInf;
  std::string owner; // block tag: "ac#1", "res#2", "mtdc", "vsc#3", "boundary#1"
};

struct LinTerm {
  int var = -1;
  double coef = 0.0;
};

struct AffExpr {
  std::vector<LinTerm> terms;
  double constant = 0.0;

  AffExpr() = default;
  explicit AffExpr(double c) : constant(c) {}
  static AffExpr var(int v, double coef = 1.0) {
    AffExpr e;
    e.terms.push_back({v, coef});
    return e;
  }
  AffExpr& add(int v, double coef) {
    if (coef != 0.0) terms.push_back({v, coef});
    return *this;
  }
  AffExpr& add(const AffExpr& o, double scale = 1.0) {
    for (const auto& t : o.terms) terms.push_back({t.var, scale * t.coef});
    constant += scale * o.constant;
    return *this;
  }
  double eval(const Eigen::VectorXd& x) const {
    double v = constant;
    for (const auto& t : terms) v += t.coef * x(t.var);
    return v;
  }
};

enum class LinSense { Eq, Le }; // expr == 0 or expr <= 0

struct LinearConstraint {
  AffExpr expr;
  LinSense sense = LinSense::Eq;
  std::string label;
};

// ||(entries[1..])|| <= entries[0]
struct SocConstraint {
  std::vector<AffExpr> entries;
  std::string label;
};

// x^2 <= y*z  (y, z >= 0 implied)
struct RotatedConstraint {
  AffExpr x, y, z;
  std::string label;
};

// Synthetic marker for a nonlinear equality; builders never emit one, the
// structural robustness check rejects programs containing any.
struct NonconvexEquality {
  std::string label;
};

enum class UncertainUse { LinearRhs, VariableBound, MatrixCoefficient, ConeEntry };

struct UncertaintyNote {
  std::string param;
  UncertainUse use = UncertainUse::LinearRhs;
  std::string where;
};

// Binaries with sum == 1; `driver` picks the member whose [lo, hi] interval
// contains the relaxed driver value (used by the B&B rounding heuristic).
struct Sos1Group {
  std::vector<int> binaries;
  int driver = -1;
  std::vector<double> lo, hi;
};

class ConicProgram {
public:
  std::vector<Variable> vars;
  std::vector<LinearConstraint> lin;
  std::vector<SocConstraint> socs;
  std::vector<RotatedConstraint> rotated;
  std::vector<NonconvexEquality> nonconvex;
  std::vector<UncertaintyNote> uncertainty;
  std::vector<Sos1Group> sos1;
  AffExpr objective; // minimize; quadratic terms are lifted by the builders
  std::map<std::string, std::vector<int>> boundary_vars; // per AC system

  int add_var(const std::string& name, double lb, double ub,
              VarKind kind = VarKind::Continuous, const std::string& owner = "") {
    vars.push_back({name, kind, lb, ub, owner});
    return static_cast<int>(vars.size()) - 1;
  }
  void add_eq(AffExpr e, const std::string& label) {
    lin.push_back({std::move(e), LinSense::Eq, label});
  }
  void add_le(AffExpr e, const std::string& label) {
    lin.push_back({std::move(e), LinSense::Le, label});
  }
  void add_soc(std::vector<AffExpr> entries, const std::string& label) {
    socs.push_back({std::move(entries), label});
  }
  void add_rotated(AffExpr x, AffExpr y, AffExpr z, const std::string& label) {
    rotated.push_back({std::move(x), std::move(y), std::move(z), label});
  }

  // Adds cost + coef * v^2 via an epigraph variable and a rotated cone.
  void add_quadratic_cost(int v, double coef, const std::string& label);

  std::vector<int> binary_indices() const;
  int var_index(const std::string& name) const; // -1 when absent

  std::string serialize() const; // text interchange format (docs/program_format.md)
};

// min c'x  s.t.  A x = b,  G x + s = h,  s in R+^{n_orthant} x SOC(dims...)
struct StandardConic {
  int n = 0;
  Eigen::SparseMatrix<double> A, G;
  Eigen::VectorXd b, h, c;
  double obj_constant = 0.0;
  int n_orthant = 0;
  std::vector<int> soc_dims;

  // Row bookkeeping for mapping duals back to labeled constraints.
  // eq_rows[i] = A-row of lin[i] (or -1); ineq_rows[i] = G-row (or -1).
  std::vector<int> eq_rows, ineq_rows;
  std::vector<int> soc_first_row;     // per SocConstraint, offset into G rows
  std::vector<int> rotated_first_row; // per RotatedConstraint (3 rows each)
};

// Converts a program whose binaries are all fixed (lb == ub) or absent.
// Throws std::invalid_argument when a free binary remains.
StandardConic to_standard_form(const ConicProgram& prog, bool allow_free_binaries = false);

struct ConeSlack {
  std::string label;
  double slack = 0.0;          // t - ||x|| or y*z - x^2
  double relative_slack = 0.0; // slack / max(1, scale)
  bool flagged = false;
};

struct ConeResidualReport {
  std::vector<ConeSlack> slacks;
  double max_relative_slack = 0.0;
  std::string to_json() const;
};

ConeResidualReport check_cone_residuals(const Eigen::VectorXd& x, const ConicProgram& prog,
                                        double flag_tolerance = 1e-4);

} // namespace acdc
