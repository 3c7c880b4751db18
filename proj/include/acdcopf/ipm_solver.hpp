#pragma once

#include <map>
#include <string>
#include <vector>

#include "acdcopf/conic_program.hpp"

namespace acdc {

enum class SolveStatus {
  Optimal,
  Infeasible,
  Unbounded,
  GapLimit,   // B&B stopped at the configured relative gap / node limit
  NumericalError
};

struct IpmOptions {
  int max_iter = 120;
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  // accept as optimal when iteration stalls but residuals are below this
  double feastol_inacc = 1e-6;
  double static_reg = 1e-8;
  int refinement_steps = 2;
  bool verbose = false;
};

struct IpmResult {
  SolveStatus status = SolveStatus::NumericalError;
  Eigen::VectorXd x, y, z, s; // standard-form primal/dual
  double pobj = 0.0, dobj = 0.0;
  double pres = 0.0, dres = 0.0, gap = 0.0;
  int iterations = 0;
};

// Homogeneous self-dual interior-point method with Nesterov-Todd scaling,
// Mehrotra predictor-corrector, sparse LDLT with static regularization and
// iterative refinement. Returns infeasibility certificates in y/z (primal)
// or x/s (dual) when status is Infeasible/Unbounded.
IpmResult solve_standard_conic(const StandardConic& sf, const IpmOptions& opts = {});

// Solution of a ConicProgram (continuous or after B&B).
struct Solution {
  SolveStatus status = SolveStatus::NumericalError;
  Eigen::VectorXd x;        // in program variable order
  double objective = 0.0;
  double dual_objective = 0.0;
  // per labeled constraint block, in declaration order within the label.
  // Contract (pinned by tests): for an equality block "expr == 0", perturbing
  // to "expr == eps" changes the optimum by dual * eps + O(eps^2); for an
  // inequality "expr <= 0" the dual is >= 0 and the optimum changes by
  // -dual * eps when relaxing to "expr <= eps".
  std::map<std::string, std::vector<double>> duals;
  double primal_residual = 0.0;
  double duality_gap = 0.0;
  double max_cone_violation = 0.0;
  double mip_gap = 0.0; // relative, for B&B results
  int bb_nodes = 0;
  int ipm_iterations = 0;
};

// Solves the continuous program (all binaries must be fixed or absent).
Solution solve_continuous(const ConicProgram& prog, const IpmOptions& opts = {});

} // namespace acdc
