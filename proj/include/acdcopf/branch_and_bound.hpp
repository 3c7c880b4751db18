#pragma once

#include "acdcopf/ipm_solver.hpp"

namespace acdc {

struct BnbOptions {
  double rel_gap = 1e-6;
  double abs_gap = 1e-9;
  double int_tol = 1e-6;
  int max_nodes = 200000;
  int heuristic_period = 16; // run the rounding heuristic every N nodes
  IpmOptions ipm;
  bool verbose = false;
};

// Branch-and-bound over the binary variables of `prog`: best-bound node
// selection, most-fractional branching with lowest index breaking ties, and
// an SOS1-driven rounding heuristic for incumbents. The returned solution is
// re-solved with the binaries pinned, so duals and cone residuals refer to
// the incumbent subproblem.
Solution solve_mixed(const ConicProgram& prog, const BnbOptions& opts = {});

} // namespace acdc
