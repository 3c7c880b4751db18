#pragma once

#include "acdcopf/branch_and_bound.hpp"
#include "acdcopf/formulation.hpp"

namespace acdc {

struct SlaRound {
  int round = 0;               // 0 uses the base-point linearization
  double objective = 0.0;
  double max_u_error = 0.0;    // max |u_lin - u_nonlin| over AC nodes
  Eigen::VectorXd u_lin;       // scenario-0 squared voltages from the OPF
  Eigen::VectorXd u_nonlinear; // nonlinear re-solve at the OPF injections
};

struct SlaResult {
  std::vector<SlaRound> rounds; // rounds + 1 entries
  OperatingPoint final_op;
  Solution final_solution;
};

// Successive linear approximation: solve the OPF, re-solve the nonlinear
// power flow at the resulting injections, re-linearize, repeat. The error of
// round k is measured before the k-th relinearization is applied.
SlaResult run_sla(const NetworkCase& net, OpfMode mode,
                  const std::vector<std::vector<double>>& scenarios, int rounds,
                  const FormulationOptions& opts = {}, const BnbOptions& bnb = {},
                  const PowerFlowOptions& pf = {});

} // namespace acdc
