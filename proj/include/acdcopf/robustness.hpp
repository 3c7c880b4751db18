#pragma once

#include <array>
#include <string>
#include <vector>

#include "acdcopf/branch_and_bound.hpp"
#include "acdcopf/formulation.hpp"

namespace acdc {

// Here-and-now decisions replayed against sampled scenarios.
struct FirstStageDecision {
  std::vector<double> alpha;                  // per DC line status
  std::vector<double> pg, qg;                 // per generator
  bool pin_boundaries = false;                // E-ROPF consensus decisions
  std::vector<std::array<double, 3>> boundary; // per VSC station (p, q, u)
};

FirstStageDecision extract_first_stage(const OpfProgram& m, const Solution& s,
                                       const NetworkCase& net, bool with_boundaries);

struct RobustnessReport {
  int total = 0;
  int feasible = 0;
  double ratio = 0.0;
  double obj_min = 0.0, obj_max = 0.0, obj_mean = 0.0; // over feasible scenarios
  std::vector<int> infeasible_scenarios;               // sample indices
  std::vector<double> objectives; // per sample, NaN when infeasible
  std::string to_json() const;
};

// Fixes the first-stage decisions and solves the continuous recourse per
// scenario; infeasible scenarios are tallied, never raised.
RobustnessReport evaluate_robustness(const NetworkCase& net, const OperatingPoint& op,
                                     const FirstStageDecision& dec,
                                     const std::vector<std::vector<double>>& samples,
                                     const FormulationOptions& opts = {},
                                     const BnbOptions& bnb = {});

struct EsmValidity {
  bool ok = true;
  std::vector<std::string> issues;
};

// Structural sufficient condition for extreme-scenario robustness: uncertain
// parameters enter only linear right-hand sides or variable bounds, and no
// nonconvex equality is present.
EsmValidity esm_validity_check(const ConicProgram& prog);

} // namespace acdc
