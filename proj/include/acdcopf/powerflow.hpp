#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "acdcopf/case.hpp"

namespace acdc {

// First-order model of the exact branch flows about an expansion point
// (ui_k, uj_k, theta_k), in the squared-voltage/angle variables. Exact at
// the point by construction.
struct BranchLin {
  double ui_k = 1.0, uj_k = 1.0, theta_k = 0.0;
  double p0 = 0.0, dp_dui = 0.0, dp_duj = 0.0, dp_dtheta = 0.0;
  double q0 = 0.0, dq_dui = 0.0, dq_duj = 0.0, dq_dtheta = 0.0;

  double eval_p(double ui, double uj, double theta) const {
    return p0 + dp_dui * (ui - ui_k) + dp_duj * (uj - uj_k) + dp_dtheta * (theta - theta_k);
  }
  double eval_q(double ui, double uj, double theta) const {
    return q0 + dq_dui * (ui - ui_k) + dq_duj * (uj - uj_k) + dq_dtheta * (theta - theta_k);
  }
};

struct OperatingPoint {
  Eigen::VectorXd u;     // squared voltage magnitude per AC node
  Eigen::VectorXd theta; // angle per AC node [rad]
  double residual = 0.0; // max power mismatch of the nonlinear solve
  int iterations = 0;
  std::vector<BranchLin> fwd; // per ac_branch, from->to orientation
  std::vector<BranchLin> rev; // per ac_branch, to->from orientation
};

struct PowerFlowOptions {
  double tol = 1e-8;
  int max_iter = 50;
};

class PowerFlowError : public std::runtime_error {
public:
  PowerFlowError(const std::string& what, std::vector<double> mismatch_trace,
                 bool singular = false)
      : std::runtime_error(what), trace(std::move(mismatch_trace)), singular_jacobian(singular) {}
  std::vector<double> trace;
  bool singular_jacobian;
};

// Exact nonlinear branch flows from side i toward j, with u = v^2.
double branch_p(double g, double b, double ui, double uj, double theta_ij);
double branch_q(double g, double b, double ui, double uj, double theta_ij);

// Newton-Raphson solve of the AC grid with the given net injections
// (p, q per node index; the slack node's injections are ignored and its
// voltage pinned at v_slack, angle 0). Returns a converged, linearized
// operating point. Throws PowerFlowError on divergence.
OperatingPoint solve_base_power_flow(const NetworkCase& c, const Eigen::VectorXd& p_inj,
                                     const Eigen::VectorXd& q_inj, int slack_index,
                                     double v_slack = 1.0,
                                     const PowerFlowOptions& opts = {});

// Deterministic expansion point for a case: the first AC node is the slack,
// every generator injects its p_max, VSC draws are zero, loads as given.
OperatingPoint base_operating_point(const NetworkCase& c,
                                    const PowerFlowOptions& opts = {});

// Recomputes the first-order flow coefficients for every branch about the
// given state. Rejects expansion points with any u <= 0.
void linearize(OperatingPoint& op, const NetworkCase& c);

struct UpdateResult {
  OperatingPoint point;
  double max_u_error = 0.0;           // max |u_lin - u_nonlin| over AC nodes
  Eigen::VectorXd u_nonlinear;        // per-node nonlinear re-solve
};

// Re-solves the nonlinear power flow at the injections of an OPF solution
// (u_lin holds the OPF's squared voltages used for the accuracy metric),
// then re-linearizes. Throws PowerFlowError if the new point diverges.
UpdateResult update_operating_point(const NetworkCase& c, const Eigen::VectorXd& p_inj,
                                    const Eigen::VectorXd& q_inj,
                                    const Eigen::VectorXd& u_lin, int slack_index,
                                    double v_slack, const PowerFlowOptions& opts = {});

} // namespace acdc
