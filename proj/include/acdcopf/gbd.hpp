#pragma once

#include <string>
#include <vector>

#include "acdcopf/branch_and_bound.hpp"
#include "acdcopf/formulation.hpp"

namespace acdc {

// Cut over a subproblem's boundary replica b': value(b') = intercept + gradient . b'.
// Optimality: z_sp >= value(b'). Feasibility: value(b') <= 0.
struct BendersCut {
  enum class Kind { Optimality, Feasibility };
  Kind kind = Kind::Optimality;
  int sp_id = 0;       // -1 for the single-cut aggregate
  int iteration = 0;   // MP iteration the generating boundary came from
  Eigen::VectorXd gradient;
  double intercept = 0.0;
  double source_value = 0.0; // F at the generating point / infeasibility measure
  Eigen::VectorXd generated_at;

  double eval(const Eigen::VectorXd& b_prime) const {
    return intercept + gradient.dot(b_prime);
  }
};

// One AC or RES subproblem: a continuous program whose boundary variables are
// pinned to the master's replica values through labeled coupling equalities.
struct SpSpec {
  std::string name;              // "ac#1", "res#2", ...
  ConicProgram prog;
  std::vector<int> b_local;      // boundary variables, coupling order (p,q,u per VSC)
  std::vector<size_t> couple_rows; // indices into prog.lin, same order
  Eigen::VectorXd b_init;        // boundary start from the base operating point
};

struct Decomposition {
  ConicProgram mp;                         // VSC + MTDC + replicas + epigraphs
  std::vector<int> alpha;                  // switching binaries (empty bounds-fixed)
  std::vector<int> z_vars;                 // per SP
  std::vector<std::vector<int>> b_prime;   // per SP, replica vars in coupling order
  std::vector<SpSpec> sps;
  double z_min = 0.0;
};

// Splits the case into the master (DC side) and the per-system subproblems.
// Throws std::invalid_argument when the AC grid has no VSC connection or the
// mode is Ropf (per-scenario boundaries cannot be replicated in one master).
Decomposition decompose(const NetworkCase& net, const OperatingPoint& op, OpfMode mode,
                        const std::vector<std::vector<double>>& scenarios,
                        const FormulationOptions& opts = {});

struct OspResult {
  bool feasible = false;
  double value = 0.0;          // F at the pinned boundary
  Eigen::VectorXd gradient;    // dF/db' from the coupling duals
  Solution sol;
};
OspResult solve_osp(const SpSpec& sp, const Eigen::VectorXd& b_hat,
                    const IpmOptions& opts = {});

struct RspResult {
  double measure = 0.0;        // L1 infeasibility of the coupling
  Eigen::VectorXd gradient;
  Solution sol;
};
RspResult solve_rsp(const SpSpec& sp, const Eigen::VectorXd& b_hat,
                    const IpmOptions& opts = {});

BendersCut make_optimality_cut(const OspResult& r, const Eigen::VectorXd& b_hat,
                               int sp_id, int iteration);
BendersCut make_feasibility_cut(const RspResult& r, const Eigen::VectorXd& b_hat,
                                int sp_id, int iteration);

struct MpResult {
  std::vector<Eigen::VectorXd> b_hat; // per SP
  std::vector<double> z_hat;          // per SP (single slot in single-cut mode)
  double lower_bound = 0.0;
  Solution sol;
};
// Solves the master with the accumulated cut pool appended.
// Throws std::runtime_error on infeasibility (reporting a minimal infeasible
// cut subset when the pool holds at most 10 cuts).
MpResult solve_mp(const Decomposition& dec, const std::vector<BendersCut>& cuts,
                  const BnbOptions& opts = {});

struct GbdOptions {
  bool multi_cut = true;
  bool async = false;
  int n_min = -1;                 // async: SP results required per MP step (-1: all)
  int staleness = 3;              // async: max iterations an SP may lag
  std::vector<double> latencies;  // per SP virtual round-trip time (default 1 each)
  double residual_tol = 1e-5;     // max-norm coupling residual threshold
  int max_iterations = 200;
  unsigned long long seed = 1;    // recorded for artifact reproducibility
  BnbOptions mp_bnb;
  IpmOptions sp_ipm;
};

struct GbdIterationRow {
  int iteration = 0;
  double virtual_time = 0.0;
  double ub_raw = 0.0;   // sum of last-known SP values
  double ub_best = 0.0;  // best raw UB seen at residual <= threshold
  double lower_bound = 0.0;
  double max_residual = 0.0;
  std::string active_set; // SP ids folded into the MP step, ';'-separated
};

struct GbdTrace {
  std::vector<GbdIterationRow> rows;
  bool converged = false;
  unsigned long long seed = 1;
  std::string to_csv() const;
};

struct GbdResult {
  bool converged = false;
  double objective = 0.0; // final raw UB
  double upper_bound = 0.0;
  double lower_bound = 0.0;
  int iterations = 0;
  MpResult mp;
  std::vector<BendersCut> cuts;
  GbdTrace trace;
};

GbdResult run_gbd(const Decomposition& dec, const GbdOptions& opts = {});

} // namespace acdc
