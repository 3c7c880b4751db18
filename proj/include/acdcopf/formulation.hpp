#pragma once

#include <map>
#include <string>
#include <vector>

#include "acdcopf/conic_program.hpp"
#include "acdcopf/powerflow.hpp"

namespace acdc {

enum class OpfMode { Dopf, Ropf, Eropf };

struct FormulationOptions {
  int envelope_segments = 4; // K, converter-current secant segments
  bool switching = true;     // DC line status binaries
  double big_m = -1.0;       // flow gate; < 0 derives total rated VSC power
  double theta_max = 3.2;    // angle box [rad]
};

// Variable indices of one PCC boundary triple (p into VSC, q into VSC, u).
struct Boundary {
  int p = -1, q = -1, u = -1;
};

// Notable variable indices of an assembled program.
struct ModelInfo {
  std::vector<int> alpha;                   // per dc line; empty when fixed
  std::vector<int> pg, qg;                  // per generator, shared
  std::vector<std::map<int, Boundary>> bnd; // per scenario: vsc id -> triple
  std::vector<std::vector<int>> res_p;      // per scenario, per res unit
  std::vector<std::vector<int>> ac_u;       // per scenario, per ac node
  std::vector<std::vector<int>> ac_theta;   // per scenario, per ac node
  std::vector<std::vector<int>> p_m2v;      // per scenario, per vsc
  int scenario_count = 0;
};

struct OpfProgram {
  ConicProgram prog;
  ModelInfo info;
};

double derive_big_m(const NetworkCase& net);

// Creates one boundary triple with bounds from the VSC station (intersected
// with the PCC node's voltage box for AC-side stations).
Boundary make_boundary(ConicProgram& prog, const NetworkCase& net, int vsc_idx,
                       const std::string& tag, const FormulationOptions& opts);

// AC grid block: SLA flow balances, generator boxes and power-factor wedges,
// polygonal branch caps, voltage boxes. `bnd` maps AC-side VSC station ids to
// their boundary triples; pg/qg are the (shared) generator variables.
struct AcBlockVars {
  std::vector<int> u, theta;
};
AcBlockVars build_ac_block(ConicProgram& prog, const NetworkCase& net,
                           const OperatingPoint& op, const std::vector<int>& pg,
                           const std::vector<int>& qg,
                           const std::map<int, Boundary>& bnd, const std::string& tag);

// Creates the shared generator variables (pg in [0, pmax], qg boxed by the
// wedge added in build_ac_block).
void make_generator_vars(ConicProgram& prog, const NetworkCase& net,
                         std::vector<int>& pg, std::vector<int>& qg,
                         const std::string& tag);

// RES unit block: polygonal apparent cap, availability bound (uncertain
// parameter, registered in prog.uncertainty), boundary pass-through.
int build_res_block(ConicProgram& prog, const NetworkCase& net, int res_idx,
                    double avail, const Boundary& bnd, const std::string& tag);

// MTDC block: branch-flow cones, loss equalities, voltage drops with
// optional switching binaries `alpha` (empty: statuses fixed from the case).
struct MtdcVars {
  std::vector<int> u; // per dc node
};
MtdcVars build_mtdc_block(ConicProgram& prog, const NetworkCase& net,
                          const std::vector<int>& alpha,
                          const std::map<int, int>& p_m2v_by_vsc,
                          const std::string& tag, const FormulationOptions& opts);

// VSC station block: 3-node internal chain in W-variables, filter injection,
// modulation cap against the DC node voltage, converter-current envelope with
// its SOS1 binaries, loss model and DC-side balance.
void build_vsc_block(ConicProgram& prog, const NetworkCase& net, int vsc_idx,
                     const Boundary& bnd, int p_m2v, int u_dc, const std::string& tag,
                     const FormulationOptions& opts);

// Switching binaries, one per DC line.
std::vector<int> make_alpha_vars(ConicProgram& prog, const NetworkCase& net);

// Objective terms: quadratic generator costs once, plus the per-scenario
// weighted loss terms sum(pg) - sum(loads) + sum(pR).
void add_generation_cost(ConicProgram& prog, const NetworkCase& net,
                         const std::vector<int>& pg);
void add_loss_term(ConicProgram& prog, const NetworkCase& net,
                   const std::vector<int>& pg, const std::vector<int>& res_p,
                   double weight);

// Full centralized program. `scenarios` holds per-scenario RES availability
// (one value per res unit); DOPF requires exactly one scenario, ROPF keeps
// alpha/pg/qg first-stage, E-ROPF additionally shares the boundary triples.
OpfProgram assemble_opf(const NetworkCase& net, const OperatingPoint& op, OpfMode mode,
                        const std::vector<std::vector<double>>& scenarios,
                        const FormulationOptions& opts = {});

} // namespace acdc
