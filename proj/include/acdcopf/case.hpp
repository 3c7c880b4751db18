#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace acdc {

// All quantities are stored in per-unit on (s_base_mva, v_base_kv).
// Voltage bounds are kept as bounds on the squared magnitude u = v^2.

struct BaseValues {
  double s_base_mva = 100.0;
  double v_base_kv = 345.0;
};

struct AcNode {
  int id = 0;
  double u_min = 0.0;   // p.u.^2
  double u_max = 0.0;   // p.u.^2
  double p_load = 0.0;  // p.u.
  double q_load = 0.0;  // p.u.
  double g_shunt = 0.0; // p.u., row sum of the real nodal admittance
  double b_shunt = 0.0; // p.u., row sum of the imaginary nodal admittance
};

struct AcBranch {
  int from = 0;
  int to = 0;
  double g = 0.0;     // series conductance, p.u.
  double b = 0.0;     // series susceptance, p.u.
  double s_max = 0.0; // apparent-power cap, p.u.
  int polygon_n = 8;  // capacity polygon segment count
};

struct Generator {
  int node = 0;
  double p_max = 0.0;
  double pf_cap = 0.9; // capacitive power-factor limit
  double pf_ind = 0.9; // inductive power-factor limit
  double c1 = 0.0;     // quadratic cost
  double c2 = 0.0;     // linear cost
  double c3 = 0.0;     // constant cost
};

struct ResUnit {
  int id = 0;
  double s_max = 0.0;       // apparent cap, p.u.
  double p_avail_min = 0.0; // available-power box lower end
  double p_avail_max = 0.0; // available-power box upper end
};

struct DcNode {
  int id = 0;
  double u_min = 0.0;
  double u_max = 0.0;
};

struct DcLine {
  int from = 0;
  int to = 0;
  double r = 0.0;
  bool switchable = false;
  bool closed = true; // default status when switching is disabled
};

enum class VscSide { AcGrid, Res };

struct VscStation {
  int id = 0;
  VscSide side = VscSide::AcGrid;
  int ac_ref = 0;  // AC node id or RES id, depending on `side`
  int dc_node = 0;
  double b_f = 0.0;       // filter susceptance at the internal f node
  double a1 = 0.0;        // loss = a1*l_c + a2*i_c + a3
  double a2 = 0.0;
  double a3 = 0.0;
  double i_max = 1.0;     // converter current cap, p.u.
  double delta_max = 1.0; // modulation cap
  double g_sf = 0.0, b_sf = 0.0; // internal branch s-f
  double g_fc = 0.0, b_fc = 0.0; // internal branch f-c
  double u_min = 0.0, u_max = 0.0; // bounds for internal nodes s, f, c
};

struct NetworkCase {
  BaseValues base;
  std::vector<AcNode> ac_nodes;
  std::vector<AcBranch> ac_branches;
  std::vector<Generator> generators;
  std::vector<ResUnit> res_units;
  std::vector<DcNode> dc_nodes;
  std::vector<DcLine> dc_lines;
  std::vector<VscStation> vsc_stations;

  int ac_node_index(int id) const;
  int dc_node_index(int id) const;
  int res_index(int id) const;
};

struct Violation {
  std::string rule;    // which invariant
  std::string element; // which element
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_json() const;
};

class CaseError : public std::runtime_error {
public:
  CaseError(const std::string& what, const std::string& location)
      : std::runtime_error(what + " (" + location + ")"), location_(location) {}
  const std::string& location() const { return location_; }

private:
  std::string location_;
};

// Parses the sectioned key/value case format (docs/case_format.md) and
// converts to per-unit. Throws CaseError on schema or invariant violations.
NetworkCase load_case(const std::string& path);
NetworkCase parse_case(const std::string& text, const std::string& origin = "<string>");

std::string serialize_case(const NetworkCase& c);

ValidationReport validate_case(const NetworkCase& c);

// SI <-> per-unit helpers.
double mw_to_pu(double mw, const BaseValues& base);
double pu_to_mw(double pu, const BaseValues& base);
double kv_to_pu(double kv, const BaseValues& base);
double pu_to_kv(double pu, const BaseValues& base);
double ohm_to_pu(double ohm, const BaseValues& base);
double pu_to_ohm(double pu, const BaseValues& base);

} // namespace acdc
