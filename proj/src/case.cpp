#include "acdcopf/case.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace acdc {

int NetworkCase::ac_node_index(int id) const {
  for (size_t i = 0; i < ac_nodes.size(); ++i)
    if (ac_nodes[i].id == id) return static_cast<int>(i);
  return -1;
}

int NetworkCase::dc_node_index(int id) const {
  for (size_t i = 0; i < dc_nodes.size(); ++i)
    if (dc_nodes[i].id == id) return static_cast<int>(i);
  return -1;
}

int NetworkCase::res_index(int id) const {
  for (size_t i = 0; i < res_units.size(); ++i)
    if (res_units[i].id == id) return static_cast<int>(i);
  return -1;
}

double mw_to_pu(double mw, const BaseValues& b) { return mw / b.s_base_mva; }
double pu_to_mw(double pu, const BaseValues& b) { return pu * b.s_base_mva; }
double kv_to_pu(double kv, const BaseValues& b) { return kv / b.v_base_kv; }
double pu_to_kv(double pu, const BaseValues& b) { return pu * b.v_base_kv; }

static double z_base_ohm(const BaseValues& b) {
  return b.v_base_kv * b.v_base_kv / b.s_base_mva;
}

double ohm_to_pu(double ohm, const BaseValues& b) { return ohm / z_base_ohm(b); }
double pu_to_ohm(double pu, const BaseValues& b) { return pu * z_base_ohm(b); }

namespace {

struct Line {
  std::string text;
  int number;
};

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

class RowReader {
public:
  RowReader(std::vector<std::string> tok, const std::string& loc)
      : tok_(std::move(tok)), loc_(loc) {}

  double num(const char* field) {
    const std::string& t = next(field);
    size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(t, &pos);
    } catch (const std::exception&) {
      throw CaseError(std::string("field '") + field + "' is not a number: " + t, loc_);
    }
    if (pos != t.size())
      throw CaseError(std::string("field '") + field + "' is not a number: " + t, loc_);
    return v;
  }

  int integer(const char* field) {
    double v = num(field);
    if (v != std::floor(v))
      throw CaseError(std::string("field '") + field + "' must be an integer", loc_);
    return static_cast<int>(v);
  }

  bool flag(const char* field) {
    int v = integer(field);
    if (v != 0 && v != 1)
      throw CaseError(std::string("field '") + field + "' must be 0 or 1", loc_);
    return v == 1;
  }

  std::string word(const char* field) { return next(field); }

  void done() {
    if (i_ < tok_.size())
      throw CaseError("unexpected trailing fields", loc_);
  }

private:
  const std::string& next(const char* field) {
    if (i_ >= tok_.size())
      throw CaseError(std::string("missing field '") + field + "'", loc_);
    return tok_[i_++];
  }

  std::vector<std::string> tok_;
  std::string loc_;
  size_t i_ = 0;
};

} // namespace

NetworkCase parse_case(const std::string& text, const std::string& origin) {
  NetworkCase c;
  bool si_units = false;
  bool saw_base = false;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  std::map<std::string, std::string> base_kv;

  auto loc = [&](int n) { return origin + ":" + std::to_string(n); };

  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (size_t h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
    line = strip(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw CaseError("malformed section header: " + line, loc(lineno));
      section = line.substr(1, line.size() - 2);
      static const char* known[] = {"base",    "ac_node", "ac_branch", "generator",
                                    "res",     "dc_node", "dc_line",   "vsc"};
      if (std::find_if(std::begin(known), std::end(known),
                       [&](const char* k) { return section == k; }) == std::end(known))
        throw CaseError("unknown section [" + section + "]", loc(lineno));
      if (section == "base") saw_base = true;
      continue;
    }

    if (section.empty())
      throw CaseError("data before first section header", loc(lineno));

    if (section == "base") {
      size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw CaseError("expected 'key = value' in [base]", loc(lineno));
      base_kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
      continue;
    }

    RowReader row(tokenize(line), loc(lineno));
    if (section == "ac_node") {
      AcNode n;
      n.id = row.integer("id");
      n.u_min = row.num("vmin");
      n.u_max = row.num("vmax");
      n.p_load = row.num("pload");
      n.q_load = row.num("qload");
      n.g_shunt = row.num("gshunt");
      n.b_shunt = row.num("bshunt");
      row.done();
      c.ac_nodes.push_back(n);
    } else if (section == "ac_branch") {
      AcBranch b;
      b.from = row.integer("from");
      b.to = row.integer("to");
      b.g = row.num("g");
      b.b = row.num("b");
      b.s_max = row.num("smax");
      b.polygon_n = row.integer("polygon_n");
      row.done();
      c.ac_branches.push_back(b);
    } else if (section == "generator") {
      Generator g;
      g.node = row.integer("node");
      g.p_max = row.num("pmax");
      g.pf_cap = row.num("pf_cap");
      g.pf_ind = row.num("pf_ind");
      g.c1 = row.num("c1");
      g.c2 = row.num("c2");
      g.c3 = row.num("c3");
      row.done();
      c.generators.push_back(g);
    } else if (section == "res") {
      ResUnit r;
      r.id = row.integer("id");
      r.s_max = row.num("smax");
      r.p_avail_min = row.num("pmin_avail");
      r.p_avail_max = row.num("pmax_avail");
      row.done();
      c.res_units.push_back(r);
    } else if (section == "dc_node") {
      DcNode n;
      n.id = row.integer("id");
      n.u_min = row.num("vmin");
      n.u_max = row.num("vmax");
      row.done();
      c.dc_nodes.push_back(n);
    } else if (section == "dc_line") {
      DcLine l;
      l.from = row.integer("from");
      l.to = row.integer("to");
      l.r = row.num("r");
      l.switchable = row.flag("switchable");
      l.closed = row.flag("closed");
      row.done();
      c.dc_lines.push_back(l);
    } else if (section == "vsc") {
      VscStation v;
      v.id = row.integer("id");
      std::string side = row.word("side");
      if (side == "ac")
        v.side = VscSide::AcGrid;
      else if (side == "res")
        v.side = VscSide::Res;
      else
        throw CaseError("vsc side must be 'ac' or 'res', got '" + side + "'", loc(lineno));
      v.ac_ref = row.integer("ac_ref");
      v.dc_node = row.integer("dc_node");
      v.b_f = row.num("b_f");
      v.a1 = row.num("a1");
      v.a2 = row.num("a2");
      v.a3 = row.num("a3");
      v.i_max = row.num("i_max");
      v.delta_max = row.num("delta_max");
      v.g_sf = row.num("g_sf");
      v.b_sf = row.num("b_sf");
      v.g_fc = row.num("g_fc");
      v.b_fc = row.num("b_fc");
      v.u_min = row.num("vmin");
      v.u_max = row.num("vmax");
      row.done();
      c.vsc_stations.push_back(v);
    }
  }

  if (!saw_base) throw CaseError("missing [base] section", origin);

  for (const auto& [k, v] : base_kv) {
    if (k == "s_base_mva")
      c.base.s_base_mva = std::stod(v);
    else if (k == "v_base_kv")
      c.base.v_base_kv = std::stod(v);
    else if (k == "units") {
      if (v == "si")
        si_units = true;
      else if (v != "pu")
        throw CaseError("units must be 'pu' or 'si', got '" + v + "'", origin);
    } else if (k != "version")
      throw CaseError("unknown [base] key '" + k + "'", origin);
  }
  if (c.base.s_base_mva <= 0 || c.base.v_base_kv <= 0)
    throw CaseError("base power and voltage must be positive", origin);

  if (si_units) {
    const BaseValues& b = c.base;
    double y_base = 1.0 / z_base_ohm(b); // siemens
    for (auto& n : c.ac_nodes) {
      n.u_min = kv_to_pu(n.u_min, b);
      n.u_max = kv_to_pu(n.u_max, b);
      n.p_load = mw_to_pu(n.p_load, b);
      n.q_load = mw_to_pu(n.q_load, b);
      n.g_shunt /= y_base;
      n.b_shunt /= y_base;
    }
    for (auto& br : c.ac_branches) {
      br.g /= y_base;
      br.b /= y_base;
      br.s_max = mw_to_pu(br.s_max, b);
    }
    for (auto& g : c.generators) g.p_max = mw_to_pu(g.p_max, b);
    for (auto& r : c.res_units) {
      r.s_max = mw_to_pu(r.s_max, b);
      r.p_avail_min = mw_to_pu(r.p_avail_min, b);
      r.p_avail_max = mw_to_pu(r.p_avail_max, b);
    }
    for (auto& n : c.dc_nodes) {
      n.u_min = kv_to_pu(n.u_min, b);
      n.u_max = kv_to_pu(n.u_max, b);
    }
    for (auto& l : c.dc_lines) l.r = ohm_to_pu(l.r, b);
    for (auto& v : c.vsc_stations) {
      v.b_f /= y_base;
      v.i_max /= b.s_base_mva / b.v_base_kv; // kA base
      v.g_sf /= y_base;
      v.b_sf /= y_base;
      v.g_fc /= y_base;
      v.b_fc /= y_base;
      v.u_min = kv_to_pu(v.u_min, b);
      v.u_max = kv_to_pu(v.u_max, b);
    }
  }

  // Voltage columns carry magnitude bounds; store their squares.
  auto square_bounds = [](double& lo, double& hi) {
    lo = lo * lo;
    hi = hi * hi;
  };
  for (auto& n : c.ac_nodes) square_bounds(n.u_min, n.u_max);
  for (auto& n : c.dc_nodes) square_bounds(n.u_min, n.u_max);
  for (auto& v : c.vsc_stations) square_bounds(v.u_min, v.u_max);

  ValidationReport report = validate_case(c);
  if (!report.ok()) {
    const Violation& v = report.violations.front();
    throw CaseError(v.rule + ": " + v.detail + " [" + v.element + "]", origin);
  }
  return c;
}

NetworkCase load_case(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CaseError("cannot open case file", path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_case(ss.str(), path);
}

std::string serialize_case(const NetworkCase& c) {
  std::ostringstream out;
  char buf[512];
  auto row = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    out << buf << "\n";
  };
  out << "[base]\nversion = 1\n";
  row("s_base_mva = %.17g", c.base.s_base_mva);
  row("v_base_kv = %.17g", c.base.v_base_kv);
  out << "units = pu\n";

  out << "\n[ac_node]\n# id vmin vmax pload qload gshunt bshunt\n";
  for (const auto& n : c.ac_nodes)
    row("%d %.17g %.17g %.17g %.17g %.17g %.17g", n.id, std::sqrt(n.u_min),
        std::sqrt(n.u_max), n.p_load, n.q_load, n.g_shunt, n.b_shunt);

  out << "\n[ac_branch]\n# from to g b smax polygon_n\n";
  for (const auto& b : c.ac_branches)
    row("%d %d %.17g %.17g %.17g %d", b.from, b.to, b.g, b.b, b.s_max, b.polygon_n);

  out << "\n[generator]\n# node pmax pf_cap pf_ind c1 c2 c3\n";
  for (const auto& g : c.generators)
    row("%d %.17g %.17g %.17g %.17g %.17g %.17g", g.node, g.p_max, g.pf_cap, g.pf_ind,
        g.c1, g.c2, g.c3);

  out << "\n[res]\n# id smax pmin_avail pmax_avail\n";
  for (const auto& r : c.res_units)
    row("%d %.17g %.17g %.17g", r.id, r.s_max, r.p_avail_min, r.p_avail_max);

  out << "\n[dc_node]\n# id vmin vmax\n";
  for (const auto& n : c.dc_nodes)
    row("%d %.17g %.17g", n.id, std::sqrt(n.u_min), std::sqrt(n.u_max));

  out << "\n[dc_line]\n# from to r switchable closed\n";
  for (const auto& l : c.dc_lines)
    row("%d %d %.17g %d %d", l.from, l.to, l.r, l.switchable ? 1 : 0, l.closed ? 1 : 0);

  out << "\n[vsc]\n# id side ac_ref dc_node b_f a1 a2 a3 i_max delta_max g_sf b_sf g_fc "
         "b_fc vmin vmax\n";
  for (const auto& v : c.vsc_stations)
    row("%d %s %d %d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
        "%.17g",
        v.id, v.side == VscSide::AcGrid ? "ac" : "res", v.ac_ref, v.dc_node, v.b_f, v.a1,
        v.a2, v.a3, v.i_max, v.delta_max, v.g_sf, v.b_sf, v.g_fc, v.b_fc,
        std::sqrt(v.u_min), std::sqrt(v.u_max));
  return out.str();
}

namespace {

// Union-find connectivity over node indices.
struct Dsu {
  std::vector<int> parent;
  explicit Dsu(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); }
  void join(int a, int b) { parent[find(a)] = find(b); }
  bool connected() {
    if (parent.empty()) return true;
    int r = find(0);
    for (size_t i = 1; i < parent.size(); ++i)
      if (find(static_cast<int>(i)) != r) return false;
    return true;
  }
};

} // namespace

ValidationReport validate_case(const NetworkCase& c) {
  ValidationReport rep;
  auto add = [&](const std::string& rule, const std::string& elem,
                 const std::string& detail) {
    rep.violations.push_back({rule, elem, detail});
  };

  auto check_bounds = [&](double lo, double hi, const std::string& elem) {
    if (lo > hi) add("bound-ordering", elem, "lower bound exceeds upper bound");
  };

  for (const auto& n : c.ac_nodes)
    check_bounds(n.u_min, n.u_max, "ac_node " + std::to_string(n.id));
  for (const auto& n : c.dc_nodes)
    check_bounds(n.u_min, n.u_max, "dc_node " + std::to_string(n.id));
  for (const auto& v : c.vsc_stations)
    check_bounds(v.u_min, v.u_max, "vsc " + std::to_string(v.id));
  for (const auto& r : c.res_units) {
    check_bounds(r.p_avail_min, r.p_avail_max, "res " + std::to_string(r.id));
    if (r.s_max <= 0)
      add("positive-cap", "res " + std::to_string(r.id), "apparent cap must be positive");
  }

  for (const auto& l : c.dc_lines) {
    std::string elem =
        "dc_line (" + std::to_string(l.from) + "," + std::to_string(l.to) + ")";
    if (l.r <= 0) add("positive-resistance", elem, "resistance must be positive");
    if (c.dc_node_index(l.from) < 0 || c.dc_node_index(l.to) < 0)
      add("reference", elem, "endpoint is not a DC node");
  }

  for (const auto& b : c.ac_branches) {
    std::string elem =
        "ac_branch (" + std::to_string(b.from) + "," + std::to_string(b.to) + ")";
    if (b.s_max <= 0) add("positive-cap", elem, "apparent-power cap must be positive");
    if (b.polygon_n < 1) add("polygon", elem, "polygon segment count must be >= 1");
    if (c.ac_node_index(b.from) < 0 || c.ac_node_index(b.to) < 0)
      add("reference", elem, "endpoint is not an AC node");
  }

  for (const auto& g : c.generators) {
    std::string elem = "generator at node " + std::to_string(g.node);
    if (c.ac_node_index(g.node) < 0) add("reference", elem, "node does not exist");
    if (g.p_max < 0) add("positive-cap", elem, "p_max must be nonnegative");
    if (g.pf_cap <= 0 || g.pf_cap > 1 || g.pf_ind <= 0 || g.pf_ind > 1)
      add("power-factor", elem, "power factors must lie in (0, 1]");
    if (g.c1 < 0) add("convex-cost", elem, "quadratic cost coefficient must be >= 0");
  }

  std::vector<int> vsc_per_dc(c.dc_nodes.size(), 0);
  for (const auto& v : c.vsc_stations) {
    std::string elem = "vsc " + std::to_string(v.id);
    int dci = c.dc_node_index(v.dc_node);
    if (dci < 0)
      add("reference", elem, "dc node does not exist");
    else if (++vsc_per_dc[dci] > 1)
      add("vsc-per-dc-node", elem,
          "dc node " + std::to_string(v.dc_node) + " hosts more than one VSC");
    if (v.side == VscSide::AcGrid && c.ac_node_index(v.ac_ref) < 0)
      add("reference", elem, "AC-side node does not exist");
    if (v.side == VscSide::Res && c.res_index(v.ac_ref) < 0)
      add("reference", elem, "RES unit does not exist");
    if (v.i_max <= 0) add("positive-cap", elem, "current cap must be positive");
    if (v.delta_max <= 0) add("positive-cap", elem, "modulation cap must be positive");
  }

  if (!c.ac_nodes.empty()) {
    Dsu dsu(c.ac_nodes.size());
    for (const auto& b : c.ac_branches) {
      int i = c.ac_node_index(b.from), j = c.ac_node_index(b.to);
      if (i >= 0 && j >= 0) dsu.join(i, j);
    }
    if (!dsu.connected()) add("connectivity", "ac grid", "AC grid is not connected");
  }

  if (!c.dc_nodes.empty()) {
    Dsu dsu(c.dc_nodes.size());
    for (const auto& l : c.dc_lines) { // all switchable lines treated as closed
      int i = c.dc_node_index(l.from), j = c.dc_node_index(l.to);
      if (i >= 0 && j >= 0) dsu.join(i, j);
    }
    if (!dsu.connected()) add("connectivity", "dc grid", "DC grid is not connected");
  }

  return rep;
}

std::string ValidationReport::to_json() const {
  std::ostringstream out;
  out << "{\"ok\": " << (ok() ? "true" : "false") << ", \"violations\": [";
  for (size_t i = 0; i < violations.size(); ++i) {
    if (i) out << ", ";
    out << "{\"rule\": \"" << violations[i].rule << "\", \"element\": \""
        << violations[i].element << "\", \"detail\": \"" << violations[i].detail
        << "\"}";
  }
  out << "]}";
  return out.str();
}

} // namespace acdc
