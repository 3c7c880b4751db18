#include "acdcopf/branch_and_bound.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>

namespace acdc {

namespace {

struct Node {
  std::vector<signed char> fix; // per free binary: -1 free, 0, 1
  double bound;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const { return a.bound > b.bound; }
};

} // namespace

Solution solve_mixed(const ConicProgram& prog, const BnbOptions& opts) {
  std::vector<int> free_bin;
  for (int v : prog.binary_indices())
    if (prog.vars[v].lb != prog.vars[v].ub) free_bin.push_back(v);

  if (free_bin.empty()) return solve_continuous(prog, opts.ipm);

  StandardConic sf = to_standard_form(prog, true);

  // G-row of each variable's bound constraints, in the order the standard
  // form appends them after the Le constraints.
  int le_rows = 0;
  for (const auto& lc : prog.lin)
    if (lc.sense == LinSense::Le) ++le_rows;
  std::vector<int> lb_row(sf.n, -1), ub_row(sf.n, -1);
  int row = le_rows;
  for (int v = 0; v < sf.n; ++v) {
    if (prog.vars[v].lb > -kInf) lb_row[v] = row++;
    if (prog.vars[v].ub < kInf) ub_row[v] = row++;
  }

  std::vector<int> pos(sf.n, -1);
  for (size_t i = 0; i < free_bin.size(); ++i) pos[free_bin[i]] = static_cast<int>(i);

  const Eigen::VectorXd h0 = sf.h;
  auto solve_fixing = [&](const std::vector<signed char>& fix) {
    sf.h = h0;
    for (size_t i = 0; i < fix.size(); ++i) {
      int v = free_bin[i];
      if (fix[i] == 0)
        sf.h(ub_row[v]) = 0.0; // x - ub <= 0 with ub = 0
      else if (fix[i] == 1)
        sf.h(lb_row[v]) = -1.0; // lb - x <= 0 with lb = 1
    }
    return solve_standard_conic(sf, opts.ipm);
  };

  double incumbent = std::numeric_limits<double>::infinity();
  std::vector<signed char> incumbent_fix;
  bool have_incumbent = false;

  auto try_incumbent = [&](double value, const std::vector<signed char>& fix) {
    if (!have_incumbent || value < incumbent) {
      incumbent = value;
      incumbent_fix = fix;
      have_incumbent = true;
    }
  };

  // Rounds the relaxation onto an integral fixing: SOS1 groups follow their
  // driver variable's interval, remaining binaries round to nearest.
  auto heuristic_fix = [&](const Eigen::VectorXd& x) {
    std::vector<signed char> fix(free_bin.size());
    for (size_t i = 0; i < free_bin.size(); ++i)
      fix[i] = static_cast<signed char>(x(free_bin[i]) >= 0.5 ? 1 : 0);
    for (const auto& g : prog.sos1) {
      if (g.driver < 0) continue;
      bool all_free = true;
      for (int b : g.binaries) all_free &= b < sf.n && pos[b] >= 0;
      if (!all_free || g.binaries.empty()) continue;
      double d = x(g.driver);
      size_t pick = 0;
      double best = std::numeric_limits<double>::infinity();
      for (size_t k = 0; k < g.binaries.size(); ++k) {
        double dist = 0.0;
        if (d < g.lo[k]) dist = g.lo[k] - d;
        if (d > g.hi[k]) dist = d - g.hi[k];
        if (dist < best) {
          best = dist;
          pick = k;
        }
      }
      for (size_t k = 0; k < g.binaries.size(); ++k)
        fix[pos[g.binaries[k]]] = static_cast<signed char>(k == pick ? 1 : 0);
    }
    return fix;
  };

  auto run_heuristic = [&](const Eigen::VectorXd& x) {
    std::vector<signed char> fix = heuristic_fix(x);
    IpmResult r = solve_fixing(fix);
    if (r.status == SolveStatus::Optimal) try_incumbent(r.pobj, fix);
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;

  Node root;
  root.fix.assign(free_bin.size(), -1);
  {
    IpmResult r = solve_fixing(root.fix);
    if (r.status == SolveStatus::Infeasible) {
      Solution s;
      s.status = SolveStatus::Infeasible;
      s.bb_nodes = 1;
      return s;
    }
    if (r.status == SolveStatus::Unbounded) {
      Solution s;
      s.status = SolveStatus::Unbounded;
      s.bb_nodes = 1;
      return s;
    }
    if (r.status != SolveStatus::Optimal) {
      Solution s;
      s.status = SolveStatus::NumericalError;
      s.bb_nodes = 1;
      return s;
    }
    root.bound = r.pobj;
    open.push(root);
  }

  int nodes = 0;
  double best_bound = root.bound;

  while (!open.empty() && nodes < opts.max_nodes) {
    Node node = open.top();
    open.pop();
    best_bound = node.bound;
    if (have_incumbent &&
        incumbent - best_bound <=
            std::max(opts.abs_gap, opts.rel_gap * std::max(1.0, std::abs(incumbent))))
      break;

    ++nodes;
    IpmResult r = solve_fixing(node.fix);
    if (r.status == SolveStatus::Infeasible) continue;
    if (r.status != SolveStatus::Optimal) continue; // numerically lost node
    if (have_incumbent && r.pobj >= incumbent - opts.abs_gap) continue;

    // most fractional free binary, lowest index on ties
    int branch_pos = -1;
    double most = -1.0;
    for (size_t i = 0; i < free_bin.size(); ++i) {
      if (node.fix[i] != -1) continue;
      double f = r.x(free_bin[i]);
      double dist = std::min(std::abs(f), std::abs(1.0 - f));
      if (dist > most + 1e-12) {
        most = dist;
        branch_pos = static_cast<int>(i);
      }
    }
    bool integral = most <= opts.int_tol;
    if (integral) {
      std::vector<signed char> fix = node.fix;
      for (size_t i = 0; i < fix.size(); ++i)
        if (fix[i] == -1) fix[i] = static_cast<signed char>(r.x(free_bin[i]) >= 0.5);
      try_incumbent(r.pobj, fix);
      continue;
    }

    if (nodes == 1 || nodes % opts.heuristic_period == 0) run_heuristic(r.x);

    if (opts.verbose)
      std::printf("node %d bound %.8e incumbent %.8e open %zu\n", nodes, r.pobj,
                  incumbent, open.size());

    for (int val : {0, 1}) {
      Node child = node;
      child.fix[branch_pos] = static_cast<signed char>(val);
      child.bound = r.pobj;
      open.push(child);
    }
  }

  if (!have_incumbent) {
    Solution s;
    s.status = open.empty() ? SolveStatus::Infeasible : SolveStatus::GapLimit;
    s.bb_nodes = nodes;
    return s;
  }
  if (open.empty()) best_bound = incumbent;

  // Re-solve the incumbent with pinned binaries so labeled duals and cone
  // residuals describe the reported point.
  ConicProgram fixed = prog;
  for (size_t i = 0; i < free_bin.size(); ++i) {
    fixed.vars[free_bin[i]].lb = incumbent_fix[i];
    fixed.vars[free_bin[i]].ub = incumbent_fix[i];
  }
  Solution s = solve_continuous(fixed, opts.ipm);
  s.bb_nodes = nodes;
  double denom = std::max(1.0, std::abs(incumbent));
  s.mip_gap = std::max(0.0, (incumbent - best_bound) / denom);
  if (s.status == SolveStatus::Optimal &&
      s.mip_gap > opts.rel_gap && nodes >= opts.max_nodes)
    s.status = SolveStatus::GapLimit;
  return s;
}

} // namespace acdc
