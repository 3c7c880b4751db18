#include "acdcopf/sla.hpp"

#include <cmath>
#include <stdexcept>

namespace acdc {

SlaResult run_sla(const NetworkCase& net, OpfMode mode,
                  const std::vector<std::vector<double>>& scenarios, int rounds,
                  const FormulationOptions& opts, const BnbOptions& bnb,
                  const PowerFlowOptions& pf) {
  if (rounds < 0) throw std::invalid_argument("rounds must be non-negative");
  const int n = static_cast<int>(net.ac_nodes.size());

  SlaResult out;
  OperatingPoint op = base_operating_point(net, pf);

  for (int k = 0; ; ++k) {
    OpfProgram m = assemble_opf(net, op, mode, scenarios, opts);
    Solution s = solve_mixed(m.prog, bnb);
    if (s.status != SolveStatus::Optimal && s.status != SolveStatus::GapLimit)
      throw std::runtime_error("OPF solve failed during SLA round " +
                               std::to_string(k));

    // scenario-0 net injections seen by the AC grid
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n), q = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd u_lin(n);
    for (int i = 0; i < n; ++i) {
      p(i) -= net.ac_nodes[i].p_load;
      q(i) -= net.ac_nodes[i].q_load;
      u_lin(i) = s.x(m.info.ac_u.at(0)[i]);
    }
    for (size_t g = 0; g < net.generators.size(); ++g) {
      int i = net.ac_node_index(net.generators[g].node);
      p(i) += s.x(m.info.pg[g]);
      q(i) += s.x(m.info.qg[g]);
    }
    for (const auto& v : net.vsc_stations)
      if (v.side == VscSide::AcGrid) {
        const Boundary& b = m.info.bnd.at(0).at(v.id);
        int i = net.ac_node_index(v.ac_ref);
        p(i) -= s.x(b.p);
        q(i) -= s.x(b.q);
      }

    UpdateResult ur =
        update_operating_point(net, p, q, u_lin, 0, std::sqrt(u_lin(0)), pf);

    SlaRound row;
    row.round = k;
    row.objective = s.objective;
    row.max_u_error = ur.max_u_error;
    row.u_lin = u_lin;
    row.u_nonlinear = ur.u_nonlinear;
    out.rounds.push_back(std::move(row));
    out.final_solution = s;

    if (k == rounds) {
      out.final_op = op;
      break;
    }
    op = ur.point;
  }
  return out;
}

} // namespace acdc
