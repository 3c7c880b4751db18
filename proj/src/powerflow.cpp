#include "acdcopf/powerflow.hpp"

#include <cmath>

namespace acdc {

double branch_p(double g, double b, double ui, double uj, double th) {
  return g * ui - std::sqrt(ui * uj) * (g * std::cos(th) + b * std::sin(th));
}

double branch_q(double g, double b, double ui, double uj, double th) {
  return -b * ui - std::sqrt(ui * uj) * (g * std::sin(th) - b * std::cos(th));
}

namespace {

// Per-node sums of the exact flows and their polar-coordinate Jacobian.
struct Mismatch {
  Eigen::VectorXd p, q;
  Eigen::MatrixXd dp_dth, dp_dv, dq_dth, dq_dv;
};

Mismatch evaluate(const NetworkCase& c, const Eigen::VectorXd& v,
                  const Eigen::VectorXd& th) {
  const int n = static_cast<int>(c.ac_nodes.size());
  Mismatch m;
  m.p = Eigen::VectorXd::Zero(n);
  m.q = Eigen::VectorXd::Zero(n);
  m.dp_dth = Eigen::MatrixXd::Zero(n, n);
  m.dp_dv = Eigen::MatrixXd::Zero(n, n);
  m.dq_dth = Eigen::MatrixXd::Zero(n, n);
  m.dq_dv = Eigen::MatrixXd::Zero(n, n);

  for (int k = 0; k < n; ++k) {
    const AcNode& node = c.ac_nodes[k];
    m.p(k) += node.g_shunt * v(k) * v(k);
    m.q(k) += -node.b_shunt * v(k) * v(k);
    m.dp_dv(k, k) += 2 * node.g_shunt * v(k);
    m.dq_dv(k, k) += -2 * node.b_shunt * v(k);
  }

  auto side = [&](int i, int j, double g, double b) {
    double t = th(i) - th(j);
    double ct = std::cos(t), st = std::sin(t);
    double cc = g * ct + b * st; // in-phase coupling
    double dd = g * st - b * ct; // quadrature coupling
    m.p(i) += g * v(i) * v(i) - v(i) * v(j) * cc;
    m.q(i) += -b * v(i) * v(i) - v(i) * v(j) * dd;
    m.dp_dth(i, i) += v(i) * v(j) * dd;
    m.dp_dth(i, j) += -v(i) * v(j) * dd;
    m.dp_dv(i, i) += 2 * g * v(i) - v(j) * cc;
    m.dp_dv(i, j) += -v(i) * cc;
    m.dq_dth(i, i) += -v(i) * v(j) * cc;
    m.dq_dth(i, j) += v(i) * v(j) * cc;
    m.dq_dv(i, i) += -2 * b * v(i) - v(j) * dd;
    m.dq_dv(i, j) += -v(i) * dd;
  };

  for (const auto& br : c.ac_branches) {
    int i = c.ac_node_index(br.from);
    int j = c.ac_node_index(br.to);
    side(i, j, br.g, br.b);
    side(j, i, br.g, br.b);
  }
  return m;
}

} // namespace

OperatingPoint solve_base_power_flow(const NetworkCase& c, const Eigen::VectorXd& p_inj,
                                     const Eigen::VectorXd& q_inj, int slack_index,
                                     double v_slack, const PowerFlowOptions& opts) {
  const int n = static_cast<int>(c.ac_nodes.size());
  if (p_inj.size() != n || q_inj.size() != n)
    throw std::invalid_argument("injection vectors must match the AC node count");
  if (slack_index < 0 || slack_index >= n)
    throw std::invalid_argument("slack index out of range");

  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd th = Eigen::VectorXd::Zero(n);
  v(slack_index) = v_slack;

  std::vector<int> free_nodes;
  for (int k = 0; k < n; ++k)
    if (k != slack_index) free_nodes.push_back(k);
  const int nf = static_cast<int>(free_nodes.size());

  std::vector<double> trace;
  double mismatch = 0.0;
  int iter = 0;
  for (; iter <= opts.max_iter; ++iter) {
    Mismatch m = evaluate(c, v, th);
    Eigen::VectorXd f(2 * nf);
    for (int a = 0; a < nf; ++a) {
      f(a) = m.p(free_nodes[a]) - p_inj(free_nodes[a]);
      f(nf + a) = m.q(free_nodes[a]) - q_inj(free_nodes[a]);
    }
    mismatch = nf == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
    trace.push_back(mismatch);
    if (mismatch <= opts.tol) break;
    if (iter == opts.max_iter)
      throw PowerFlowError("power flow did not converge", trace);

    Eigen::MatrixXd jac(2 * nf, 2 * nf);
    for (int a = 0; a < nf; ++a)
      for (int b = 0; b < nf; ++b) {
        jac(a, b) = m.dp_dth(free_nodes[a], free_nodes[b]);
        jac(a, nf + b) = m.dp_dv(free_nodes[a], free_nodes[b]);
        jac(nf + a, b) = m.dq_dth(free_nodes[a], free_nodes[b]);
        jac(nf + a, nf + b) = m.dq_dv(free_nodes[a], free_nodes[b]);
      }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible())
      throw PowerFlowError("singular power flow Jacobian", trace, true);
    Eigen::VectorXd dx = lu.solve(-f);
    for (int a = 0; a < nf; ++a) {
      th(free_nodes[a]) += dx(a);
      v(free_nodes[a]) += dx(nf + a);
      if (v(free_nodes[a]) < 1e-3)
        throw PowerFlowError("voltage collapsed during Newton iteration", trace);
    }
  }

  OperatingPoint op;
  op.u = v.array().square();
  op.theta = th;
  op.residual = mismatch;
  op.iterations = iter;
  linearize(op, c);
  return op;
}

OperatingPoint base_operating_point(const NetworkCase& c, const PowerFlowOptions& opts) {
  const int n = static_cast<int>(c.ac_nodes.size());
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n), q = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    p(i) -= c.ac_nodes[i].p_load;
    q(i) -= c.ac_nodes[i].q_load;
  }
  for (const auto& g : c.generators) p(c.ac_node_index(g.node)) += g.p_max;
  return solve_base_power_flow(c, p, q, 0, 1.0, opts);
}

void linearize(OperatingPoint& op, const NetworkCase& c) {
  for (int k = 0; k < op.u.size(); ++k)
    if (op.u(k) <= 0)
      throw std::invalid_argument("linearization requires strictly positive u");

  auto make = [&](double g, double b, double ui, double uj, double th) {
    BranchLin lin;
    lin.ui_k = ui;
    lin.uj_k = uj;
    lin.theta_k = th;
    double ct = std::cos(th), st = std::sin(th);
    double cc = g * ct + b * st;
    double dd = g * st - b * ct;
    double root = std::sqrt(ui * uj);
    lin.p0 = g * ui - root * cc;
    lin.dp_dui = g - 0.5 * std::sqrt(uj / ui) * cc;
    lin.dp_duj = -0.5 * std::sqrt(ui / uj) * cc;
    lin.dp_dtheta = root * dd;
    lin.q0 = -b * ui - root * dd;
    lin.dq_dui = -b - 0.5 * std::sqrt(uj / ui) * dd;
    lin.dq_duj = -0.5 * std::sqrt(ui / uj) * dd;
    lin.dq_dtheta = -root * cc;
    return lin;
  };

  op.fwd.clear();
  op.rev.clear();
  for (const auto& br : c.ac_branches) {
    int i = c.ac_node_index(br.from);
    int j = c.ac_node_index(br.to);
    op.fwd.push_back(make(br.g, br.b, op.u(i), op.u(j), op.theta(i) - op.theta(j)));
    op.rev.push_back(make(br.g, br.b, op.u(j), op.u(i), op.theta(j) - op.theta(i)));
  }
}

UpdateResult update_operating_point(const NetworkCase& c, const Eigen::VectorXd& p_inj,
                                    const Eigen::VectorXd& q_inj,
                                    const Eigen::VectorXd& u_lin, int slack_index,
                                    double v_slack, const PowerFlowOptions& opts) {
  UpdateResult res;
  res.point = solve_base_power_flow(c, p_inj, q_inj, slack_index, v_slack, opts);
  res.u_nonlinear = res.point.u;
  res.max_u_error = (u_lin - res.point.u).cwiseAbs().maxCoeff();
  return res;
}

} // namespace acdc
