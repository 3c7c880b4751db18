#include "acdcopf/ipm_solver.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstdio>
#include <limits>

namespace acdc {

namespace {

constexpr double kBigStep = 1e10;

// Cone bookkeeping and Nesterov-Todd scaling for R+^l x SOC(d1) x ...
struct ConeOps {
  int l = 0;
  std::vector<int> dims, offs;
  int m = 0;
  int degree = 0;

  Eigen::VectorXd w_orth; // sqrt(s_i/z_i)
  struct SocScale {
    double eta = 1.0;
    Eigen::VectorXd wbar;
  };
  std::vector<SocScale> soc;
  Eigen::VectorXd lambda;

  void init(int n_orthant, const std::vector<int>& soc_dims) {
    l = n_orthant;
    dims = soc_dims;
    offs.clear();
    int off = l;
    for (int d : dims) {
      offs.push_back(off);
      off += d;
    }
    m = off;
    degree = l + static_cast<int>(dims.size());
    soc.resize(dims.size());
  }

  Eigen::VectorXd identity() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e.head(l).setOnes();
    for (size_t k = 0; k < dims.size(); ++k) e(offs[k]) = 1.0;
    return e;
  }

  static double jdot(const Eigen::Ref<const Eigen::VectorXd>& a,
                     const Eigen::Ref<const Eigen::VectorXd>& b) {
    return a(0) * b(0) - a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
  }

  // Positive margin means strictly inside the cone.
  double margin(const Eigen::VectorXd& v) const {
    double mrg = std::numeric_limits<double>::infinity();
    for (int i = 0; i < l; ++i) mrg = std::min(mrg, v(i));
    for (size_t k = 0; k < dims.size(); ++k) {
      auto vk = v.segment(offs[k], dims[k]);
      mrg = std::min(mrg, vk(0) - vk.tail(dims[k] - 1).norm());
    }
    return mrg;
  }

  bool compute_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
    lambda.resize(m);
    w_orth.resize(l);
    for (int i = 0; i < l; ++i) {
      if (s(i) <= 0 || z(i) <= 0) return false;
      w_orth(i) = std::sqrt(s(i) / z(i));
      lambda(i) = std::sqrt(s(i) * z(i));
    }
    for (size_t k = 0; k < dims.size(); ++k) {
      int d = dims[k];
      auto sk = s.segment(offs[k], d);
      auto zk = z.segment(offs[k], d);
      double sj = jdot(sk, sk), zj = jdot(zk, zk);
      if (sj <= 0 || zj <= 0 || sk(0) <= 0 || zk(0) <= 0) return false;
      double snorm = std::sqrt(sj), znorm = std::sqrt(zj);
      Eigen::VectorXd sb = sk / snorm, zb = zk / znorm;
      double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
      Eigen::VectorXd wb(d);
      wb(0) = (sb(0) + zb(0)) / (2 * gamma);
      wb.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2 * gamma);
      soc[k].eta = std::sqrt(snorm / znorm);
      soc[k].wbar = wb;
      // lambda = W z
      lambda.segment(offs[k], d) = mult_wbar(wb, zk) * soc[k].eta;
    }
    return true;
  }

  static Eigen::VectorXd mult_wbar(const Eigen::VectorXd& wb, const Eigen::Ref<const Eigen::VectorXd>& v) {
    int d = static_cast<int>(wb.size());
    Eigen::VectorXd r(d);
    double a = wb.tail(d - 1).dot(v.tail(d - 1));
    r(0) = wb(0) * v(0) + a;
    r.tail(d - 1) = v.tail(d - 1) + (v(0) + a / (1.0 + wb(0))) * wb.tail(d - 1);
    return r;
  }

  static Eigen::VectorXd mult_wbar_inv(const Eigen::VectorXd& wb, const Eigen::Ref<const Eigen::VectorXd>& v) {
    int d = static_cast<int>(wb.size());
    Eigen::VectorXd r(d);
    double a = wb.tail(d - 1).dot(v.tail(d - 1));
    r(0) = wb(0) * v(0) - a;
    r.tail(d - 1) = v.tail(d - 1) + (-v(0) + a / (1.0 + wb(0))) * wb.tail(d - 1);
    return r;
  }

  Eigen::VectorXd mult_W(const Eigen::VectorXd& v) const {
    Eigen::VectorXd r(m);
    r.head(l) = w_orth.cwiseProduct(v.head(l));
    for (size_t k = 0; k < dims.size(); ++k)
      r.segment(offs[k], dims[k]) =
          soc[k].eta * mult_wbar(soc[k].wbar, v.segment(offs[k], dims[k]));
    return r;
  }

  Eigen::VectorXd mult_Winv(const Eigen::VectorXd& v) const {
    Eigen::VectorXd r(m);
    r.head(l) = v.head(l).cwiseQuotient(w_orth);
    for (size_t k = 0; k < dims.size(); ++k)
      r.segment(offs[k], dims[k]) =
          mult_wbar_inv(soc[k].wbar, v.segment(offs[k], dims[k])) / soc[k].eta;
    return r;
  }

  Eigen::VectorXd mult_W2(const Eigen::VectorXd& v) const { return mult_W(mult_W(v)); }

  // Jordan product u o v per cone.
  Eigen::VectorXd prod(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd r(m);
    r.head(l) = u.head(l).cwiseProduct(v.head(l));
    for (size_t k = 0; k < dims.size(); ++k) {
      int d = dims[k];
      auto uk = u.segment(offs[k], d);
      auto vk = v.segment(offs[k], d);
      r(offs[k]) = uk.dot(vk);
      r.segment(offs[k] + 1, d - 1) = uk(0) * vk.tail(d - 1) + vk(0) * uk.tail(d - 1);
    }
    return r;
  }

  // Solves lambda o u = v.
  Eigen::VectorXd solve_prod(const Eigen::VectorXd& v) const {
    Eigen::VectorXd r(m);
    r.head(l) = v.head(l).cwiseQuotient(lambda.head(l));
    for (size_t k = 0; k < dims.size(); ++k) {
      int d = dims[k];
      auto lk = lambda.segment(offs[k], d);
      auto vk = v.segment(offs[k], d);
      double l0 = lk(0);
      double det = l0 * l0 - lk.tail(d - 1).squaredNorm();
      double u0 = (l0 * vk(0) - lk.tail(d - 1).dot(vk.tail(d - 1))) / det;
      r(offs[k]) = u0;
      r.segment(offs[k] + 1, d - 1) = (vk.tail(d - 1) - u0 * lk.tail(d - 1)) / l0;
    }
    return r;
  }

  // Largest step with v + alpha * dv staying in the cone.
  double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) const {
    double alpha = kBigStep;
    for (int i = 0; i < l; ++i)
      if (dv(i) < 0) alpha = std::min(alpha, -v(i) / dv(i));
    for (size_t k = 0; k < dims.size(); ++k) {
      int d = dims[k];
      auto vk = v.segment(offs[k], d);
      auto dk = dv.segment(offs[k], d);
      double a = jdot(dk, dk);
      double b = 2.0 * jdot(vk, dk);
      double c = jdot(vk, vk);
      // smallest positive root of a t^2 + b t + c = 0, with c > 0 inside
      double root = kBigStep;
      double disc = b * b - 4 * a * c;
      if (std::abs(a) < 1e-14) {
        if (b < 0) root = -c / b;
      } else if (disc >= 0) {
        double sq = std::sqrt(disc);
        double r1 = (-b - sq) / (2 * a);
        double r2 = (-b + sq) / (2 * a);
        if (r1 > r2) std::swap(r1, r2);
        if (r1 > 0)
          root = r1;
        else if (r2 > 0)
          root = r2;
      }
      if (dk(0) < 0) root = std::min(root, -vk(0) / dk(0));
      alpha = std::min(alpha, root);
    }
    return alpha;
  }
};

// Sparse LDLT of the regularized KKT matrix
//   [ dI   A'   G' ]
//   [ A   -dI   0  ]
//   [ G    0  -W^2 - dI ]
// with iterative refinement against the unregularized operator.
struct KktSolver {
  const StandardConic& sf;
  const ConeOps& cones;
  double reg;
  int refinement;
  int n, p, m, N;
  Eigen::SparseMatrix<double> K;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
  bool analyzed = false;

  KktSolver(const StandardConic& s, const ConeOps& c, double regularization, int refine)
      : sf(s), cones(c), reg(regularization), refinement(refine) {
    n = sf.n;
    p = static_cast<int>(sf.b.size());
    m = cones.m;
    N = n + p + m;
  }

  bool factor() {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(sf.A.nonZeros() + sf.G.nonZeros() + N + 16 * cones.dims.size() + m);
    for (int i = 0; i < n; ++i) t.emplace_back(i, i, reg);
    for (int k = 0; k < sf.A.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf.A, k); it; ++it)
        t.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()),
                       it.value());
    for (int i = 0; i < p; ++i) t.emplace_back(n + i, n + i, -reg);
    for (int k = 0; k < sf.G.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf.G, k); it; ++it)
        t.emplace_back(n + p + static_cast<int>(it.row()), static_cast<int>(it.col()),
                       it.value());
    // -W^2 blocks: diagonal for the orthant, dense per SOC cone
    for (int i = 0; i < cones.l; ++i) {
      double w = cones.w_orth(i);
      t.emplace_back(n + p + i, n + p + i, -w * w - reg);
    }
    for (size_t k = 0; k < cones.dims.size(); ++k) {
      int d = cones.dims[k];
      int off = n + p + cones.offs[k];
      const Eigen::VectorXd& wb = cones.soc[k].wbar;
      double e2 = cones.soc[k].eta * cones.soc[k].eta;
      // W^2 = eta^2 (2 wbar wbar' - J)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) {
          double v = 2.0 * wb(i) * wb(j);
          if (i == j) v -= (i == 0 ? 1.0 : -1.0);
          t.emplace_back(off + i, off + j, -e2 * v - (i == j ? reg : 0.0));
        }
    }
    K.resize(N, N);
    K.setFromTriplets(t.begin(), t.end(), [](double a, double b) { return a + b; });
    if (!analyzed) {
      ldlt.analyzePattern(K);
      analyzed = true;
    }
    ldlt.factorize(K);
    return ldlt.info() == Eigen::Success;
  }

  // Unregularized KKT operator.
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const {
    Eigen::VectorXd r(N);
    auto ux = u.head(n);
    auto uy = u.segment(n, p);
    auto uz = u.tail(m);
    r.head(n) = sf.A.transpose() * uy + sf.G.transpose() * uz;
    r.segment(n, p) = sf.A * ux;
    r.tail(m) = sf.G * ux - cones.mult_W2(uz);
    return r;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd u = ldlt.solve(rhs);
    for (int it = 0; it < refinement; ++it) {
      Eigen::VectorXd resid = rhs - apply(u);
      u += ldlt.solve(resid);
    }
    return u;
  }
};

} // namespace

IpmResult solve_standard_conic(const StandardConic& sf, const IpmOptions& opts) {
  IpmResult res;
  const int n = sf.n;
  const int p = static_cast<int>(sf.b.size());

  ConeOps cones;
  cones.init(sf.n_orthant, sf.soc_dims);
  const int m = cones.m;
  if (m != sf.G.rows()) throw std::logic_error("cone dims do not match G");

  const double norm_b = std::max(1.0, sf.b.norm());
  const double norm_h = std::max(1.0, sf.h.norm());
  const double norm_c = std::max(1.0, sf.c.norm());

  // Initial point: least-squares-style primal/dual candidates shifted into
  // the cone interior (identity scaling).
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd z, s;
  {
    cones.w_orth = Eigen::VectorXd::Ones(cones.l);
    for (size_t k = 0; k < cones.dims.size(); ++k) {
      cones.soc[k].eta = 1.0;
      cones.soc[k].wbar = Eigen::VectorXd::Zero(cones.dims[k]);
      cones.soc[k].wbar(0) = 1.0;
    }
    KktSolver kkt(sf, cones, opts.static_reg, opts.refinement_steps);
    if (!kkt.factor()) {
      res.status = SolveStatus::NumericalError;
      return res;
    }
    Eigen::VectorXd rhs(kkt.N);
    rhs.setZero();
    rhs.segment(n, p) = sf.b;
    rhs.tail(m) = sf.h;
    Eigen::VectorXd u = kkt.solve(rhs);
    x = u.head(n);
    Eigen::VectorXd s_tilde = -u.tail(m); // G x - u3 = h  =>  s = -u3
    double viol = -cones.margin(s_tilde);
    s = (viol < 0) ? s_tilde : (s_tilde + (1.0 + viol) * cones.identity()).eval();

    rhs.setZero();
    rhs.head(n) = -sf.c;
    u = kkt.solve(rhs);
    y = u.segment(n, p);
    Eigen::VectorXd z_tilde = u.tail(m);
    viol = -cones.margin(z_tilde);
    z = (viol < 0) ? z_tilde : (z_tilde + (1.0 + viol) * cones.identity()).eval();
  }
  double tau = 1.0, kappa = 1.0;

  double best_inacc = std::numeric_limits<double>::infinity();
  IpmResult best;

  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    // Violations of the self-dual equalities.
    Eigen::VectorXd E1 = sf.A.transpose() * y + sf.G.transpose() * z + sf.c * tau;
    Eigen::VectorXd E2 = -sf.A * x + sf.b * tau;
    Eigen::VectorXd E3 = -sf.G * x + sf.h * tau - s;
    double E4 = -sf.c.dot(x) - sf.b.dot(y) - sf.h.dot(z) - kappa;

    double pcost = sf.c.dot(x) / tau;
    double dcost = -(sf.b.dot(y) + sf.h.dot(z)) / tau;
    double pres = std::max((sf.A * x / tau - sf.b).norm() / norm_b,
                           (sf.G * x / tau + s / tau - sf.h).norm() / norm_h);
    double dres = E1.norm() / tau / norm_c;
    double gap_abs = s.dot(z) / (tau * tau);
    double relgap = gap_abs / std::max(1.0, std::abs(pcost));

    res.pobj = pcost;
    res.dobj = dcost;
    res.pres = pres;
    res.dres = dres;
    res.gap = gap_abs;
    res.iterations = iter;

    if (opts.verbose)
      std::printf("it %3d  pcost % .6e  dcost % .6e  pres %.2e  dres %.2e  gap %.2e  "
                  "tau %.2e  kap %.2e\n",
                  iter, pcost, dcost, pres, dres, gap_abs, tau, kappa);

    if (pres <= opts.feastol && dres <= opts.feastol &&
        (gap_abs <= opts.abstol || relgap <= opts.reltol)) {
      res.status = SolveStatus::Optimal;
      res.x = x / tau;
      res.y = y / tau;
      res.z = z / tau;
      res.s = s / tau;
      return res;
    }

    // Infeasibility certificates.
    double by_hz = sf.b.dot(y) + sf.h.dot(z);
    if (by_hz < 0) {
      double cert = (sf.A.transpose() * y + sf.G.transpose() * z).norm() / norm_c / (-by_hz);
      if (cert <= opts.feastol) {
        res.status = SolveStatus::Infeasible;
        res.y = y / (-by_hz);
        res.z = z / (-by_hz);
        return res;
      }
    }
    double cx = sf.c.dot(x);
    if (cx < 0) {
      double cert = std::max((sf.A * x).norm() / norm_b, (sf.G * x + s).norm() / norm_h) /
                    (-cx);
      if (cert <= opts.feastol) {
        res.status = SolveStatus::Unbounded;
        res.x = x / (-cx);
        res.s = s / (-cx);
        return res;
      }
    }

    // Track the best near-feasible iterate for the inaccurate fallback.
    double inacc = std::max({pres, dres, relgap});
    if (inacc < best_inacc) {
      best_inacc = inacc;
      best = res;
      best.x = x / tau;
      best.y = y / tau;
      best.z = z / tau;
      best.s = s / tau;
    }

    if (iter == opts.max_iter) break;

    if (!cones.compute_scaling(s, z)) break;
    // retry a failed factorization with escalating regularization
    double reg = opts.static_reg;
    KktSolver kkt(sf, cones, reg, opts.refinement_steps);
    while (!kkt.factor() && reg < 1e-4) {
      reg *= 100.0;
      kkt.reg = reg;
    }
    if (kkt.ldlt.info() != Eigen::Success) break;

    double mu = (s.dot(z) + tau * kappa) / (cones.degree + 1);

    Eigen::VectorXd rhs_c(kkt.N);
    rhs_c.head(n) = -sf.c;
    rhs_c.segment(n, p) = sf.b;
    rhs_c.tail(m) = sf.h;
    Eigen::VectorXd u_c = kkt.solve(rhs_c);
    double chu_c = sf.c.dot(u_c.head(n)) + sf.b.dot(u_c.segment(n, p)) +
                   sf.h.dot(u_c.tail(m));

    Eigen::VectorXd lam2 = cones.prod(cones.lambda, cones.lambda);

    auto direction = [&](double sigma, const Eigen::VectorXd& ds_target, double dk_target,
                         Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& dz,
                         Eigen::VectorXd& ds, double& dtau, double& dkappa) {
      double rf = 1.0 - sigma;
      Eigen::VectorXd bx0 = -rf * E1;
      Eigen::VectorXd by0 = -rf * E2;
      Eigen::VectorXd bz0 = -rf * E3;
      double bt0 = -rf * E4;

      Eigen::VectorXd dtil = cones.solve_prod(ds_target);
      Eigen::VectorXd rhs(kkt.N);
      rhs.head(n) = bx0;
      rhs.segment(n, p) = -by0;
      rhs.tail(m) = -bz0 - cones.mult_W(dtil);
      Eigen::VectorXd u_r = kkt.solve(rhs);
      double chu_r = sf.c.dot(u_r.head(n)) + sf.b.dot(u_r.segment(n, p)) +
                     sf.h.dot(u_r.tail(m));

      double denom = kappa / tau - chu_c;
      dtau = (bt0 + dk_target / tau + chu_r) / denom;
      dx = u_r.head(n) + dtau * u_c.head(n);
      dy = u_r.segment(n, p) + dtau * u_c.segment(n, p);
      dz = u_r.tail(m) + dtau * u_c.tail(m);
      ds = cones.mult_W(dtil - cones.mult_W(dz));
      dkappa = (dk_target - kappa * dtau) / tau;
    };

    Eigen::VectorXd dx, dy, dz, ds;
    double dtau, dkappa;
    direction(0.0, -lam2, -tau * kappa, dx, dy, dz, ds, dtau, dkappa);

    double alpha = std::min(cones.max_step(s, ds), cones.max_step(z, dz));
    if (dtau < 0) alpha = std::min(alpha, -tau / dtau);
    if (dkappa < 0) alpha = std::min(alpha, -kappa / dkappa);
    alpha = std::min(alpha, 1.0);
    double sigma = std::pow(1.0 - alpha, 3);
    sigma = std::min(1.0, std::max(0.0, sigma));

    // Mehrotra correction in the scaled space.
    Eigen::VectorXd corr = cones.prod(cones.mult_Winv(ds), cones.mult_W(dz));
    Eigen::VectorXd ds_target = -lam2 - corr + sigma * mu * cones.identity();
    double dk_target = -tau * kappa - dtau * dkappa + sigma * mu;
    direction(sigma, ds_target, dk_target, dx, dy, dz, ds, dtau, dkappa);

    alpha = std::min(cones.max_step(s, ds), cones.max_step(z, dz));
    if (dtau < 0) alpha = std::min(alpha, -tau / dtau);
    if (dkappa < 0) alpha = std::min(alpha, -kappa / dkappa);
    alpha = std::min(0.99 * alpha, 1.0);
    if (!std::isfinite(alpha) || alpha <= 1e-14) break;

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
    if (tau <= 0 || kappa < 0) break;
  }

  // Inaccurate acceptance: good enough for downstream use, flagged by the
  // looser tolerance.
  if (best_inacc <= opts.feastol_inacc) {
    res = best;
    res.status = SolveStatus::Optimal;
    return res;
  }
  res.status = SolveStatus::NumericalError;
  return res;
}

Solution solve_continuous(const ConicProgram& prog, const IpmOptions& opts) {
  StandardConic sf = to_standard_form(prog);
  IpmResult ipm = solve_standard_conic(sf, opts);

  Solution sol;
  sol.status = ipm.status;
  sol.ipm_iterations = ipm.iterations;
  if (ipm.status != SolveStatus::Optimal) return sol;

  sol.x = ipm.x;
  sol.objective = ipm.pobj + sf.obj_constant;
  sol.dual_objective = ipm.dobj + sf.obj_constant;
  sol.primal_residual = ipm.pres;
  sol.duality_gap = ipm.gap;

  // Map standard-form duals back onto labeled blocks; see the sign contract
  // in the header.
  for (size_t i = 0; i < prog.lin.size(); ++i) {
    const auto& lc = prog.lin[i];
    if (lc.sense == LinSense::Eq)
      sol.duals[lc.label].push_back(-ipm.y(sf.eq_rows[i]));
    else
      sol.duals[lc.label].push_back(ipm.z(sf.ineq_rows[i]));
  }
  for (size_t i = 0; i < prog.socs.size(); ++i) {
    int first = sf.soc_first_row[i];
    for (size_t k = 0; k < prog.socs[i].entries.size(); ++k)
      sol.duals[prog.socs[i].label].push_back(ipm.z(first + static_cast<int>(k)));
  }
  for (size_t i = 0; i < prog.rotated.size(); ++i) {
    int first = sf.rotated_first_row[i];
    for (int k = 0; k < 3; ++k)
      sol.duals[prog.rotated[i].label].push_back(ipm.z(first + k));
  }

  sol.max_cone_violation = 0.0;
  for (const auto& cs : check_cone_residuals(sol.x, prog).slacks)
    sol.max_cone_violation = std::max(sol.max_cone_violation, -cs.slack);
  return sol;
}

} // namespace acdc
