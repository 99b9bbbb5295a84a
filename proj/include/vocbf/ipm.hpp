// Mehrotra predictor-corrector interior point method for convex QPs with a
// positive semidefinite Hessian:
//
//   minimize   1/2 x' Q x + c' x
//   subject to A x + d >= 0
//
// Used for branch-and-bound relaxations, where the binary selectors carry no
// cost and the Goldfarb-Idnani method (which needs Q > 0) does not apply.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace vocbf {

struct IpmOptions {
  int max_iterations = 80;
  double tol = 1e-10;
};

struct IpmResult {
  bool converged = false;
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  double objective = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

inline IpmResult solve_ipm_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                              const Eigen::VectorXd& d, const IpmOptions& opt = {}) {
  using Eigen::VectorXd;
  const Eigen::Index n = Q.rows();
  const Eigen::Index m = A.rows();
  if (Q.cols() != n || c.size() != n || A.cols() != n || d.size() != m) {
    throw std::invalid_argument("solve_ipm_qp: dimension mismatch");
  }
  IpmResult res;
  VectorXd x = VectorXd::Zero(n);
  VectorXd s = (A * x + d).cwiseMax(1.0);
  VectorXd lam = VectorXd::Ones(m);

  const double scale_c = 1.0 + c.lpNorm<Eigen::Infinity>();
  const double scale_d = 1.0 + d.lpNorm<Eigen::Infinity>();

  auto max_step = [](const VectorXd& v, const VectorXd& dv) {
    double a = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
    }
    return a;
  };

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    const VectorXd rd = Q * x + c - A.transpose() * lam;
    const VectorXd rp = A * x + d - s;
    const double mu = m > 0 ? s.dot(lam) / static_cast<double>(m) : 0.0;
    if (rd.lpNorm<Eigen::Infinity>() <= opt.tol * scale_c && rp.lpNorm<Eigen::Infinity>() <= opt.tol * scale_d &&
        mu <= opt.tol) {
      res.converged = true;
      break;
    }

    const VectorXd D = lam.cwiseQuotient(s);
    Eigen::MatrixXd K = Q + A.transpose() * D.asDiagonal() * A;
    K.diagonal().array() += 1e-13;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(K);

    auto direction = [&](const VectorXd& rc, VectorXd& dx, VectorXd& ds, VectorXd& dl) {
      const VectorXd rhs = -rd - A.transpose() * (rc.cwiseQuotient(s) + D.cwiseProduct(rp));
      dx = ldlt.solve(rhs);
      ds = A * dx + rp;
      dl = -rc.cwiseQuotient(s) - D.cwiseProduct(ds);
    };

    VectorXd dx, ds, dl;
    const VectorXd rc_aff = s.cwiseProduct(lam);
    direction(rc_aff, dx, ds, dl);
    const double a_aff = std::min(max_step(s, ds), max_step(lam, dl));
    const double mu_aff = (s + a_aff * ds).dot(lam + a_aff * dl) / static_cast<double>(std::max<Eigen::Index>(m, 1));
    const double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3) : 0.0;

    const VectorXd rc = rc_aff + ds.cwiseProduct(dl) - VectorXd::Constant(m, sigma * mu);
    direction(rc, dx, ds, dl);
    const double a = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(lam, dl)));
    x += a * dx;
    s += a * ds;
    lam += a * dl;
    if (!x.allFinite() || !lam.allFinite()) break;
  }
  res.x = x;
  res.lambda = lam;
  res.objective = 0.5 * x.dot(Q * x) + c.dot(x);
  return res;
}

}  // namespace vocbf
