// Dense strictly convex QP solver (Goldfarb-Idnani dual active set) and the
// controller-level problem built from affine rows.
//
//   minimize   1/2 x' G x + a' x
//   subject to C x + d >= 0
//
// Sized for a handful of variables and a few dozen rows. Rows are scaled to
// unit norm internally; infeasibility is detected when a violated row can be
// neither added nor traded against active rows.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "vocbf/affine_row.hpp"
#include "vocbf/geometry.hpp"

namespace vocbf {

enum class QpStatus { Optimal, Infeasible, IterationLimit };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

struct DenseQpResult {
  QpStatus status = QpStatus::Infeasible;
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // one per row, original scaling
  double objective = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<int> active_set;
};

struct DenseQpOptions {
  double feasibility_tol = 1e-11;  // on unit-norm rows
  int max_iterations = 0;          // 0: automatic
};

inline DenseQpResult solve_dense_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& a,
                                    const Eigen::MatrixXd& C, const Eigen::VectorXd& d,
                                    const DenseQpOptions& opt = {}) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const Eigen::Index n = G.rows();
  const Eigen::Index m = C.rows();
  if (G.cols() != n || a.size() != n || (m > 0 && C.cols() != n) || d.size() != m) {
    throw std::invalid_argument("solve_dense_qp: dimension mismatch");
  }
  Eigen::LLT<MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("solve_dense_qp: G is not positive definite");
  const MatrixXd H = llt.solve(MatrixXd::Identity(n, n));

  DenseQpResult res;
  res.multipliers = VectorXd::Zero(m);

  MatrixXd Cn(m, n);
  VectorXd dn(m);
  VectorXd scale(m);
  std::vector<bool> usable(static_cast<size_t>(m), true);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double nrm = C.row(i).norm();
    scale(i) = nrm;
    if (!(nrm > 1e-300)) {
      usable[static_cast<size_t>(i)] = false;
      if (d(i) < -opt.feasibility_tol) {
        res.status = QpStatus::Infeasible;
        return res;
      }
      Cn.row(i).setZero();
      dn(i) = 0.0;
      continue;
    }
    Cn.row(i) = C.row(i) / nrm;
    dn(i) = d(i) / nrm;
  }

  VectorXd x = -H * a;
  std::vector<int> active;
  std::vector<double> u;
  std::vector<bool> in_active(static_cast<size_t>(m), false);

  const int max_iter = opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(50 + 20 * (m + n));
  int iter = 0;

  auto slack = [&](Eigen::Index i) { return Cn.row(i).dot(x) + dn(i); };

  while (true) {
    // most violated inactive row
    Eigen::Index p = -1;
    double worst = -opt.feasibility_tol;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!usable[static_cast<size_t>(i)] || in_active[static_cast<size_t>(i)]) continue;
      const double s = slack(i);
      if (s < worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) break;

    double u_p = 0.0;
    const VectorXd np = Cn.row(p).transpose();
    while (true) {
      if (++iter > max_iter) {
        res.status = QpStatus::IterationLimit;
        res.x = x;
        res.iterations = iter;
        return res;
      }
      const auto q = static_cast<Eigen::Index>(active.size());
      VectorXd z;
      VectorXd r;
      if (q == 0) {
        z = H * np;
        r.resize(0);
      } else {
        MatrixXd N(n, q);
        for (Eigen::Index j = 0; j < q; ++j) N.col(j) = Cn.row(active[static_cast<size_t>(j)]).transpose();
        const MatrixXd HN = H * N;
        const MatrixXd M = N.transpose() * HN;
        Eigen::LDLT<MatrixXd> ldlt(M);
        r = ldlt.solve(HN.transpose() * np);
        z = H * np - HN * r;
      }

      double t1 = std::numeric_limits<double>::infinity();
      Eigen::Index drop = -1;
      for (Eigen::Index j = 0; j < q; ++j) {
        if (r(j) > 1e-13) {
          const double ratio = u[static_cast<size_t>(j)] / r(j);
          if (ratio < t1) {
            t1 = ratio;
            drop = j;
          }
        }
      }
      // np in the span of the active normals: no primal step exists
      const VectorXd Hnp = H * np;
      if (q >= n || z.norm() <= 1e-9 * Hnp.norm()) z.setZero();
      const double zn = z.dot(np);
      const double t2 = zn > 0.0 ? -slack(p) / zn : std::numeric_limits<double>::infinity();
      const double t = std::min(t1, t2);

      if (!std::isfinite(t)) {
        res.status = QpStatus::Infeasible;
        res.x = x;
        res.iterations = iter;
        return res;
      }
      for (Eigen::Index j = 0; j < q; ++j) u[static_cast<size_t>(j)] -= t * r(j);
      u_p += t;
      if (std::isfinite(t2)) x += t * z;

      if (std::isfinite(t2) && t2 <= t1) {
        active.push_back(static_cast<int>(p));
        u.push_back(u_p);
        in_active[static_cast<size_t>(p)] = true;
        break;
      }
      in_active[static_cast<size_t>(active[static_cast<size_t>(drop)])] = false;
      active.erase(active.begin() + drop);
      u.erase(u.begin() + drop);
    }
  }

  res.status = QpStatus::Optimal;
  res.x = x;
  res.iterations = iter;
  res.active_set = active;
  for (size_t j = 0; j < active.size(); ++j) {
    res.multipliers(active[j]) = std::max(0.0, u[j]) / scale(active[j]);
  }
  res.objective = 0.5 * x.dot(G * x) + a.dot(x);
  return res;
}

// ---------------------------------------------------------------------------
// Controller QP over (a, alpha, delta_d, delta_theta, delta_v, delta_omega).

struct CostWeights {
  Eigen::Matrix2d H = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d R = 0.5 * Eigen::Matrix2d::Identity();
  Vec4 P = (Vec4() << 100.0, 100.0, 1.0, 1.0).finished();

  void validate() const {
    // 2x2 symmetric: definiteness from trace and determinant
    const auto sym = [](const Eigen::Matrix2d& m) { return std::abs(m(0, 1) - m(1, 0)) <= 1e-12; };
    if (!sym(H) || !(H.trace() > 0.0 && H.determinant() > 0.0)) {
      throw std::invalid_argument("cost weights: H must be symmetric positive definite");
    }
    if (!sym(R) || R.trace() < -1e-12 || R.determinant() < -1e-12 || R(0, 0) < -1e-12 || R(1, 1) < -1e-12) {
      throw std::invalid_argument("cost weights: R must be symmetric positive semidefinite");
    }
    if (!(P.minCoeff() > 0.0)) throw std::invalid_argument("cost weights: P must be positive");
  }
};

struct InputBox {
  Vec2 lower = Vec2::Constant(-1.0);
  Vec2 upper = Vec2::Constant(1.0);

  bool contains(const Vec2& u, double tol = 0.0) const {
    return (u.array() >= lower.array() - tol).all() && (u.array() <= upper.array() + tol).all();
  }
  Vec2 clamp(const Vec2& u) const { return u.cwiseMax(lower).cwiseMin(upper); }
};

/// Input box: magnitude limits intersected with the per-step rate limits.
inline InputBox input_box(const Limits& lim, const ControlInput& u_pre, double dt) {
  InputBox b;
  b.lower = Vec2(std::max(-lim.a_max, u_pre.a - lim.delta_a_max * dt),
                 std::max(-lim.alpha_max, u_pre.alpha - lim.delta_alpha_max * dt));
  b.upper = Vec2(std::min(lim.a_max, u_pre.a + lim.delta_a_max * dt),
                 std::min(lim.alpha_max, u_pre.alpha + lim.delta_alpha_max * dt));
  // a previous input outside the magnitude box leaves an empty intersection;
  // fall back to the nearest edge of the magnitude box
  for (int i = 0; i < 2; ++i) {
    if (b.lower(i) > b.upper(i)) {
      const double lim_i = i == 0 ? lim.a_max : lim.alpha_max;
      const double edge = std::clamp(i == 0 ? u_pre.a : u_pre.alpha, -lim_i, lim_i);
      b.lower(i) = b.upper(i) = edge;
    }
  }
  return b;
}

struct QpProblem {
  CostWeights weights;
  ControlInput u_pre;
  InputBox box;
  RowList rows;

  void validate() const {
    weights.validate();
    if (!((box.lower.array() <= box.upper.array()).all())) {
      throw std::invalid_argument("qp problem: inconsistent input box");
    }
  }

  double objective(const Vec2& u, const Vec4& delta) const {
    const Vec2 du = u - u_pre.vec();
    return 0.5 * u.dot(weights.H * u) + 0.5 * du.dot(weights.R * du) + delta.dot(weights.P.asDiagonal() * delta);
  }
};

struct QpSolution {
  ControlInput u;
  Vec4 delta = Vec4::Zero();
  double objective = std::numeric_limits<double>::infinity();
  QpStatus status = QpStatus::Infeasible;

  bool optimal() const { return status == QpStatus::Optimal; }
};

/// Rows that do not involve relaxation variables.
inline RowList hard_rows(const RowList& rows) {
  RowList out;
  for (const auto& r : rows) {
    if (!r.involves_delta()) out.push_back(r);
  }
  return out;
}

inline QpSolution solve_qp(const QpProblem& p, const RowList& extra_rows = {}) {
  p.validate();
  const auto total = static_cast<Eigen::Index>(p.rows.size() + extra_rows.size() + 4);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(kNumVars, kNumVars);
  G.topLeftCorner<2, 2>() = p.weights.H + p.weights.R;
  G.bottomRightCorner<4, 4>() = 2.0 * p.weights.P.asDiagonal();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(kNumVars);
  a.head<2>() = -p.weights.R * p.u_pre.vec();

  Eigen::MatrixXd C(total, kNumVars);
  Eigen::VectorXd d(total);
  Eigen::Index k = 0;
  for (const RowList* list : {&p.rows, &extra_rows}) {
    for (const auto& r : *list) {
      C.row(k) = r.stacked_coeffs().transpose();
      d(k) = r.ge_constant();
      ++k;
    }
  }
  for (int i = 0; i < 2; ++i) {
    C.row(k).setZero();
    C(k, i) = 1.0;
    d(k) = -p.box.lower(i);
    ++k;
    C.row(k).setZero();
    C(k, i) = -1.0;
    d(k) = p.box.upper(i);
    ++k;
  }

  const DenseQpResult r = solve_dense_qp(G, a, C, d);
  QpSolution sol;
  sol.status = r.status;
  if (r.status != QpStatus::Optimal) return sol;
  const Vec2 u = p.box.clamp(r.x.head<2>());
  sol.u = ControlInput::from(u);
  sol.delta = r.x.tail<4>();
  sol.objective = p.objective(u, sol.delta);
  return sol;
}

}  // namespace vocbf
