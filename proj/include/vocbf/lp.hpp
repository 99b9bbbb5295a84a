// Phase-one simplex feasibility test for  C x + d >= 0,  lower <= x <= upper.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "vocbf/affine_row.hpp"
#include "vocbf/qp.hpp"

namespace vocbf {

struct LpFeasibility {
  bool feasible = false;
  double infeasibility = 0.0;  // phase-one optimum, sum of artificials on unit-norm rows
  Eigen::VectorXd point;       // witness when feasible
  int pivots = 0;
};

/// Dense tableau simplex with Bland's rule. Rows are scaled to unit norm, the
/// box is shifted to y = x - lower in [0, upper - lower].
inline LpFeasibility lp_phase_one(const Eigen::MatrixXd& C, const Eigen::VectorXd& d,
                                  const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                  double tol = 1e-8) {
  const Eigen::Index n = lower.size();
  const Eigen::Index m = C.rows();
  if (upper.size() != n || d.size() != m || (m > 0 && C.cols() != n)) {
    throw std::invalid_argument("lp_phase_one: dimension mismatch");
  }
  LpFeasibility out;
  const Eigen::VectorXd width = upper - lower;
  if ((width.array() < 0.0).any()) return out;

  // rows: C_i y >= beta_i with beta = -(d + C lower)
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> beta;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double nrm = C.row(i).norm();
    const double rhs = -(d(i) + C.row(i).dot(lower));
    if (!(nrm > 1e-300)) {
      if (rhs > tol) return out;
      continue;
    }
    rows.push_back(C.row(i).transpose() / nrm);
    beta.push_back(rhs / nrm);
  }
  const auto mr = static_cast<Eigen::Index>(rows.size());

  // columns: y (n) | surplus s (mr) | bound slack t (n) | artificial (k)
  std::vector<Eigen::Index> art_row;
  for (Eigen::Index i = 0; i < mr; ++i) {
    if (beta[static_cast<size_t>(i)] > 0.0) art_row.push_back(i);
  }
  const auto k = static_cast<Eigen::Index>(art_row.size());
  const Eigen::Index cols = n + mr + n + k;
  const Eigen::Index nrows = mr + n;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(nrows + 1, cols + 1);  // last row: objective
  std::vector<Eigen::Index> basis(static_cast<size_t>(nrows));

  Eigen::Index art_col = n + mr + n;
  for (Eigen::Index i = 0; i < mr; ++i) {
    const double b = beta[static_cast<size_t>(i)];
    if (b > 0.0) {
      T.row(i).head(n) = rows[static_cast<size_t>(i)].transpose();
      T(i, n + i) = -1.0;
      T(i, art_col) = 1.0;
      T(i, cols) = b;
      basis[static_cast<size_t>(i)] = art_col++;
    } else {
      T.row(i).head(n) = -rows[static_cast<size_t>(i)].transpose();
      T(i, n + i) = 1.0;
      T(i, cols) = -b;
      basis[static_cast<size_t>(i)] = n + i;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index r = mr + j;
    T(r, j) = 1.0;
    T(r, n + mr + j) = 1.0;
    T(r, cols) = width(j);
    basis[static_cast<size_t>(r)] = n + mr + j;
  }
  // objective row: reduced costs of min sum(artificials), expressed in the
  // current basis (subtract the artificial rows)
  for (Eigen::Index idx : art_row) T.row(nrows) -= T.row(idx);
  for (Eigen::Index c = n + mr + n; c < cols; ++c) T(nrows, c) = 0.0;

  const double eps = 1e-12;
  const int max_pivots = static_cast<int>(50 * (nrows + cols) + 100);
  while (out.pivots < max_pivots) {
    Eigen::Index enter = -1;
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (T(nrows, c) < -eps) {
        enter = c;
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < nrows; ++r) {
      if (T(r, enter) > eps) {
        const double ratio = T(r, cols) / T(r, enter);
        if (ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && leave >= 0 &&
             basis[static_cast<size_t>(r)] < basis[static_cast<size_t>(leave)])) {
          best = ratio;
          leave = r;
        }
      }
    }
    if (leave < 0) break;  // unbounded direction cannot occur in phase one
    T.row(leave) /= T(leave, enter);
    for (Eigen::Index r = 0; r <= nrows; ++r) {
      if (r != leave && T(r, enter) != 0.0) T.row(r) -= T(r, enter) * T.row(leave);
    }
    basis[static_cast<size_t>(leave)] = enter;
    ++out.pivots;
  }

  out.infeasibility = std::max(0.0, -T(nrows, cols));
  out.feasible = out.infeasibility <= tol;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (Eigen::Index r = 0; r < nrows; ++r) {
    const Eigen::Index b = basis[static_cast<size_t>(r)];
    if (b < n) y(b) = T(r, cols);
  }
  out.point = (lower + y).cwiseMax(lower).cwiseMin(upper);
  return out;
}

/// Feasibility of hard rows over the input box. Rows must not involve
/// relaxation variables.
inline bool lp_feasible(const RowList& rows, const InputBox& box, double tol = 1e-8) {
  Eigen::MatrixXd C(static_cast<Eigen::Index>(rows.size()), 2);
  Eigen::VectorXd d(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].involves_delta()) throw std::invalid_argument("lp_feasible: relaxed rows are not hard constraints");
    const AffineRow r = rows[i].normalized();
    C.row(static_cast<Eigen::Index>(i)) = r.coeff_u.transpose();
    d(static_cast<Eigen::Index>(i)) = r.constant;
  }
  return lp_phase_one(C, d, box.lower, box.upper, tol).feasible;
}

}  // namespace vocbf
