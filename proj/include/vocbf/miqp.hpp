// Disjunctive obstacle constraints: exactly-one-side-or-both selection per
// obstacle, solved either as a big-M MIQP by branch and bound or by
// enumerating all 3^M side assignments.
#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "vocbf/affine_row.hpp"
#include "vocbf/cbf.hpp"
#include "vocbf/ipm.hpp"
#include "vocbf/lp.hpp"
#include "vocbf/qp.hpp"

namespace vocbf {

enum class Direction : int { Left = 0, Right = 1, Backward = 2 };

inline const char* to_string(Direction d) {
  switch (d) {
    case Direction::Left: return "left";
    case Direction::Right: return "right";
    case Direction::Backward: return "backward";
  }
  return "unknown";
}

using DirectionAssignment = std::vector<Direction>;

/// The two VO rows of one obstacle. Left keeps row 1, Right row 2, Backward both.
struct DisjunctivePair {
  AffineRow left;
  AffineRow right;

  static DisjunctivePair from(const PairRows& p) { return {p.rows[0], p.rows[1]}; }

  RowList rows_for(Direction d) const {
    switch (d) {
      case Direction::Left: return {left};
      case Direction::Right: return {right};
      case Direction::Backward: return {left, right};
    }
    return {};
  }
};

struct SolverStats {
  int qps = 0;      // continuous QPs solved
  int lps = 0;      // feasibility LPs solved
  int skipped = 0;  // sub-problems rejected by the LP prescreen
  int nodes = 0;    // branch-and-bound nodes
};

struct DisjunctiveResult {
  QpSolution solution;
  DirectionAssignment assignment;
  SolverStats stats;

  bool optimal() const { return solution.optimal(); }
};

inline RowList assignment_rows(const std::vector<DisjunctivePair>& pairs, const DirectionAssignment& a) {
  if (a.size() != pairs.size()) throw std::invalid_argument("assignment size does not match obstacle count");
  RowList out;
  for (size_t j = 0; j < pairs.size(); ++j) {
    const RowList r = pairs[j].rows_for(a[j]);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

/// Assignment for enumeration index `idx`; obstacle 0 is the most significant
/// base-3 digit.
inline DirectionAssignment decode_assignment(std::uint64_t idx, size_t m) {
  DirectionAssignment a(m, Direction::Left);
  for (size_t j = m; j-- > 0;) {
    a[j] = static_cast<Direction>(idx % 3);
    idx /= 3;
  }
  return a;
}

/// Solves the QP with the rows of one fixed assignment added as hard rows.
inline DisjunctiveResult solve_assignment(const QpProblem& base, const std::vector<DisjunctivePair>& pairs,
                                          const DirectionAssignment& a) {
  DisjunctiveResult r;
  r.assignment = a;
  r.solution = solve_qp(base, assignment_rows(pairs, a));
  r.stats.qps = 1;
  return r;
}

inline constexpr size_t kDefaultMaxObstacles = 6;

inline bool better_objective(double candidate, double best) {
  return candidate < best - 1e-9 * std::max(1.0, std::abs(best));
}

inline DisjunctiveResult enumerate_subqps(const QpProblem& base, const std::vector<DisjunctivePair>& pairs,
                                          bool use_lp_prescreen, size_t max_obstacles = kDefaultMaxObstacles) {
  const size_t m = pairs.size();
  if (m > max_obstacles) throw std::invalid_argument("enumerate_subqps: too many obstacles for enumeration");
  std::uint64_t count = 1;
  for (size_t j = 0; j < m; ++j) count *= 3;

  const RowList base_hard = hard_rows(base.rows);
  DisjunctiveResult best;
  best.assignment = decode_assignment(0, m);
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    const DirectionAssignment a = decode_assignment(idx, m);
    const RowList extra = assignment_rows(pairs, a);
    if (use_lp_prescreen) {
      RowList hard = base_hard;
      hard.insert(hard.end(), extra.begin(), extra.end());
      ++best.stats.lps;
      if (!lp_feasible(hard, base.box)) {
        ++best.stats.skipped;
        continue;
      }
    }
    const QpSolution sol = solve_qp(base, extra);
    ++best.stats.qps;
    if (!sol.optimal()) continue;
    if (!best.solution.optimal() || better_objective(sol.objective, best.solution.objective)) {
      best.solution = sol;
      best.assignment = a;
    }
  }
  return best;
}

struct MiqpOptions {
  double big_m_factor = 1e4;
  double side_tol = 1e-7;  // a side counts as satisfied at the relaxation point
  int max_nodes = 10000;
};

namespace detail {

enum class PairFix : int { Free = 0, Left = 1, Right = 2 };

struct BbNode {
  std::vector<PairFix> fix;
  double bound = -std::numeric_limits<double>::infinity();
  std::uint64_t order = 0;
};

struct BbNodeCompare {
  bool operator()(const BbNode& a, const BbNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.order > b.order;
  }
};

}  // namespace detail

/// Big-M MIQP over binary selectors z_{j,1}, z_{j,2} with z_{j,1} + z_{j,2} >= 1.
/// Each VO row enters as  row / G + 1 - z >= 0  on unit-norm rows. Best-first
/// branch and bound; node relaxations are screened by a phase-one LP and then
/// solved by an interior point method over (u, delta, z). Integral nodes are
/// polished by the active-set QP with the selected rows made hard.
inline DisjunctiveResult solve_miqp(const QpProblem& base, const std::vector<DisjunctivePair>& pairs,
                                    const MiqpOptions& opt = {}) {
  using detail::PairFix;
  base.validate();
  const size_t m = pairs.size();
  DisjunctiveResult best;
  best.assignment = DirectionAssignment(m, Direction::Left);
  if (m == 0) {
    best.solution = solve_qp(base);
    best.stats.qps = 1;
    return best;
  }

  std::vector<std::array<AffineRow, 2>> unit(m);
  const double u_reach = std::max(base.box.lower.cwiseAbs().maxCoeff(), base.box.upper.cwiseAbs().maxCoeff());
  double scale = 1.0;
  for (size_t j = 0; j < m; ++j) {
    for (int k = 0; k < 2; ++k) {
      AffineRow r = (k == 0 ? pairs[j].left : pairs[j].right).normalized();
      const double nrm = r.coeff_u.norm();
      if (nrm > 1e-300) {
        r.coeff_u /= nrm;
        r.constant /= nrm;
      }
      scale = std::max(scale, std::abs(r.constant) + std::sqrt(2.0) * u_reach);
      unit[j][static_cast<size_t>(k)] = r;
    }
  }
  const double big_m = opt.big_m_factor * scale;
  const double obj_const = 0.5 * base.u_pre.vec().dot(base.weights.R * base.u_pre.vec());
  const RowList base_hard = hard_rows(base.rows);

  std::priority_queue<detail::BbNode, std::vector<detail::BbNode>, detail::BbNodeCompare> open;
  std::uint64_t order = 0;
  open.push({std::vector<PairFix>(m, PairFix::Free), -std::numeric_limits<double>::infinity(), order++});

  auto fixed_assignment = [&](const std::vector<PairFix>& fix) {
    DirectionAssignment a(m);
    for (size_t j = 0; j < m; ++j) a[j] = fix[j] == PairFix::Right ? Direction::Right : Direction::Left;
    return a;
  };
  auto report_assignment = [&](const Vec2& u) {
    DirectionAssignment a(m);
    for (size_t j = 0; j < m; ++j) a[j] = unit[j][0].value(u) >= -1e-8 ? Direction::Left : Direction::Right;
    return a;
  };
  auto consider = [&](const QpSolution& sol) {
    ++best.stats.qps;
    if (!sol.optimal()) return;
    if (!best.solution.optimal() || better_objective(sol.objective, best.solution.objective)) {
      best.solution = sol;
      best.assignment = report_assignment(sol.u.vec());
    }
  };

  while (!open.empty() && best.stats.nodes < opt.max_nodes) {
    detail::BbNode node = open.top();
    open.pop();
    if (best.solution.optimal() && !better_objective(node.bound, best.solution.objective)) continue;
    ++best.stats.nodes;

    std::vector<size_t> free_idx;
    RowList fixed_rows;
    for (size_t j = 0; j < m; ++j) {
      if (node.fix[j] == PairFix::Free) {
        free_idx.push_back(j);
      } else {
        fixed_rows.push_back(node.fix[j] == PairFix::Left ? pairs[j].left : pairs[j].right);
      }
    }
    if (free_idx.empty()) {
      consider(solve_qp(base, fixed_rows));
      continue;
    }

    // lifted variables: u (2), delta (4), z (2 per free pair)
    const auto nz = static_cast<Eigen::Index>(2 * free_idx.size());
    const Eigen::Index nu = 2;

    // phase-one LP over (u, z)
    {
      RowList hard = base_hard;
      hard.insert(hard.end(), fixed_rows.begin(), fixed_rows.end());
      const auto rows_lp = static_cast<Eigen::Index>(hard.size() + 3 * free_idx.size());
      Eigen::MatrixXd C = Eigen::MatrixXd::Zero(rows_lp, nu + nz);
      Eigen::VectorXd d(rows_lp);
      Eigen::Index k = 0;
      for (const auto& r : hard) {
        const AffineRow n = r.normalized();
        C.block(k, 0, 1, 2) = n.coeff_u.transpose();
        d(k++) = n.constant;
      }
      for (size_t f = 0; f < free_idx.size(); ++f) {
        const auto zc = nu + static_cast<Eigen::Index>(2 * f);
        for (int s = 0; s < 2; ++s) {
          const AffineRow& r = unit[free_idx[f]][static_cast<size_t>(s)];
          C.block(k, 0, 1, 2) = r.coeff_u.transpose() / big_m;
          C(k, zc + s) = -1.0;
          d(k++) = r.constant / big_m + 1.0;
        }
        C(k, zc) = 1.0;
        C(k, zc + 1) = 1.0;
        d(k++) = -1.0;
      }
      Eigen::VectorXd lo(nu + nz), hi(nu + nz);
      lo << base.box.lower, Eigen::VectorXd::Zero(nz);
      hi << base.box.upper, Eigen::VectorXd::Ones(nz);
      ++best.stats.lps;
      if (!lp_phase_one(C, d, lo, hi).feasible) continue;
    }

    // interior point relaxation over (u, delta, z)
    const Eigen::Index nv = kNumVars + nz;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(nv, nv);
    Q.topLeftCorner<2, 2>() = base.weights.H + base.weights.R;
    Q.block<4, 4>(2, 2) = 2.0 * base.weights.P.asDiagonal();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
    c.head<2>() = -base.weights.R * base.u_pre.vec();

    const auto n_rows = static_cast<Eigen::Index>(base.rows.size() + fixed_rows.size() + 4 + 5 * free_idx.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_rows, nv);
    Eigen::VectorXd dv(n_rows);
    Eigen::Index k = 0;
    for (const RowList* list : {&base.rows, static_cast<const RowList*>(&fixed_rows)}) {
      for (const auto& r : *list) {
        const double nrm = std::max(1e-300, r.stacked_coeffs().norm());
        A.block(k, 0, 1, kNumVars) = r.stacked_coeffs().transpose() / nrm;
        dv(k++) = r.ge_constant() / nrm;
      }
    }
    for (int i = 0; i < 2; ++i) {
      A(k, i) = 1.0;
      dv(k++) = -base.box.lower(i);
      A(k, i) = -1.0;
      dv(k++) = base.box.upper(i);
    }
    for (size_t f = 0; f < free_idx.size(); ++f) {
      const auto zc = kNumVars + static_cast<Eigen::Index>(2 * f);
      for (int s = 0; s < 2; ++s) {
        const AffineRow& r = unit[free_idx[f]][static_cast<size_t>(s)];
        A.block(k, 0, 1, 2) = r.coeff_u.transpose() / big_m;
        A(k, zc + s) = -1.0;
        dv(k++) = r.constant / big_m + 1.0;
        A(k, zc + s) = 1.0;  // z >= 0
        dv(k++) = 0.0;
      }
      A(k, zc) = 1.0;
      A(k, zc + 1) = 1.0;
      dv(k++) = -1.0;
    }
    // z <= 1 is implied: z_k <= 1 + row/G and the row is bounded on the box
    const IpmResult rel = solve_ipm_qp(Q, c, A, dv);
    ++best.stats.qps;
    const double bound = rel.converged ? rel.objective + obj_const : node.bound;
    if (best.solution.optimal() && rel.converged && !better_objective(bound, best.solution.objective)) continue;

    const Vec2 u_rel = rel.x.head<2>();
    Eigen::Index branch = -1;
    double worst = -1.0;
    std::vector<PairFix> leaf_fix = node.fix;
    for (size_t f = 0; f < free_idx.size(); ++f) {
      const size_t j = free_idx[f];
      const double s1 = unit[j][0].value(u_rel);
      const double s2 = unit[j][1].value(u_rel);
      if (std::max(s1, s2) >= -opt.side_tol && rel.converged) {
        leaf_fix[j] = s1 >= s2 ? PairFix::Left : PairFix::Right;
        continue;
      }
      const double viol = std::min(-s1, -s2);
      if (viol > worst) {
        worst = viol;
        branch = static_cast<Eigen::Index>(j);
      }
    }
    if (branch < 0) {
      // relaxation point satisfies one side of every pair
      const QpSolution sol = solve_qp(base, assignment_rows(pairs, fixed_assignment(leaf_fix)));
      const bool tight = sol.optimal() && sol.objective <= bound + 1e-7 * std::max(1.0, std::abs(bound));
      consider(sol);
      if (tight) continue;
      // polish disagrees with the relaxation; fall back to branching
      for (size_t j : free_idx) {
        if (branch < 0) branch = static_cast<Eigen::Index>(j);
      }
    }
    for (PairFix side : {PairFix::Left, PairFix::Right}) {
      detail::BbNode child{node.fix, bound, order++};
      child.fix[static_cast<size_t>(branch)] = side;
      open.push(std::move(child));
    }
  }
  return best;
}

}  // namespace vocbf
