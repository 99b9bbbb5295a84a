// One closed-loop control step: gather neighbours, build the rows, solve with
// the selected method and fall back to braking when nothing is feasible.
#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vocbf/cbf.hpp"
#include "vocbf/clf.hpp"
#include "vocbf/decision.hpp"
#include "vocbf/geometry.hpp"
#include "vocbf/miqp.hpp"
#include "vocbf/qp.hpp"

namespace vocbf {

enum class Method { Miqp, SubQps, DecNetQp, Hocbf, ClassicVo };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Miqp: return "miqp";
    case Method::SubQps: return "qps";
    case Method::DecNetQp: return "decnet";
    case Method::Hocbf: return "hocbf";
    case Method::ClassicVo: return "vo";
  }
  return "unknown";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::Miqp, Method::SubQps, Method::DecNetQp, Method::Hocbf, Method::ClassicVo}) {
    if (s == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown method '" + s + "' (expected miqp|qps|decnet|hocbf|vo)");
}

struct ClassicVoParams {
  int speed_levels = 9;      // 0 .. v_max inclusive
  int heading_samples = 36;
  double horizon = 1.0;      // s; speeds reachable at a_max within this time
  double k_speed = 2.0;
  double k_heading = 2.0;
  double k_rate = 2.0;
};

struct ControllerParams {
  double dt = 0.05;
  Limits limits;
  ClfGains gains;
  CostWeights weights;
  CbfParams cbf;
  MiqpOptions miqp;
  ClassicVoParams vo;
  double sensing_radius = 25.0;
  size_t max_obstacles = 8;
  bool lp_prescreen = true;
  std::shared_ptr<const DecisionNet> net;
  // decision net: obstacles below this top probability get both sides tried;
  // if every candidate is infeasible the step goes to branch and bound
  double net_confidence = 0.8;
  size_t net_max_uncertain = 3;
  bool net_exact_fallback = true;

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("controller: dt must be > 0");
    limits.validate();
    gains.validate();
    weights.validate();
    cbf.validate();
    if (!(sensing_radius > 0.0)) throw std::invalid_argument("controller: sensing radius must be > 0");
    if (max_obstacles < 1) throw std::invalid_argument("controller: max obstacles must be >= 1");
    if (!(net_confidence >= 0.0 && net_confidence <= 1.0)) {
      throw std::invalid_argument("controller: net confidence must be in [0, 1]");
    }
  }
};

struct OtherRobot {
  RobotState state;
  RobotGeometry geometry;
};

/// What one robot sees at the start of a step.
struct WorldSnapshot {
  std::vector<ObstacleState> obstacles;
  std::vector<OtherRobot> robots;  // decision-making robots (reciprocal rows)
};

struct StepReport {
  ControlInput u;
  Method method = Method::SubQps;
  DirectionAssignment assignment;
  double objective = std::numeric_limits<double>::infinity();
  bool feasible = false;
  bool margin_violated = false;  // inflated radius shrunk to stay outside the pair
  std::vector<std::array<double, 2>> h;  // per neighbour; HOCBF reports (h, psi1)
  Vec4 delta = Vec4::Zero();
  double solve_time = 0.0;  // s
  SolverStats stats;
  size_t neighbors = 0;
  Vec2 vo_velocity = Vec2::Zero();  // sampled center velocity (sampling baseline only)
};

/// Neighbours within the sensing radius (surface distance), nearest first,
/// capped at `max_obstacles`.
inline std::vector<Neighbor> gather_neighbors(const RobotState& s, const RobotGeometry& g, const WorldSnapshot& w,
                                              const ControllerParams& p) {
  const Vec2 c = center_position(s, g);
  struct Cand {
    double dist;
    size_t order;
    Neighbor n;
  };
  std::vector<Cand> cands;
  size_t order = 0;
  auto add = [&](const MovingDisk& d, double radius, bool robot) {
    const double dist = (d.position - c).norm() - radius - g.radius;
    if (dist <= p.sensing_radius) cands.push_back({dist, order, {d, radius, robot}});
    ++order;
  };
  for (const auto& o : w.obstacles) add(as_moving_disk(o), o.radius, false);
  for (const auto& r : w.robots) add(as_moving_disk(r.state, r.geometry), r.geometry.radius, true);
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.order < b.order;
  });
  if (cands.size() > p.max_obstacles) cands.resize(p.max_obstacles);
  std::vector<Neighbor> out;
  out.reserve(cands.size());
  for (auto& cd : cands) out.push_back(cd.n);
  return out;
}

/// Inflated radius used for the barrier of one pair. Inside the inflated disk
/// but clear of the physical one, the radius is shrunk just below the
/// distance and the step is flagged.
inline double effective_radius(const RobotState& s, const RobotGeometry& g, const Neighbor& n, bool* shrunk) {
  const double dist = (center_position(s, g) - n.disk.position).norm();
  const double physical = g.radius + n.radius;
  if (dist <= physical) throw OverlapError(dist, physical);
  const double r_sum = combined_radius(g, n.radius);
  if (dist > r_sum) return r_sum;
  if (shrunk) *shrunk = true;
  return std::max(physical, 0.999 * dist);
}

inline std::vector<PairRows> neighbor_pair_rows(const RobotState& s, const RobotGeometry& g,
                                                const std::vector<Neighbor>& ns, const CbfParams& cbf,
                                                bool* shrunk) {
  std::vector<PairRows> out;
  out.reserve(ns.size());
  for (const auto& n : ns) {
    const double r = effective_radius(s, g, n, shrunk);
    out.push_back(vo_pair_rows(s, g, n.disk, r, cbf.mu, n.robot ? 0.5 : 1.0, n.robot ? "rvo" : "vocbf"));
  }
  return out;
}

/// Tracking rows and input box shared by every QP-based method.
inline QpProblem base_problem(const RobotState& s, const RobotGeometry& g, const GoalSpec& goal,
                              const ControllerParams& p, const ControlInput& u_pre) {
  QpProblem q;
  q.weights = p.weights;
  q.u_pre = u_pre;
  q.box = input_box(p.limits, u_pre, p.dt);
  q.rows = clf_rows(s, g, goal, p.gains, p.limits.v_max);
  for (const auto& r : state_limit_rows(s, p.limits, p.cbf)) q.rows.push_back(r);
  return q;
}

inline ControlInput braking_input(const RobotState& s, const InputBox& box, const ControllerParams& p) {
  const double a = std::clamp(-s.v / p.dt, -p.limits.a_max, p.limits.a_max);
  return ControlInput::from(box.clamp(Vec2(a, 0.0)));
}

/// Sampling-based velocity obstacle baseline with proportional tracking.
inline StepReport classic_vo_step(const RobotState& s, const RobotGeometry& g, const GoalSpec& goal,
                                  const std::vector<Neighbor>& ns, const ControllerParams& p,
                                  const ControlInput& u_pre) {
  StepReport rep;
  rep.method = Method::ClassicVo;
  rep.neighbors = ns.size();
  const Vec2 c = center_position(s, g);
  const Vec2 vc = center_velocity(s, g);
  const InputBox box = input_box(p.limits, u_pre, p.dt);

  std::vector<double> radii;
  for (const auto& n : ns) {
    radii.push_back(effective_radius(s, g, n, &rep.margin_violated));
    rep.h.push_back(vocbf_values(vo_cone(c - n.disk.position, vc - n.disk.velocity, radii.back())));
  }
  auto safe = [&](const Vec2& v) {
    for (size_t j = 0; j < ns.size(); ++j) {
      const auto h = vocbf_values(vo_cone(c - ns[j].disk.position, v - ns[j].disk.velocity, radii[j]));
      if (h[0] < 0.0 && h[1] < 0.0) return false;
    }
    return true;
  };

  const Vec2 to_goal = goal.center() - c;
  const double dist = to_goal.norm();
  const Vec2 preferred = dist > 0.0 ? Vec2(to_goal / dist * desired_speed(s, g, goal, p.gains, p.limits.v_max))
                                    : Vec2(Vec2::Zero());
  const double speed_now = vc.norm();
  const double reach = p.limits.a_max * p.vo.horizon;
  std::optional<Vec2> best;
  double best_cost = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vec2& v) {
    const double cost = (v - preferred).squaredNorm();
    if (cost < best_cost && safe(v)) {
      best = v;
      best_cost = cost;
    }
  };
  if (std::abs(preferred.norm() - speed_now) <= reach) consider(preferred);
  for (int i = 0; i < p.vo.speed_levels; ++i) {
    const double sp = p.limits.v_max * i / std::max(1, p.vo.speed_levels - 1);
    if (std::abs(sp - speed_now) > reach) continue;
    for (int k = 0; k < p.vo.heading_samples; ++k) {
      consider(sp * heading(s.theta + 2.0 * kPi * k / p.vo.heading_samples));
    }
  }

  Vec2 u;
  if (best) {
    rep.vo_velocity = *best;
    const double sp = best->norm();
    const double psi = sp > 1e-9 ? std::atan2(best->y(), best->x()) : s.theta;
    u = Vec2(p.vo.k_speed * (sp - s.v), p.vo.k_heading * wrap_angle(psi - s.theta) - p.vo.k_rate * s.omega);
    rep.feasible = true;
  } else {
    u = Vec2(-p.limits.a_max, -p.vo.k_rate * s.omega);
  }
  u.x() = std::clamp(u.x(), -p.limits.a_max, p.limits.a_max);
  u.y() = std::clamp(u.y(), -p.limits.alpha_max, p.limits.alpha_max);
  rep.u = ControlInput::from(box.clamp(u));
  return rep;
}

inline StepReport control_step_with(const RobotState& s, const RobotGeometry& g, const GoalSpec& goal,
                                    const std::vector<Neighbor>& ns, Method method, const ControllerParams& p,
                                    const ControlInput& u_pre) {
  const auto t0 = std::chrono::steady_clock::now();
  StepReport rep;
  if (method == Method::ClassicVo) {
    rep = classic_vo_step(s, g, goal, ns, p, u_pre);
  } else {
    rep.method = method;
    rep.neighbors = ns.size();
    QpProblem base = base_problem(s, g, goal, p, u_pre);
    QpSolution sol;
    if (method == Method::Hocbf) {
      for (const auto& n : ns) {
        const double r = effective_radius(s, g, n, &rep.margin_violated);
        const HocbfResult hr = hocbf_rows(s, g, n.disk, r, p.cbf);
        base.rows.push_back(hr.row);
        rep.h.push_back({hr.h, hr.psi1});
      }
      sol = solve_qp(base);
      rep.stats.qps = 1;
    } else {
      const auto prs = neighbor_pair_rows(s, g, ns, p.cbf, &rep.margin_violated);
      std::vector<DisjunctivePair> pairs;
      for (const auto& pr : prs) {
        pairs.push_back(DisjunctivePair::from(pr));
        rep.h.push_back({pr.terms[0].value, pr.terms[1].value});
      }
      DisjunctiveResult r;
      switch (method) {
        case Method::Miqp: r = solve_miqp(base, pairs, p.miqp); break;
        case Method::SubQps: r = enumerate_subqps(base, pairs, p.lp_prescreen, p.max_obstacles); break;
        case Method::DecNetQp: {
          if (!p.net) throw std::invalid_argument("decision network method needs loaded weights");
          if (pairs.empty()) {
            r = solve_assignment(base, pairs, {});
            break;
          }
          const auto cands = candidate_assignments(p.net->probabilities(decision_features(s, g, goal, ns)),
                                                   p.net_confidence, p.net_max_uncertain);
          SolverStats stats;
          for (const auto& a : cands) {
            DisjunctiveResult c = solve_assignment(base, pairs, a);
            stats.qps += c.stats.qps;
            if (c.optimal() && (!r.optimal() || better_objective(c.solution.objective, r.solution.objective))) {
              r = std::move(c);
            } else if (r.assignment.empty()) {
              r.assignment = a;
            }
          }
          r.stats = stats;
          if (!r.optimal() && p.net_exact_fallback) {
            DisjunctiveResult e = solve_miqp(base, pairs, p.miqp);
            e.stats.qps += stats.qps;
            r = std::move(e);
          }
          break;
        }
        default: break;
      }
      sol = r.solution;
      rep.assignment = r.assignment;
      rep.stats = r.stats;
    }
    if (sol.optimal()) {
      rep.u = sol.u;
      rep.objective = sol.objective;
      rep.delta = sol.delta;
      rep.feasible = true;
    } else {
      rep.u = braking_input(s, base.box, p);
    }
  }
  rep.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline StepReport control_step(const RobotState& s, const RobotGeometry& g, const GoalSpec& goal,
                               const WorldSnapshot& world, Method method, const ControllerParams& p,
                               const ControlInput& u_pre) {
  return control_step_with(s, g, goal, gather_neighbors(s, g, world, p), method, p, u_pre);
}

/// Optimal sub-QP assignment, or nothing when every assignment is infeasible.
inline std::optional<DirectionAssignment> oracle_label(const RobotState& s, const RobotGeometry& g,
                                                       const GoalSpec& goal, const std::vector<Neighbor>& ns,
                                                       const ControllerParams& p, const ControlInput& u_pre) {
  const QpProblem base = base_problem(s, g, goal, p, u_pre);
  std::vector<DisjunctivePair> pairs;
  for (const auto& pr : neighbor_pair_rows(s, g, ns, p.cbf, nullptr)) pairs.push_back(DisjunctivePair::from(pr));
  const DisjunctiveResult r = enumerate_subqps(base, pairs, p.lp_prescreen, p.max_obstacles);
  if (!r.optimal()) return std::nullopt;
  return r.assignment;
}

}  // namespace vocbf
