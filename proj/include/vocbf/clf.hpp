// State-feedback Lyapunov functions for navigation and their relaxed
// decrease-condition rows.
//
// Every row encodes  L_f V + L_g V u + gamma V - delta <= 0  with analytic
// Lie derivatives along the rear-axle unicycle model.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "vocbf/affine_row.hpp"
#include "vocbf/geometry.hpp"

namespace vocbf {

/// Goal of the robot center. Build with `from_rear_axle` when the goal is
/// given as a rear-axle pose.
struct GoalSpec {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 center() const { return {x, y}; }

  static GoalSpec from_rear_axle(double x_r, double y_r, double theta_g, const RobotGeometry& g) {
    return {x_r + g.l * std::cos(theta_g), y_r + g.l * std::sin(theta_g), theta_g};
  }
};

struct ClfGains {
  double c1 = 1.0;
  double c2 = 1.0;
  double k1 = 1.0;
  double k2 = 1.0;
  double k_theta = 1.0;
  double v_d_gain = 0.5;  // 1/s
  double v_d_cap = 4.0;   // m/s
  double gamma_d = 1.0;
  double gamma_theta = 1.0;
  double gamma_v = 1.0;
  double gamma_omega = 1.0;
  double heading_goal_tolerance = 0.2;  // V_theta row dropped inside this radius

  void validate() const {
    if (!(c1 >= 0 && c2 >= 0)) throw std::invalid_argument("clf gains: c1, c2 must be >= 0");
    if (!(k1 > 0 && k2 > 0 && k_theta > 0 && v_d_gain > 0 && v_d_cap > 0)) {
      throw std::invalid_argument("clf gains: k1, k2, k_theta, v_d_gain, v_d_cap must be > 0");
    }
    if (!(gamma_d > 0 && gamma_theta > 0 && gamma_v > 0 && gamma_omega > 0)) {
      throw std::invalid_argument("clf gains: class-K slopes must be > 0");
    }
  }
};

/// Value and Lie derivatives of one Lyapunov function at a state.
struct LieTerms {
  double value = 0.0;
  double lf = 0.0;
  Vec2 lg = Vec2::Zero();

  double derivative(const ControlInput& u) const { return lf + lg.dot(u.vec()); }
};

namespace detail {

struct CenterKinematics {
  Vec2 c;         // center position
  Vec2 vc;        // center velocity
  Vec2 ac_drift;  // input-free center acceleration
  Eigen::Matrix2d G;

  CenterKinematics(const RobotState& s, const RobotGeometry& g)
      : c(center_position(s, g)),
        vc(center_velocity(s, g)),
        ac_drift(center_drift_acceleration(s, g)),
        G(center_input_matrix(s, g)) {}
};

}  // namespace detail

inline LieTerms vd_terms(const RobotState& s, const RobotGeometry& geom, const GoalSpec& goal,
                         const ClfGains& k) {
  const detail::CenterKinematics ck(s, geom);
  const double e1 = ck.c.x() - goal.x + k.k1 * ck.vc.x();
  const double e2 = ck.c.y() - goal.y + k.k2 * ck.vc.y();
  LieTerms t;
  t.value = k.c1 * e1 * e1 + k.c2 * e2 * e2;
  t.lf = 2.0 * k.c1 * e1 * (ck.vc.x() + k.k1 * ck.ac_drift.x()) +
         2.0 * k.c2 * e2 * (ck.vc.y() + k.k2 * ck.ac_drift.y());
  t.lg = 2.0 * k.c1 * e1 * k.k1 * ck.G.row(0).transpose() + 2.0 * k.c2 * e2 * k.k2 * ck.G.row(1).transpose();
  return t;
}

inline double eval_Vd(const RobotState& s, const RobotGeometry& g, const GoalSpec& goal, const ClfGains& k) {
  return vd_terms(s, g, goal, k).value;
}

/// Heading error to the goal bearing and its time derivative, both computed
/// from the robot center. Returns nullopt when the center sits on the goal.
struct HeadingError {
  double error = 0.0;       // wrap(theta - bearing)
  double rate = 0.0;        // q_theta
  double rate_drift = 0.0;  // input-free part of d(q_theta)/dt
  Vec2 rate_input = Vec2::Zero();
};

inline std::optional<HeadingError> heading_error(const RobotState& s, const RobotGeometry& geom,
                                                 const GoalSpec& goal) {
  const detail::CenterKinematics ck(s, geom);
  const Vec2 d = goal.center() - ck.c;
  const double r2 = d.squaredNorm();
  if (!(r2 > 1e-18)) return std::nullopt;
  // bearing = atan2(d_y, d_x) with d' = -vc
  const double num = d.y() * ck.vc.x() - d.x() * ck.vc.y();  // r^2 * bearing rate
  const double bearing_rate = num / r2;
  const double d_dot_vc = d.dot(ck.vc);

  HeadingError h;
  h.error = wrap_angle(s.theta - std::atan2(d.y(), d.x()));
  h.rate = s.omega - bearing_rate;
  // bearing acceleration = (d_y ac_x - d_x ac_y) / r^2 + 2 num (d . vc) / r^4
  const double drift_num = d.y() * ck.ac_drift.x() - d.x() * ck.ac_drift.y();
  h.rate_drift = -(drift_num / r2 + 2.0 * num * d_dot_vc / (r2 * r2));
  const Vec2 input_num = d.y() * ck.G.row(0).transpose() - d.x() * ck.G.row(1).transpose();
  h.rate_input = Vec2(0.0, 1.0) - input_num / r2;
  return h;
}

inline std::optional<LieTerms> vtheta_terms(const RobotState& s, const RobotGeometry& geom,
                                            const GoalSpec& goal, const ClfGains& k) {
  const auto he = heading_error(s, geom, goal);
  if (!he) return std::nullopt;
  const double e = he->error + k.k_theta * he->rate;
  LieTerms t;
  t.value = e * e;
  t.lf = 2.0 * e * (he->rate + k.k_theta * he->rate_drift);
  t.lg = 2.0 * e * k.k_theta * he->rate_input;
  return t;
}

inline double eval_Vtheta(const RobotState& s, const RobotGeometry& g, const GoalSpec& goal,
                          const ClfGains& k) {
  const auto t = vtheta_terms(s, g, goal, k);
  if (!t) throw std::domain_error("eval_Vtheta: robot center coincides with goal");
  return t->value;
}

/// Desired speed, proportional to the center-to-goal distance and saturated.
inline double desired_speed(const RobotState& s, const RobotGeometry& geom, const GoalSpec& goal,
                            const ClfGains& k, double v_max) {
  const double dist = (goal.center() - center_position(s, geom)).norm();
  return std::clamp(k.v_d_gain * dist, 0.0, std::min(k.v_d_cap, v_max));
}

inline LieTerms vv_terms(const RobotState& s, const RobotGeometry& geom, const GoalSpec& goal,
                         const ClfGains& k, double v_max) {
  const Vec2 c = center_position(s, geom);
  const Vec2 d = goal.center() - c;
  const double dist = d.norm();
  const double cap = std::min(k.v_d_cap, v_max);
  const double v_d = std::clamp(k.v_d_gain * dist, 0.0, cap);
  double v_d_rate = 0.0;
  if (dist > 0.0 && k.v_d_gain * dist < cap) {
    v_d_rate = -k.v_d_gain * d.dot(center_velocity(s, geom)) / dist;
  }
  LieTerms t;
  t.value = (s.v - v_d) * (s.v - v_d);
  t.lf = -2.0 * (s.v - v_d) * v_d_rate;
  t.lg = Vec2(2.0 * (s.v - v_d), 0.0);
  return t;
}

inline double eval_Vv(const RobotState& s, const RobotGeometry& g, const GoalSpec& goal, const ClfGains& k,
                      double v_max) {
  return vv_terms(s, g, goal, k, v_max).value;
}

inline LieTerms vomega_terms(const RobotState& s) {
  LieTerms t;
  t.value = s.omega * s.omega;
  t.lf = 0.0;
  t.lg = Vec2(0.0, 2.0 * s.omega);
  return t;
}

inline double eval_Vomega(const RobotState& s) { return s.omega * s.omega; }

/// Relaxed decrease row: L_f V + L_g V u + gamma V - delta_slot <= 0.
inline AffineRow clf_row(const LieTerms& t, double gamma, RelaxSlot slot, const char* label) {
  AffineRow r;
  r.coeff_u = t.lg;
  r.coeff_delta = Vec4::Zero();
  r.coeff_delta(static_cast<int>(slot)) = -1.0;
  r.constant = t.lf + gamma * t.value;
  r.sense = Sense::LessEqualZero;
  r.label = label;
  return r;
}

/// Rows for V_d, V_theta, V_v, V_omega in that order. The V_theta row is
/// omitted inside the heading tolerance radius around the goal.
inline RowList clf_rows(const RobotState& s, const RobotGeometry& geom, const GoalSpec& goal,
                        const ClfGains& k, double v_max) {
  RowList rows;
  rows.reserve(4);
  rows.push_back(clf_row(vd_terms(s, geom, goal, k), k.gamma_d, RelaxSlot::Distance, "clf_distance"));
  const double dist = (goal.center() - center_position(s, geom)).norm();
  if (dist > k.heading_goal_tolerance) {
    if (const auto t = vtheta_terms(s, geom, goal, k)) {
      rows.push_back(clf_row(*t, k.gamma_theta, RelaxSlot::Heading, "clf_heading"));
    }
  }
  rows.push_back(clf_row(vv_terms(s, geom, goal, k, v_max), k.gamma_v, RelaxSlot::Speed, "clf_speed"));
  rows.push_back(clf_row(vomega_terms(s), k.gamma_omega, RelaxSlot::TurnRate, "clf_turn_rate"));
  return rows;
}

}  // namespace vocbf
