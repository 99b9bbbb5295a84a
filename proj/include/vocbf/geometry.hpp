// Kinematic models for the rear-axle acceleration-controlled unicycle and
// double-integrator obstacles, plus the planar frame helpers shared by the
// barrier and Lyapunov builders.
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace vocbf {

using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

/// Rear-axle pose and velocities: (x_p, y_p, theta, v, omega).
struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;
  double omega = 0.0;

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta) &&
           std::isfinite(v) && std::isfinite(omega);
  }
};

/// Linear and angular acceleration.
struct ControlInput {
  double a = 0.0;
  double alpha = 0.0;

  Vec2 vec() const { return {a, alpha}; }
  static ControlInput from(const Vec2& u) { return {u.x(), u.y()}; }
  bool finite() const { return std::isfinite(a) && std::isfinite(alpha); }
};

/// Circular obstacle with double-integrator dynamics.
struct ObstacleState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 acceleration = Vec2::Zero();
  double radius = 0.5;
};

struct RobotGeometry {
  double radius = 0.3;
  double l = 0.15;            // rear axle to center
  double safe_margin = 0.15;  // d_s, added to the robot radius for avoidance

  void validate() const {
    if (!(radius > 0.0)) throw std::invalid_argument("robot radius must be > 0");
    if (!(l >= 0.0 && l < radius)) throw std::invalid_argument("l must satisfy 0 <= l < radius");
    if (!(safe_margin >= 0.0)) throw std::invalid_argument("safe margin must be >= 0");
  }
};

struct Limits {
  double v_min = 0.0;
  double v_max = 4.0;
  double omega_max = 0.5;
  double a_max = 1.0;
  double alpha_max = 0.6;
  double delta_a_max = 6.0;      // m/s^3
  double delta_alpha_max = 3.0;  // rad/s^3

  void validate() const {
    if (!(v_min < v_max)) throw std::invalid_argument("limits: v_min must be < v_max");
    if (!(omega_max > 0 && a_max > 0 && alpha_max > 0 && delta_a_max > 0 && delta_alpha_max > 0)) {
      throw std::invalid_argument("limits: all max values must be > 0");
    }
  }
};

/// Counterclockwise rotation of a planar vector.
inline Vec2 rotate(const Vec2& vec, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * vec.x() - s * vec.y(), s * vec.x() + c * vec.y()};
}

/// 90 degree counterclockwise rotation, exact.
inline Vec2 perp(const Vec2& vec) { return {-vec.y(), vec.x()}; }

inline Vec2 heading(double theta) { return {std::cos(theta), std::sin(theta)}; }

inline Vec2 center_position(const RobotState& s, const RobotGeometry& g) {
  return {s.x + g.l * std::cos(s.theta), s.y + g.l * std::sin(s.theta)};
}

inline Vec2 center_velocity(const RobotState& s, const RobotGeometry& g) {
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  return {s.v * c - g.l * sn * s.omega, s.v * sn + g.l * c * s.omega};
}

/// Input matrix of the center acceleration: d(center_velocity)/dt = drift + G u.
inline Eigen::Matrix2d center_input_matrix(const RobotState& s, const RobotGeometry& g) {
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  Eigen::Matrix2d m;
  m << c, -g.l * sn, sn, g.l * c;
  return m;
}

/// Input-free part of the center acceleration.
inline Vec2 center_drift_acceleration(const RobotState& s, const RobotGeometry& g) {
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  const double w2 = s.omega * s.omega;
  return {-s.v * s.omega * sn - g.l * w2 * c, s.v * s.omega * c - g.l * w2 * sn};
}

inline Vec2 center_acceleration(const RobotState& s, const RobotGeometry& g, const ControlInput& u) {
  return center_drift_acceleration(s, g) + center_input_matrix(s, g) * u.vec();
}

/// Forward Euler step of the unicycle; derivatives are taken at `s`.
inline RobotState step_robot(const RobotState& s, const ControlInput& u, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_robot: dt must be > 0");
  if (!s.finite() || !u.finite()) throw std::invalid_argument("step_robot: non-finite state or input");
  RobotState n;
  n.x = s.x + dt * s.v * std::cos(s.theta);
  n.y = s.y + dt * s.v * std::sin(s.theta);
  n.theta = wrap_angle(s.theta + dt * s.omega);
  n.v = s.v + dt * u.a;
  n.omega = s.omega + dt * u.alpha;
  return n;
}

inline ObstacleState step_obstacle(const ObstacleState& o, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_obstacle: dt must be > 0");
  ObstacleState n = o;
  n.position = o.position + dt * o.velocity;
  n.velocity = o.velocity + dt * o.acceleration;
  return n;
}

/// Expresses a world point in the robot frame centered at the robot center
/// with x along the heading.
inline Vec2 to_local_frame(const RobotState& s, const RobotGeometry& g, const Vec2& world_point) {
  return rotate(world_point - center_position(s, g), -s.theta);
}

/// Rotates a world-frame direction into the robot frame.
inline Vec2 to_local_direction(const RobotState& s, const Vec2& world_vec) {
  return rotate(world_vec, -s.theta);
}

}  // namespace vocbf
