// Velocity-obstacle barrier functions, the distance-based second-order
// baseline, and state-limit barriers. Every builder returns rows in the
// form  L_f h + L_g h u + (obstacle drift) + mu h >= 0.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vocbf/affine_row.hpp"
#include "vocbf/geometry.hpp"

namespace vocbf {

/// Raised when the center distance does not exceed the combined radius, so
/// no collision cone exists.
class OverlapError : public std::runtime_error {
 public:
  OverlapError(double distance, double r_sum)
      : std::runtime_error("overlap: center distance " + std::to_string(distance) +
                           " <= combined radius " + std::to_string(r_sum)),
        distance_(distance),
        r_sum_(r_sum) {}

  double distance() const { return distance_; }
  double r_sum() const { return r_sum_; }

 private:
  double distance_;
  double r_sum_;
};

struct CbfParams {
  double mu = 1.0;    // VO barriers and state limits
  double mu1 = 0.75;  // second-order baseline, first level
  double mu2 = 0.65;  // second-order baseline, second level

  void validate() const {
    if (!(mu > 0 && mu1 > 0 && mu2 > 0)) throw std::invalid_argument("cbf params: slopes must be > 0");
  }
};

/// Collision-cone geometry of one robot/obstacle pair (relative frame).
struct ConeGeometry {
  Vec2 p_rel = Vec2::Zero();  // robot center - obstacle center
  Vec2 v_rel = Vec2::Zero();
  double r_sum = 0.0;
  double alpha = 0.0;  // half-angle, sin(alpha) = r_sum / |p_rel|
  Vec2 t1 = Vec2::Zero();
  Vec2 t2 = Vec2::Zero();
  Vec2 n1 = Vec2::Zero();
  Vec2 n2 = Vec2::Zero();
  bool clamped = false;  // asin argument hit the tangency clamp
};

inline constexpr double kConeSinClamp = 1.0 - 1e-12;

inline ConeGeometry vo_cone(const Vec2& p_rel, const Vec2& v_rel, double r_sum) {
  const double dist = p_rel.norm();
  if (!(dist > r_sum)) throw OverlapError(dist, r_sum);
  ConeGeometry c;
  c.p_rel = p_rel;
  c.v_rel = v_rel;
  c.r_sum = r_sum;
  const double ratio = r_sum / dist;
  c.clamped = ratio > kConeSinClamp;
  c.alpha = std::asin(std::clamp(ratio, 0.0, kConeSinClamp));
  c.t1 = rotate(p_rel, c.alpha);
  c.t2 = rotate(p_rel, -c.alpha);
  c.n1 = rotate(c.t1, -kPi / 2.0);
  c.n2 = rotate(c.t2, kPi / 2.0);
  return c;
}

inline std::array<double, 2> vocbf_values(const ConeGeometry& cone) {
  return {cone.v_rel.dot(cone.n1), cone.v_rel.dot(cone.n2)};
}

namespace detail {

// Outer normals in closed form: N1 = f p - g Jp, N2 = f p + g Jp with
// f = sin(alpha), g = cos(alpha), J the quarter turn. `dn` returns the
// directional derivative of both normals along w.
struct NormalField {
  Vec2 p;
  double r;
  double f;
  double g;
  bool clamped;

  NormalField(const Vec2& p_rel, double r_sum) : p(p_rel), r(r_sum) {
    const double dist = p.norm();
    const double ratio = r / dist;
    clamped = ratio > kConeSinClamp;
    f = std::min(ratio, kConeSinClamp);
    g = std::sqrt(std::max(0.0, 1.0 - f * f));
  }

  Vec2 n(int k) const { return k == 0 ? Vec2(f * p - g * perp(p)) : Vec2(f * p + g * perp(p)); }

  Vec2 dn(int k, const Vec2& w) const {
    double df = 0.0;
    double dg = 0.0;
    if (!clamped) {
      const double dist = p.norm();
      df = -r * p.dot(w) / (dist * dist * dist);
      dg = -f * df / g;
    }
    const Vec2 base = df * p + f * w;
    const Vec2 side = dg * perp(p) + g * perp(w);
    return k == 0 ? Vec2(base - side) : Vec2(base + side);
  }
};

}  // namespace detail

/// Time derivative split of one velocity-obstacle barrier.
struct VocbfTerms {
  double value = 0.0;
  double lf = 0.0;           // robot drift
  Vec2 lg = Vec2::Zero();    // input coefficient
  double drift = 0.0;        // obstacle motion: dh/dx_O * dx_O/dt
};

/// Kinematic description of the other party in a pair.
struct MovingDisk {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 acceleration = Vec2::Zero();
};

struct PairRows {
  std::array<AffineRow, 2> rows;
  std::array<VocbfTerms, 2> terms;
  ConeGeometry cone;
};

inline PairRows vo_pair_rows(const RobotState& s, const RobotGeometry& g, const MovingDisk& other,
                             double r_sum, double mu, double scale, const char* tag) {
  const Vec2 c = center_position(s, g);
  const Vec2 vc = center_velocity(s, g);
  const Vec2 p_rel = c - other.position;
  const Vec2 v_rel = vc - other.velocity;
  PairRows out;
  out.cone = vo_cone(p_rel, v_rel, r_sum);

  const detail::NormalField field(p_rel, r_sum);
  const Vec2 ac_drift = center_drift_acceleration(s, g);
  const Eigen::Matrix2d G = center_input_matrix(s, g);
  for (int k = 0; k < 2; ++k) {
    const Vec2 n = field.n(k);
    VocbfTerms t;
    t.value = scale * v_rel.dot(n);
    t.lf = scale * (v_rel.dot(field.dn(k, vc)) + n.dot(ac_drift));
    t.lg = scale * (G.transpose() * n);
    t.drift = -scale * (v_rel.dot(field.dn(k, other.velocity)) + n.dot(other.acceleration));
    out.terms[k] = t;

    AffineRow row;
    row.coeff_u = t.lg;
    row.constant = t.lf + t.drift + mu * t.value;
    row.sense = Sense::GreaterEqualZero;
    row.label = std::string(tag) + (k == 0 ? "_left" : "_right");
    out.rows[k] = row;
  }
  return out;
}

/// Another disk seen by a robot: an obstacle or a neighbouring robot.
struct Neighbor {
  MovingDisk disk;
  double radius = 0.0;  // physical radius of the other disk
  bool robot = false;   // neighbouring robot: reciprocal rows
};

inline double combined_radius(const RobotGeometry& g, double other_radius) {
  return g.radius + g.safe_margin + other_radius;
}

inline MovingDisk as_moving_disk(const ObstacleState& o) {
  return {o.position, o.velocity, o.acceleration};
}

/// Center of another robot, moving with its input-free acceleration.
inline MovingDisk as_moving_disk(const RobotState& s, const RobotGeometry& g) {
  return {center_position(s, g), center_velocity(s, g), center_drift_acceleration(s, g)};
}

/// Both velocity-obstacle rows for an obstacle; h values are in `terms`.
inline PairRows vocbf_rows(const RobotState& s, const RobotGeometry& g, const ObstacleState& o,
                           const CbfParams& params) {
  return vo_pair_rows(s, g, as_moving_disk(o), combined_radius(g, o.radius), params.mu, 1.0, "vocbf");
}

/// Reciprocal rows for robot i against robot j: half of the VO barrier.
inline PairRows rvo_rows(const RobotState& s_i, const RobotGeometry& g_i, const RobotState& s_j,
                         const RobotGeometry& g_j, const CbfParams& params) {
  return vo_pair_rows(s_i, g_i, as_moving_disk(s_j, g_j), combined_radius(g_i, g_j.radius), params.mu,
                      0.5, "rvo");
}

struct HocbfResult {
  AffineRow row;
  double h = 0.0;
  double psi1 = 0.0;
  double psi1_dot_free = 0.0;  // input-free part of d(psi1)/dt, obstacle motion included
  Vec2 lg = Vec2::Zero();      // input coefficient of d(psi1)/dt
};

/// Second-order distance barrier h = |p|^2 - r^2 with linear class-K
/// functions at both levels.
inline HocbfResult hocbf_rows(const RobotState& s, const RobotGeometry& g, const MovingDisk& other,
                              double r_sum, const CbfParams& params) {
  const Vec2 p = center_position(s, g) - other.position;
  const Vec2 v = center_velocity(s, g) - other.velocity;
  const Vec2 a_free = center_drift_acceleration(s, g) - other.acceleration;
  const Eigen::Matrix2d G = center_input_matrix(s, g);

  HocbfResult out;
  out.h = p.squaredNorm() - r_sum * r_sum;
  const double h_dot = 2.0 * p.dot(v);
  out.psi1 = h_dot + params.mu1 * out.h;
  const double h_ddot_free = 2.0 * v.squaredNorm() + 2.0 * p.dot(a_free);
  out.psi1_dot_free = h_ddot_free + params.mu1 * h_dot;
  out.lg = 2.0 * (G.transpose() * p);

  out.row.coeff_u = out.lg;
  out.row.constant = out.psi1_dot_free + params.mu2 * out.psi1;
  out.row.sense = Sense::GreaterEqualZero;
  out.row.label = "hocbf";
  return out;
}

inline HocbfResult hocbf_rows(const RobotState& s, const RobotGeometry& g, const ObstacleState& o,
                              const CbfParams& params) {
  return hocbf_rows(s, g, as_moving_disk(o), combined_radius(g, o.radius), params);
}

/// Barriers keeping v in [v_min, v_max] and omega in [-omega_max, omega_max].
/// Order: v_min, v_max, omega_min, omega_max.
inline std::array<AffineRow, 4> state_limit_rows(const RobotState& s, const Limits& lim, const CbfParams& p) {
  std::array<AffineRow, 4> rows;
  rows[0].coeff_u = Vec2(1.0, 0.0);
  rows[0].constant = p.mu * (s.v - lim.v_min);
  rows[0].label = "limit_v_min";
  rows[1].coeff_u = Vec2(-1.0, 0.0);
  rows[1].constant = p.mu * (lim.v_max - s.v);
  rows[1].label = "limit_v_max";
  rows[2].coeff_u = Vec2(0.0, 1.0);
  rows[2].constant = p.mu * (s.omega + lim.omega_max);
  rows[2].label = "limit_omega_min";
  rows[3].coeff_u = Vec2(0.0, -1.0);
  rows[3].constant = p.mu * (lim.omega_max - s.omega);
  rows[3].label = "limit_omega_max";
  for (auto& r : rows) r.sense = Sense::GreaterEqualZero;
  return rows;
}

}  // namespace vocbf
