// A single constraint that is affine in the decision vector (u, delta).
#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vocbf {

inline constexpr int kNumInputs = 2;
inline constexpr int kNumRelax = 4;
inline constexpr int kNumVars = kNumInputs + kNumRelax;

enum class RelaxSlot : int { Distance = 0, Heading = 1, Speed = 2, TurnRate = 3 };

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Vec6 = Eigen::Matrix<double, kNumVars, 1>;

enum class Sense { LessEqualZero, GreaterEqualZero };

/// coeff_u . u + coeff_delta . delta + constant  (<= 0 | >= 0)
struct AffineRow {
  Eigen::Vector2d coeff_u = Eigen::Vector2d::Zero();
  Vec4 coeff_delta = Vec4::Zero();
  double constant = 0.0;
  Sense sense = Sense::GreaterEqualZero;
  std::string label;

  double value(const Eigen::Vector2d& u, const Vec4& delta = Vec4::Zero()) const {
    return coeff_u.dot(u) + coeff_delta.dot(delta) + constant;
  }

  /// Signed slack: >= 0 iff the row holds.
  double slack(const Eigen::Vector2d& u, const Vec4& delta = Vec4::Zero()) const {
    const double v = value(u, delta);
    return sense == Sense::GreaterEqualZero ? v : -v;
  }

  /// Equivalent row with sense >= 0.
  AffineRow normalized() const {
    if (sense == Sense::GreaterEqualZero) return *this;
    AffineRow r = *this;
    r.coeff_u = -coeff_u;
    r.coeff_delta = -coeff_delta;
    r.constant = -constant;
    r.sense = Sense::GreaterEqualZero;
    return r;
  }

  /// Coefficients over the stacked (u, delta) vector in >= 0 form.
  Vec6 stacked_coeffs() const {
    const AffineRow r = normalized();
    Vec6 c;
    c << r.coeff_u, r.coeff_delta;
    return c;
  }

  double ge_constant() const { return sense == Sense::GreaterEqualZero ? constant : -constant; }

  bool involves_delta() const { return coeff_delta.cwiseAbs().maxCoeff() > 0.0; }

  bool finite() const {
    return coeff_u.allFinite() && coeff_delta.allFinite() && std::isfinite(constant);
  }
};

using RowList = std::vector<AffineRow>;

}  // namespace vocbf
