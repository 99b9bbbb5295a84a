#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vocbf/cbf.hpp"

using namespace vocbf;

TEST(Cone, ThirtyDegreeExample) {
  const ConeGeometry c = vo_cone(Vec2(2, 0), Vec2(0, 0), 1.0);
  const double r3 = std::sqrt(3.0);
  EXPECT_NEAR(c.alpha, kPi / 6, 1e-12);
  EXPECT_LT((c.t1 - Vec2(r3, 1)).norm(), 1e-12);
  EXPECT_LT((c.t2 - Vec2(r3, -1)).norm(), 1e-12);
  EXPECT_LT((c.n1 - Vec2(1, -r3)).norm(), 1e-12);
  EXPECT_LT((c.n2 - Vec2(1, r3)).norm(), 1e-12);
}

TEST(Cone, FarLimitAndRotation) {
  const ConeGeometry far = vo_cone(Vec2(1e6, 0), Vec2(0, 0), 1.0);
  EXPECT_LT((far.n1 / 1e6 - Vec2(0, -1)).norm(), 1e-5);
  const ConeGeometry a = vo_cone(Vec2(2, 0), Vec2(0, 0), 1.0);
  const ConeGeometry b = vo_cone(Vec2(0, 2), Vec2(0, 0), 1.0);
  EXPECT_LT((rotate(a.n1, kPi / 2) - b.n1).norm(), 1e-12);
  EXPECT_LT((rotate(a.n2, kPi / 2) - b.n2).norm(), 1e-12);
}

TEST(Cone, OverlapRejected) {
  EXPECT_THROW(vo_cone(Vec2(1, 0), Vec2(0, 0), 1.0), OverlapError);
  EXPECT_THROW(vo_cone(Vec2(0.5, 0), Vec2(0, 0), 1.0), OverlapError);
}

TEST(Cone, NormalsHaveLengthOfOffset) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p(u(rng), u(rng));
    const double r = 0.9 * p.norm() * std::abs(u(rng)) / 5.0;
    const ConeGeometry c = vo_cone(p, Vec2(0, 0), r);
    EXPECT_NEAR(c.n1.norm(), p.norm(), 1e-12 * p.norm());
    EXPECT_NEAR(c.n2.norm(), p.norm(), 1e-12 * p.norm());
  }
}

TEST(Vocbf, ValueExamples) {
  const ConeGeometry receding = vo_cone(Vec2(2, 0), Vec2(1, 0), 1.0);
  const auto h = vocbf_values(receding);
  EXPECT_NEAR(h[0], 1.0, 1e-12);
  EXPECT_NEAR(h[1], 1.0, 1e-12);
  // heading straight at the obstacle: inside the cone
  const auto in = vocbf_values(vo_cone(Vec2(2, 0), Vec2(-1, 0), 1.0));
  EXPECT_LT(in[0], 0.0);
  EXPECT_LT(in[1], 0.0);
}

TEST(Vocbf, ConeMembershipMatchesRayDisk) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-5, 5);
  std::uniform_real_distribution<double> frac(0.01, 0.99);
  int compared = 0;
  for (int i = 0; i < 20000; ++i) {
    const Vec2 p(u(rng), u(rng));
    const double r = frac(rng) * p.norm();
    const Vec2 v(u(rng), u(rng));
    const auto h = vocbf_values(vo_cone(p, v, r));
    if (std::abs(h[0]) < 1e-9 || std::abs(h[1]) < 1e-9) continue;
    ++compared;
    ASSERT_EQ(h[0] < 0 && h[1] < 0, oracle::ray_hits_disk(-p, r, v));
  }
  EXPECT_GT(compared, 19000);
}

TEST(Vocbf, RotationInvariant) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 500; ++i) {
    const Vec2 p(u(rng) + 8, u(rng));
    const Vec2 v(u(rng), u(rng));
    const double r = 2.0;
    const double ang = u(rng);
    const auto h = vocbf_values(vo_cone(p, v, r));
    const auto hr = vocbf_values(vo_cone(rotate(p, ang), rotate(v, ang), r));
    EXPECT_NEAR(h[0], hr[0], 1e-10 * (1 + std::abs(h[0])));
    EXPECT_NEAR(h[1], hr[1], 1e-10 * (1 + std::abs(h[1])));
  }
}

namespace {

ObstacleState random_obstacle(std::mt19937_64& rng, const RobotState& s, const RobotGeometry& g) {
  std::uniform_real_distribution<double> pos(-6, 6);
  std::uniform_real_distribution<double> vel(-1, 1);
  std::uniform_real_distribution<double> rad(0.1, 1.5);
  ObstacleState o;
  do {
    o.position = center_position(s, g) + Vec2(pos(rng), pos(rng));
    o.radius = rad(rng);
  } while ((center_position(s, g) - o.position).norm() < combined_radius(g, o.radius) + 0.1);
  o.velocity = Vec2(vel(rng), vel(rng));
  o.acceleration = Vec2(vel(rng), vel(rng)) * 0.3;
  return o;
}

}  // namespace

TEST(Vocbf, LieDerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(24);
  const RobotGeometry g;
  CbfParams p;
  for (int i = 0; i < 3000; ++i) {
    const RobotState s = oracle::random_state(rng);
    const ControlInput u = oracle::random_input(rng);
    const ObstacleState o = random_obstacle(rng, s, g);
    const PairRows rows = vocbf_rows(s, g, o, p);
    for (int k = 0; k < 2; ++k) {
      const double fd = oracle::flow_derivative(
          [&](const RobotState& r, const ObstacleState& ob) { return vocbf_rows(r, g, ob, p).terms[k].value; }, s,
          u, o);
      const VocbfTerms& t = rows.terms[k];
      const double an = t.lf + t.lg.dot(u.vec()) + t.drift;
      ASSERT_TRUE(oracle::close_rel(an, fd, 1e-3, 1e-6)) << an << " vs " << fd;
      // the row is exactly h_dot + mu h
      EXPECT_NEAR(rows.rows[k].value(u.vec()), an + p.mu * t.value, 1e-9 * (1 + std::abs(an)));
    }
  }
}

TEST(Vocbf, InputCoefficientNeverVanishes) {
  std::mt19937_64 rng(25);
  const RobotGeometry g;
  for (int i = 0; i < 20000; ++i) {
    const RobotState s = oracle::random_state(rng);
    if (std::abs(std::cos(s.theta)) <= 1e-3) continue;
    const ObstacleState o = random_obstacle(rng, s, g);
    const PairRows rows = vocbf_rows(s, g, o, {});
    ASSERT_GT(rows.terms[0].lg.norm(), 1e-9);
    ASSERT_GT(rows.terms[1].lg.norm(), 1e-9);
  }
}

TEST(Rvo, HalfOfVo) {
  std::mt19937_64 rng(26);
  const RobotGeometry g;
  for (int i = 0; i < 1000; ++i) {
    const RobotState si = oracle::random_state(rng);
    RobotState sj = oracle::random_state(rng);
    if ((center_position(si, g) - center_position(sj, g)).norm() < 1.0) continue;
    const PairRows rvo = rvo_rows(si, g, sj, g, {});
    ObstacleState as_obs;
    const MovingDisk md = as_moving_disk(sj, g);
    as_obs.position = md.position;
    as_obs.velocity = md.velocity;
    as_obs.acceleration = md.acceleration;
    as_obs.radius = g.radius;
    const PairRows vo = vocbf_rows(si, g, as_obs, {});
    for (int k = 0; k < 2; ++k) {
      EXPECT_NEAR(rvo.terms[k].value, 0.5 * vo.terms[k].value, 1e-12 * (1 + std::abs(vo.terms[k].value)));
      EXPECT_LT((rvo.rows[k].coeff_u - 0.5 * vo.rows[k].coeff_u).norm(), 1e-12 * (1 + vo.rows[k].coeff_u.norm()));
      EXPECT_NEAR(rvo.rows[k].constant, 0.5 * vo.rows[k].constant, 1e-12 * (1 + std::abs(vo.rows[k].constant)));
    }
  }
}

TEST(Hocbf, ChainMatchesFiniteDifferences) {
  std::mt19937_64 rng(27);
  const RobotGeometry g;
  CbfParams p;
  for (int i = 0; i < 2000; ++i) {
    const RobotState s = oracle::random_state(rng);
    const ControlInput u = oracle::random_input(rng);
    const ObstacleState o = random_obstacle(rng, s, g);
    const HocbfResult r = hocbf_rows(s, g, o, p);
    // h_dot through psi1 = h_dot + mu1 h
    const double fd_h = oracle::flow_derivative(
        [&](const RobotState& x, const ObstacleState& ob) { return hocbf_rows(x, g, ob, p).h; }, s, u, o);
    EXPECT_TRUE(oracle::close_rel(r.psi1 - p.mu1 * r.h, fd_h, 1e-3, 1e-6));
    const double fd_psi = oracle::flow_derivative(
        [&](const RobotState& x, const ObstacleState& ob) { return hocbf_rows(x, g, ob, p).psi1; }, s, u, o);
    EXPECT_TRUE(oracle::close_rel(r.psi1_dot_free + r.lg.dot(u.vec()), fd_psi, 1e-3, 1e-6));
  }
}

TEST(StateLimits, Examples) {
  Limits lim;
  CbfParams p;
  auto rows = state_limit_rows({0, 0, 0, 4, 0}, lim, p);
  EXPECT_EQ(rows[1].coeff_u, Vec2(-1, 0));
  EXPECT_EQ(rows[1].constant, 0.0);
  rows = state_limit_rows({0, 0, 0, 0, 0}, lim, p);
  EXPECT_EQ(rows[0].coeff_u, Vec2(1, 0));
  EXPECT_EQ(rows[0].constant, 0.0);
  rows = state_limit_rows({0, 0, 0, 2, 0.1}, lim, p);
  EXPECT_EQ(rows[1].constant, 2.0);
  EXPECT_NEAR(rows[2].constant, 0.6, 1e-15);
  EXPECT_NEAR(rows[3].constant, 0.4, 1e-15);
}

TEST(StateLimits, LieDerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(28);
  Limits lim;
  CbfParams p;
  for (int i = 0; i < 500; ++i) {
    const RobotState s = oracle::random_state(rng);
    const ControlInput u = oracle::random_input(rng);
    const std::array<std::function<double(const RobotState&)>, 4> h = {
        [&](const RobotState& r) { return r.v - lim.v_min; }, [&](const RobotState& r) { return lim.v_max - r.v; },
        [&](const RobotState& r) { return r.omega + lim.omega_max; },
        [&](const RobotState& r) { return lim.omega_max - r.omega; }};
    const auto rows = state_limit_rows(s, lim, p);
    for (int k = 0; k < 4; ++k) {
      const double fd = oracle::flow_derivative([&](const RobotState& r, const ObstacleState&) { return h[k](r); },
                                                s, u, {});
      EXPECT_NEAR(rows[k].value(u.vec()), fd + p.mu * h[k](s), 1e-8);
    }
  }
}
