// Labelled samples for the decision network. Labels always come from the
// enumeration oracle; rollouts are driven by an exact method or, optionally, a
// previously trained network.
#pragma once

#include <cstdint>
#include <vector>

#include "vocbf/controller.hpp"
#include "vocbf/decision.hpp"
#include "vocbf/simulation.hpp"

namespace vocbf {

struct DatasetOptions {
  int scenarios = 2000;
  std::uint64_t seed = 1;
  double rollout_time = 12.0;  // s per scenario
  int stride = 5;              // candidate states every `stride` steps
  int keep_uninformative = 4;  // keep one in this many states where the choice does not matter
  int multi_robot_every = 4;   // every k-th scenario is a jittered multi-robot exchange; 0 disables
  double exchange_jitter = 1.0;  // 0 gives exact antipodal circles
  // when set, rollouts are driven by this network; labels still come from the enumeration oracle
  std::shared_ptr<const DecisionNet> policy;
};

/// Robots on a jittered circle swapping to roughly antipodal goals. Same
/// seeding scheme as random_scenario, with its own stream.
inline ScenarioConfig random_exchange_scenario(std::uint64_t seed, std::uint64_t index, const ControllerParams& base,
                                               double jitter_scale = 1.0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x6d72u};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<int> count(2, 8);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int n = count(rng);
  const double radius = 3.0 + 3.0 * u01(rng);
  const Vec2 center(radius + 1.0 + (13.0 - 2.0 * radius) * u01(rng), radius + 1.0 + (13.0 - 2.0 * radius) * u01(rng));
  const double phi0 = 2.0 * kPi * u01(rng);
  const double jitter = jitter_scale * 0.5 * kPi / n;
  ScenarioConfig cfg;
  cfg.controller = base;
  cfg.seed = seed;
  for (int i = 0; i < n; ++i) {
    const double phi = phi0 + 2.0 * kPi * i / n + jitter * (u01(rng) - 0.5);
    const double psi = phi + kPi + jitter * (u01(rng) - 0.5);
    const Vec2 p = center + radius * heading(phi);
    const Vec2 g = center + radius * heading(psi);
    const double th = std::atan2(g.y() - p.y(), g.x() - p.x());
    RobotSpec r;
    r.limits = base.limits;
    r.start = {p.x(), p.y(), th, 0.0, 0.0};
    r.goal_x = g.x();
    r.goal_y = g.y();
    r.goal_theta = th;
    cfg.robots.push_back(r);
  }
  return cfg;
}

/// True when forcing every obstacle to Left would be infeasible or costlier
/// than the optimum, i.e. the direction choice matters at this state.
inline bool choice_matters(const RobotState& s, const RobotGeometry& g, const GoalSpec& goal,
                           const std::vector<Neighbor>& ns, const ControllerParams& p, const ControlInput& u_pre,
                           const DisjunctiveResult& best) {
  const QpProblem base = base_problem(s, g, goal, p, u_pre);
  std::vector<DisjunctivePair> pairs;
  for (const auto& pr : neighbor_pair_rows(s, g, ns, p.cbf, nullptr)) pairs.push_back(DisjunctivePair::from(pr));
  const DisjunctiveResult left = solve_assignment(base, pairs, DirectionAssignment(ns.size(), Direction::Left));
  return !left.optimal() || better_objective(best.solution.objective, left.solution.objective);
}

inline std::vector<LabeledSample> gen_dataset(const DatasetOptions& opt, const ControllerParams& base,
                                              const RandomRanges& rr = {}) {
  if (opt.scenarios < 1 || opt.stride < 1 || opt.keep_uninformative < 1 || opt.multi_robot_every < 0 ||
      !(opt.exchange_jitter >= 0.0)) {
    throw std::invalid_argument("gen_dataset: bad options");
  }
  std::vector<LabeledSample> out;
  for (int i = 0; i < opt.scenarios; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    const bool exchange = opt.multi_robot_every > 0 && i % opt.multi_robot_every == opt.multi_robot_every - 1;
    ScenarioConfig cfg = exchange ? random_exchange_scenario(opt.seed, idx, base, opt.exchange_jitter) : random_scenario(opt.seed, idx, base, rr);
    cfg.sim.t_max = opt.rollout_time;
    cfg.controller.net = opt.policy;
    int uninformative = 0;
    RunOptions ro;
    ro.record = false;
    ro.on_step = [&](int robot, double, size_t step, const RobotState& s, const GoalSpec& goal,
                     const std::vector<Neighbor>& ns, const ControlInput& u_pre, const StepReport&) {
      if (ns.empty() || step % static_cast<size_t>(opt.stride) != 0) return;
      const RobotGeometry& g = cfg.robots[static_cast<size_t>(robot)].geometry;
      const QpProblem qp = base_problem(s, g, goal, cfg.controller, u_pre);
      std::vector<DisjunctivePair> pairs;
      for (const auto& pr : neighbor_pair_rows(s, g, ns, cfg.controller.cbf, nullptr)) {
        pairs.push_back(DisjunctivePair::from(pr));
      }
      const DisjunctiveResult best =
          enumerate_subqps(qp, pairs, cfg.controller.lp_prescreen, cfg.controller.max_obstacles);
      if (!best.optimal()) return;
      if (!choice_matters(s, g, goal, ns, cfg.controller, u_pre, best)) {
        if (uninformative++ % opt.keep_uninformative != 0) return;
      }
      LabeledSample smp;
      smp.features = decision_features(s, g, goal, ns);
      for (Direction d : best.assignment) smp.labels.push_back(static_cast<int>(d));
      out.push_back(std::move(smp));
    };
    // branch and bound is cheaper than enumeration once many robots are in view
    const Method driver = opt.policy ? Method::DecNetQp : exchange ? Method::Miqp : Method::SubQps;
    run_scenario(cfg, driver, ro);
  }
  return out;
}

}  // namespace vocbf
