// Closed-loop simulation, termination rules, trajectory logs and batch metrics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "vocbf/controller.hpp"
#include "vocbf/scenario.hpp"

namespace vocbf {

enum class Outcome { Completed, Deadlock, Collision, Timeout };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Completed: return "completed";
    case Outcome::Deadlock: return "deadlock";
    case Outcome::Collision: return "collision";
    case Outcome::Timeout: return "timeout";
  }
  return "unknown";
}

struct RobotOutcome {
  Outcome outcome = Outcome::Timeout;
  double reach_time = std::numeric_limits<double>::quiet_NaN();
  double end_time = 0.0;
  double min_clearance = std::numeric_limits<double>::infinity();         // distance minus physical radii
  double min_margin_clearance = std::numeric_limits<double>::infinity();  // distance minus inflated radii
  int steps = 0;
  int infeasible_steps = 0;
  int margin_steps = 0;
  double path_length = 0.0;
  double relax_sum = 0.0;       // sum over steps of |delta|_1
  double du_sq_sum = 0.0;       // sum over steps of |u - u_pre|^2
};

struct RobotRecord {
  RobotState state;
  Vec2 center = Vec2::Zero();
  Vec2 center_velocity = Vec2::Zero();
  ControlInput u;
  bool active = false;
  bool feasible = true;
  bool margin = false;
  std::string assignment;
  double objective = 0.0;
  double clearance = std::numeric_limits<double>::infinity();
};

struct StepRecord {
  int step = 0;
  double time = 0.0;
  std::vector<RobotRecord> robots;
  std::vector<ObstacleState> obstacles;
};

struct TrajectoryLog {
  std::vector<StepRecord> steps;

  static constexpr const char* kHeader =
      "step,time,kind,id,x,y,theta,v,omega,cx,cy,vx,vy,a,alpha,active,feasible,margin,assignment,objective,clearance";

  /// One row per (step, robot) and per (step, obstacle); for obstacles the
  /// pose columns hold the position and the velocity columns its velocity.
  void write_csv(std::ostream& os) const {
    os << kHeader << '\n';
    char buf[512];
    for (const auto& s : steps) {
      for (size_t i = 0; i < s.robots.size(); ++i) {
        const RobotRecord& r = s.robots[i];
        std::snprintf(buf, sizeof buf, "%d,%.4f,robot,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%d,%d,",
                      s.step, s.time, i, r.state.x, r.state.y, r.state.theta, r.state.v, r.state.omega, r.center.x(),
                      r.center.y(), r.center_velocity.x(), r.center_velocity.y(), r.u.a, r.u.alpha, r.active ? 1 : 0,
                      r.feasible ? 1 : 0, r.margin ? 1 : 0);
        os << buf << r.assignment;
        std::snprintf(buf, sizeof buf, ",%.9g,%.9g\n", r.objective, r.clearance);
        os << buf;
      }
      for (size_t j = 0; j < s.obstacles.size(); ++j) {
        const ObstacleState& o = s.obstacles[j];
        std::snprintf(buf, sizeof buf, "%d,%.4f,obstacle,%zu,%.9g,%.9g,,,,%.9g,%.9g,%.9g,%.9g,,,,,,,,\n", s.step,
                      s.time, j, o.position.x(), o.position.y(), o.position.x(), o.position.y(), o.velocity.x(),
                      o.velocity.y());
        os << buf;
      }
    }
  }
};

struct RunResult {
  std::vector<RobotOutcome> robots;
  std::vector<double> solve_times;  // s, one per controller call
  TrajectoryLog log;

  bool all_completed() const {
    return std::all_of(robots.begin(), robots.end(), [](const RobotOutcome& r) { return r.outcome == Outcome::Completed; });
  }
  int total_infeasible() const {
    int n = 0;
    for (const auto& r : robots) n += r.infeasible_steps;
    return n;
  }
  double min_clearance() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : robots) m = std::min(m, r.min_clearance);
    return m;
  }
};

struct RunOptions {
  bool record = true;
  /// Called after each controller call with the robot index and report.
  std::function<void(int, double, size_t, const RobotState&, const GoalSpec&, const std::vector<Neighbor>&,
                     const ControlInput&, const StepReport&)>
      on_step;
};

inline std::string assignment_string(const DirectionAssignment& a) {
  std::string s;
  for (Direction d : a) s += "LRB"[static_cast<int>(d)];
  return s;
}

inline RunResult run_scenario(const ScenarioConfig& cfg, Method method, const RunOptions& opt = {}) {
  cfg.validate();
  const size_t n = cfg.robots.size();
  const double dt = cfg.controller.dt;
  std::vector<RobotState> states;
  std::vector<ControlInput> u_prev(n);
  std::vector<ControllerParams> params(n, cfg.controller);
  std::vector<GoalSpec> goals;
  for (size_t i = 0; i < n; ++i) {
    states.push_back(cfg.robots[i].start);
    goals.push_back(cfg.robots[i].goal());
    params[i].limits = cfg.robots[i].limits;
  }
  std::vector<ObstacleState> obstacles = cfg.obstacles;
  std::vector<bool> active(n, true);
  std::vector<double> slow_time(n, 0.0);
  RunResult res;
  res.robots.resize(n);
  std::vector<StepReport> last(n);

  auto geom = [&](size_t i) -> const RobotGeometry& { return cfg.robots[i].geometry; };
  auto clearance_of = [&](size_t i, std::vector<double>* margin) {
    const Vec2 c = center_position(states[i], geom(i));
    double m = std::numeric_limits<double>::infinity();
    double mm = std::numeric_limits<double>::infinity();
    for (const auto& o : obstacles) {
      const double d = (c - o.position).norm();
      m = std::min(m, d - geom(i).radius - o.radius);
      mm = std::min(mm, d - combined_radius(geom(i), o.radius));
    }
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = (c - center_position(states[j], geom(j))).norm();
      m = std::min(m, d - geom(i).radius - geom(j).radius);
      mm = std::min(mm, d - combined_radius(geom(i), geom(j).radius));
    }
    if (margin) margin->push_back(mm);
    return m;
  };

  auto record = [&](int step, double t) {
    if (!opt.record) return;
    StepRecord rec;
    rec.step = step;
    rec.time = t;
    rec.obstacles = obstacles;
    for (size_t i = 0; i < n; ++i) {
      RobotRecord r;
      r.state = states[i];
      r.center = center_position(states[i], geom(i));
      r.center_velocity = center_velocity(states[i], geom(i));
      r.u = u_prev[i];
      r.active = active[i];
      r.feasible = last[i].feasible || step == 0;
      r.margin = last[i].margin_violated;
      r.assignment = assignment_string(last[i].assignment);
      r.objective = std::isfinite(last[i].objective) ? last[i].objective : 0.0;
      r.clearance = clearance_of(i, nullptr);
      rec.robots.push_back(std::move(r));
    }
    res.log.steps.push_back(std::move(rec));
  };

  for (size_t i = 0; i < n; ++i) {
    std::vector<double> mm;
    res.robots[i].min_clearance = clearance_of(i, &mm);
    res.robots[i].min_margin_clearance = mm.back();
  }
  record(0, 0.0);

  const int max_steps = static_cast<int>(std::ceil(cfg.sim.t_max / dt - 1e-9));
  for (int step = 1; step <= max_steps; ++step) {
    const double t = step * dt;
    // every active robot decides on the same snapshot
    std::vector<ControlInput> u(n);
    for (size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      WorldSnapshot w;
      w.obstacles = obstacles;
      for (size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (active[j]) {
          w.robots.push_back({states[j], geom(j)});
        } else {
          ObstacleState parked;
          parked.position = center_position(states[j], geom(j));
          parked.radius = geom(j).radius;
          w.obstacles.push_back(parked);
        }
      }
      const auto ns = gather_neighbors(states[i], geom(i), w, params[i]);
      last[i] = control_step_with(states[i], geom(i), goals[i], ns, method, params[i], u_prev[i]);
      res.solve_times.push_back(last[i].solve_time);
      if (opt.on_step) opt.on_step(static_cast<int>(i), t - dt, step, states[i], goals[i], ns, u_prev[i], last[i]);
      u[i] = last[i].u;
      RobotOutcome& ro = res.robots[i];
      ++ro.steps;
      if (!last[i].feasible) ++ro.infeasible_steps;
      if (last[i].margin_violated) ++ro.margin_steps;
      ro.relax_sum += last[i].delta.cwiseAbs().sum();
      ro.du_sq_sum += (u[i].vec() - u_prev[i].vec()).squaredNorm();
    }
    for (size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      const Vec2 c0 = center_position(states[i], geom(i));
      states[i] = step_robot(states[i], u[i], dt);
      res.robots[i].path_length += (center_position(states[i], geom(i)) - c0).norm();
      u_prev[i] = u[i];
    }
    for (auto& o : obstacles) o = step_obstacle(o, dt);

    // termination, collision first
    std::vector<bool> finish(n, false);
    for (size_t i = 0; i < n; ++i) {
      std::vector<double> mm;
      const double clr = clearance_of(i, &mm);
      RobotOutcome& ro = res.robots[i];
      ro.min_clearance = std::min(ro.min_clearance, clr);
      ro.min_margin_clearance = std::min(ro.min_margin_clearance, mm.back());
      if (!active[i]) continue;
      if (clr <= 0.0) {
        ro.outcome = Outcome::Collision;
        finish[i] = true;
        continue;
      }
      const Vec2 c = center_position(states[i], geom(i));
      if ((c - goals[i].center()).norm() < cfg.sim.goal_tolerance) {
        ro.outcome = Outcome::Completed;
        ro.reach_time = t;
        finish[i] = true;
        continue;
      }
      slow_time[i] = center_velocity(states[i], geom(i)).norm() < cfg.sim.deadlock_speed ? slow_time[i] + dt : 0.0;
      if (slow_time[i] >= cfg.sim.deadlock_time - 1e-9) {
        ro.outcome = Outcome::Deadlock;
        finish[i] = true;
        continue;
      }
      if (step == max_steps) {
        ro.outcome = Outcome::Timeout;
        finish[i] = true;
      }
    }
    for (size_t i = 0; i < n; ++i) {
      if (finish[i]) {
        active[i] = false;
        res.robots[i].end_time = t;
      }
    }
    record(step, t);
    if (std::none_of(active.begin(), active.end(), [](bool a) { return a; })) break;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Multi-robot circle exchange

inline ScenarioConfig circle_scenario(int n_robots, double radius, const Vec2& center, const ControllerParams& base) {
  if (n_robots < 2) throw std::invalid_argument("circle: at least two robots are required");
  if (!(radius > 0.0)) throw std::invalid_argument("circle: radius must be > 0");
  ScenarioConfig cfg;
  cfg.controller = base;
  cfg.method = Method::DecNetQp;
  for (int i = 0; i < n_robots; ++i) {
    const double phi = 2.0 * kPi * i / n_robots;
    RobotSpec r;
    r.limits = base.limits;
    const Vec2 p = center + radius * heading(phi);
    const double th = wrap_angle(phi + kPi);
    r.start = {p.x(), p.y(), th, 0.0, 0.0};
    const Vec2 g = center - radius * heading(phi);
    r.goal_x = g.x();
    r.goal_y = g.y();
    r.goal_theta = th;
    cfg.robots.push_back(r);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Random single-robot scenarios

struct RandomRanges {
  double arena_min = 0.0;
  double arena_max = 15.0;
  double robot_radius_min = 0.2;
  double robot_radius_max = 0.7;
  double obstacle_radius_min = 0.1;
  double obstacle_radius_max = 1.5;
  double obstacle_speed = 1.0;  // each velocity component in [-s, s]
  int obstacles = 2;
  double min_start_goal = 6.0;
  double start_clearance = 0.5;  // extra gap between obstacles and the start and goal disks
};

inline ScenarioConfig random_scenario(std::uint64_t seed, std::uint64_t index, const ControllerParams& base,
                                      const RandomRanges& rr = {}) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> pos(rr.arena_min, rr.arena_max);
  std::uniform_real_distribution<double> rrad(rr.robot_radius_min, rr.robot_radius_max);
  std::uniform_real_distribution<double> orad(rr.obstacle_radius_min, rr.obstacle_radius_max);
  std::uniform_real_distribution<double> vel(-rr.obstacle_speed, rr.obstacle_speed);

  ScenarioConfig cfg;
  cfg.controller = base;
  cfg.seed = seed;
  RobotSpec r;
  r.limits = base.limits;
  r.geometry.radius = rrad(rng);
  Vec2 s, g;
  do {
    s = Vec2(pos(rng), pos(rng));
    g = Vec2(pos(rng), pos(rng));
  } while ((g - s).norm() < rr.min_start_goal);
  const double th = std::atan2(g.y() - s.y(), g.x() - s.x());
  r.start = {s.x(), s.y(), th, 0.0, 0.0};
  r.goal_x = g.x();
  r.goal_y = g.y();
  r.goal_theta = th;
  cfg.robots.push_back(r);
  const Vec2 c0 = center_position(r.start, r.geometry);
  const Vec2 cg = r.goal().center();
  for (int k = 0; k < rr.obstacles; ++k) {
    ObstacleState o;
    do {
      o.position = Vec2(pos(rng), pos(rng));
      o.radius = orad(rng);
    } while ((o.position - c0).norm() < combined_radius(r.geometry, o.radius) + rr.start_clearance ||
             (o.position - cg).norm() < combined_radius(r.geometry, o.radius) + rr.start_clearance);
    o.velocity = Vec2(vel(rng), vel(rng));
    cfg.obstacles.push_back(o);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Batch metrics

enum class BatchCategory { Completion, Deadlock, Infeasible, Collision };

inline const char* to_string(BatchCategory c) {
  switch (c) {
    case BatchCategory::Completion: return "completion";
    case BatchCategory::Deadlock: return "deadlock";
    case BatchCategory::Infeasible: return "infeasible";
    case BatchCategory::Collision: return "collision";
  }
  return "unknown";
}

/// Completed runs count as completions; otherwise any infeasible step makes
/// the run infeasible; otherwise deadlock and timeout are deadlocks.
inline BatchCategory categorize(const RobotOutcome& r) {
  if (r.outcome == Outcome::Completed) return BatchCategory::Completion;
  if (r.infeasible_steps > 0) return BatchCategory::Infeasible;
  if (r.outcome == Outcome::Deadlock || r.outcome == Outcome::Timeout) return BatchCategory::Deadlock;
  return BatchCategory::Collision;
}

struct BatchEntry {
  std::uint64_t index = 0;
  RobotOutcome outcome;
  BatchCategory category = BatchCategory::Deadlock;
};

struct BatchMetrics {
  Method method = Method::SubQps;
  std::uint64_t seed = 0;
  std::vector<BatchEntry> entries;
  std::vector<double> solve_times;

  double rate(BatchCategory c) const {
    if (entries.empty()) return 0.0;
    const auto k = std::count_if(entries.begin(), entries.end(), [&](const BatchEntry& e) { return e.category == c; });
    return 100.0 * static_cast<double>(k) / static_cast<double>(entries.size());
  }

  /// Rates table; contains no timing so reruns are byte-identical.
  void write_table(std::ostream& os) const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "method,n,seed,completion_pct,deadlock_pct,infeasible_pct,collision_pct\n");
    os << buf;
    std::snprintf(buf, sizeof buf, "%s,%zu,%llu,%.2f,%.2f,%.2f,%.2f\n", to_string(method), entries.size(),
                  static_cast<unsigned long long>(seed), rate(BatchCategory::Completion),
                  rate(BatchCategory::Deadlock), rate(BatchCategory::Infeasible), rate(BatchCategory::Collision));
    os << buf;
  }

  void write_entries(std::ostream& os) const {
    os << "index,outcome,category,reach_time,min_clearance,infeasible_steps,steps\n";
    char buf[256];
    for (const auto& e : entries) {
      std::snprintf(buf, sizeof buf, "%llu,%s,%s,%.4f,%.9g,%d,%d\n", static_cast<unsigned long long>(e.index),
                    to_string(e.outcome.outcome), to_string(e.category),
                    std::isnan(e.outcome.reach_time) ? -1.0 : e.outcome.reach_time, e.outcome.min_clearance,
                    e.outcome.infeasible_steps, e.outcome.steps);
      os << buf;
    }
  }
};

inline BatchMetrics run_batch(int n, std::uint64_t seed, Method method, const ControllerParams& base,
                              const RandomRanges& rr = {}, const SimParams& sim = {}) {
  if (n < 1) throw std::invalid_argument("batch: n must be >= 1");
  BatchMetrics m;
  m.method = method;
  m.seed = seed;
  RunOptions opt;
  opt.record = false;
  for (int i = 0; i < n; ++i) {
    ScenarioConfig cfg = random_scenario(seed, static_cast<std::uint64_t>(i), base, rr);
    cfg.sim = sim;
    RunResult r = run_scenario(cfg, method, opt);
    BatchEntry e;
    e.index = static_cast<std::uint64_t>(i);
    e.outcome = r.robots.front();
    e.category = categorize(e.outcome);
    m.entries.push_back(e);
    m.solve_times.insert(m.solve_times.end(), r.solve_times.begin(), r.solve_times.end());
  }
  return m;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

struct MethodSummary {
  Method method = Method::SubQps;
  RunResult result;
};

inline std::vector<MethodSummary> compare_methods(const ScenarioConfig& cfg, const std::vector<Method>& methods) {
  std::vector<MethodSummary> out;
  RunOptions opt;
  opt.record = false;
  for (Method m : methods) out.push_back({m, run_scenario(cfg, m, opt)});
  return out;
}

}  // namespace vocbf
