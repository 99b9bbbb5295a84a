// Scenario documents (JSON). Every parameter has a default, so an empty
// "params" object gives the reference setup.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "vocbf/controller.hpp"

namespace vocbf {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what) : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct RobotSpec {
  RobotState start;  // rear-axle pose and initial velocities
  double goal_x = 0.0;
  double goal_y = 0.0;
  double goal_theta = 0.0;  // rear-axle goal pose
  RobotGeometry geometry;
  Limits limits;

  GoalSpec goal() const { return GoalSpec::from_rear_axle(goal_x, goal_y, goal_theta, geometry); }
};

struct SimParams {
  double t_max = 40.0;
  double goal_tolerance = 0.25;   // center-to-goal distance for completion
  double deadlock_speed = 0.05;   // center speed
  double deadlock_time = 3.0;     // s below deadlock_speed
};

struct ScenarioConfig {
  std::vector<RobotSpec> robots;
  std::vector<ObstacleState> obstacles;
  ControllerParams controller;
  SimParams sim;
  Method method = Method::SubQps;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const {
    if (robots.empty()) throw ConfigError("robots", "at least one robot is required");
    if (!(controller.dt > 0.0)) throw ConfigError("params.dt", "must be > 0");
    if (!(sim.t_max > controller.dt)) throw ConfigError("params.t_max", "must exceed dt");
    if (!(sim.goal_tolerance > 0.0)) throw ConfigError("params.goal_tolerance", "must be > 0");
    auto wrap = [](const std::string& path, auto&& fn) {
      try {
        fn();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
      }
    };
    wrap("params", [&] { controller.validate(); });
    for (size_t i = 0; i < robots.size(); ++i) {
      const std::string path = "robots[" + std::to_string(i) + "]";
      wrap(path, [&] { robots[i].geometry.validate(); });
      wrap(path + ".limits", [&] { robots[i].limits.validate(); });
      if (!robots[i].start.finite()) throw ConfigError(path + ".start", "must be finite");
      if (robots[i].start.v < robots[i].limits.v_min || robots[i].start.v > robots[i].limits.v_max) {
        throw ConfigError(path + ".start", "initial speed outside [v_min, v_max]");
      }
    }
    for (size_t i = 0; i < obstacles.size(); ++i) {
      if (!(obstacles[i].radius > 0.0)) {
        throw ConfigError("obstacles[" + std::to_string(i) + "].radius", "must be > 0");
      }
    }
    // no initial overlaps (physical radii)
    for (size_t i = 0; i < robots.size(); ++i) {
      const Vec2 ci = center_position(robots[i].start, robots[i].geometry);
      for (size_t j = 0; j < obstacles.size(); ++j) {
        if ((ci - obstacles[j].position).norm() <= robots[i].geometry.radius + obstacles[j].radius) {
          throw ConfigError("obstacles[" + std::to_string(j) + "]",
                            "overlaps robots[" + std::to_string(i) + "] at start");
        }
      }
      for (size_t j = i + 1; j < robots.size(); ++j) {
        const Vec2 cj = center_position(robots[j].start, robots[j].geometry);
        if ((ci - cj).norm() <= robots[i].geometry.radius + robots[j].geometry.radius) {
          throw ConfigError("robots[" + std::to_string(j) + "]", "overlaps robots[" + std::to_string(i) + "] at start");
        }
      }
    }
  }
};

namespace detail {

using nlohmann::json;

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

inline void read_number(const json& obj, const char* key, double& out, const std::string& path) {
  if (obj.contains(key)) out = get_number(obj.at(key), path + "." + key);
}

inline std::vector<double> get_array(const json& j, size_t n, const std::string& path) {
  if (!j.is_array() || j.size() != n) throw ConfigError(path, "expected an array of " + std::to_string(n) + " numbers");
  std::vector<double> out;
  for (size_t i = 0; i < n; ++i) out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline Vec2 get_vec2(const json& j, const std::string& path) {
  const auto v = get_array(j, 2, path);
  return {v[0], v[1]};
}

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || item.key() == k;
    if (!ok) throw ConfigError(path + "." + item.key(), "unknown field");
  }
}

inline void read_limits(const json& j, Limits& lim, const std::string& path) {
  check_keys(j, {"v_min", "v_max", "omega_max", "a_max", "alpha_max", "delta_a_max", "delta_alpha_max"}, path);
  read_number(j, "v_min", lim.v_min, path);
  read_number(j, "v_max", lim.v_max, path);
  read_number(j, "omega_max", lim.omega_max, path);
  read_number(j, "a_max", lim.a_max, path);
  read_number(j, "alpha_max", lim.alpha_max, path);
  read_number(j, "delta_a_max", lim.delta_a_max, path);
  read_number(j, "delta_alpha_max", lim.delta_alpha_max, path);
}

inline Eigen::Matrix2d get_mat2(const json& j, const std::string& path) {
  const auto v = get_array(j, 4, path);
  Eigen::Matrix2d m;
  m << v[0], v[1], v[2], v[3];
  return m;
}

inline void read_params(const json& j, ScenarioConfig& cfg, double& d_s) {
  const std::string path = "params";
  check_keys(j,
             {"dt", "t_max", "d_s", "goal_tolerance", "deadlock_speed", "deadlock_time", "limits", "gains", "weights",
              "mu", "mu1", "mu2", "sensing_radius", "max_obstacles", "lp_prescreen", "big_m_factor", "net_confidence", "net_max_uncertain", "net_exact_fallback",
              "seed"},
             path);
  ControllerParams& c = cfg.controller;
  read_number(j, "dt", c.dt, path);
  read_number(j, "t_max", cfg.sim.t_max, path);
  read_number(j, "d_s", d_s, path);
  read_number(j, "goal_tolerance", cfg.sim.goal_tolerance, path);
  read_number(j, "deadlock_speed", cfg.sim.deadlock_speed, path);
  read_number(j, "deadlock_time", cfg.sim.deadlock_time, path);
  if (j.contains("limits")) read_limits(j.at("limits"), c.limits, path + ".limits");
  if (j.contains("gains")) {
    const json& g = j.at("gains");
    const std::string gp = path + ".gains";
    check_keys(g,
               {"c1", "c2", "k1", "k2", "k_theta", "v_d_gain", "v_d_cap", "gamma_d", "gamma_theta", "gamma_v",
                "gamma_omega", "heading_goal_tolerance"},
               gp);
    read_number(g, "c1", c.gains.c1, gp);
    read_number(g, "c2", c.gains.c2, gp);
    read_number(g, "k1", c.gains.k1, gp);
    read_number(g, "k2", c.gains.k2, gp);
    read_number(g, "k_theta", c.gains.k_theta, gp);
    read_number(g, "v_d_gain", c.gains.v_d_gain, gp);
    read_number(g, "v_d_cap", c.gains.v_d_cap, gp);
    read_number(g, "gamma_d", c.gains.gamma_d, gp);
    read_number(g, "gamma_theta", c.gains.gamma_theta, gp);
    read_number(g, "gamma_v", c.gains.gamma_v, gp);
    read_number(g, "gamma_omega", c.gains.gamma_omega, gp);
    read_number(g, "heading_goal_tolerance", c.gains.heading_goal_tolerance, gp);
  }
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    const std::string wp = path + ".weights";
    check_keys(w, {"H", "R", "P"}, wp);
    if (w.contains("H")) c.weights.H = get_mat2(w.at("H"), wp + ".H");
    if (w.contains("R")) c.weights.R = get_mat2(w.at("R"), wp + ".R");
    if (w.contains("P")) {
      const auto p = get_array(w.at("P"), 4, wp + ".P");
      c.weights.P << p[0], p[1], p[2], p[3];
    }
  }
  read_number(j, "mu", c.cbf.mu, path);
  read_number(j, "mu1", c.cbf.mu1, path);
  read_number(j, "mu2", c.cbf.mu2, path);
  read_number(j, "sensing_radius", c.sensing_radius, path);
  read_number(j, "big_m_factor", c.miqp.big_m_factor, path);
  read_number(j, "net_confidence", c.net_confidence, path);
  if (j.contains("net_max_uncertain")) {
    const json& m = j.at("net_max_uncertain");
    if (!m.is_number_integer() || m.get<long long>() < 0 || m.get<long long>() > 10) {
      throw ConfigError(path + ".net_max_uncertain", "expected an integer in [0, 10]");
    }
    c.net_max_uncertain = m.get<size_t>();
  }
  if (j.contains("max_obstacles")) {
    const json& m = j.at("max_obstacles");
    if (!m.is_number_integer() || m.get<long long>() < 1 || m.get<long long>() > 10) {
      throw ConfigError(path + ".max_obstacles", "expected an integer in [1, 10]");
    }
    c.max_obstacles = m.get<size_t>();
  }
  if (j.contains("net_exact_fallback")) {
    if (!j.at("net_exact_fallback").is_boolean()) throw ConfigError(path + ".net_exact_fallback", "expected a boolean");
    c.net_exact_fallback = j.at("net_exact_fallback").get<bool>();
  }
  if (j.contains("lp_prescreen")) {
    if (!j.at("lp_prescreen").is_boolean()) throw ConfigError(path + ".lp_prescreen", "expected a boolean");
    c.lp_prescreen = j.at("lp_prescreen").get<bool>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError(path + ".seed", "expected a non-negative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const nlohmann::json& doc) {
  using detail::get_array;
  using detail::get_number;
  using detail::get_vec2;
  ScenarioConfig cfg;
  detail::check_keys(doc, {"robots", "obstacles", "params", "method", "name"}, "$");
  double d_s = RobotGeometry{}.safe_margin;
  if (doc.contains("params")) detail::read_params(doc.at("params"), cfg, d_s);
  if (doc.contains("method")) {
    if (!doc.at("method").is_string()) throw ConfigError("method", "expected a string");
    try {
      cfg.method = parse_method(doc.at("method").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("method", e.what());
    }
  }
  if (!doc.contains("robots") || !doc.at("robots").is_array()) throw ConfigError("robots", "expected an array");
  for (size_t i = 0; i < doc.at("robots").size(); ++i) {
    const auto& r = doc.at("robots")[i];
    const std::string path = "robots[" + std::to_string(i) + "]";
    detail::check_keys(r, {"start", "goal", "radius", "l", "v0", "omega0", "limits"}, path);
    RobotSpec rs;
    rs.limits = cfg.controller.limits;
    rs.geometry.safe_margin = d_s;
    if (!r.contains("start")) throw ConfigError(path + ".start", "missing");
    if (!r.contains("goal")) throw ConfigError(path + ".goal", "missing");
    const auto s = get_array(r.at("start"), 3, path + ".start");
    const auto g = get_array(r.at("goal"), 3, path + ".goal");
    rs.start = {s[0], s[1], wrap_angle(s[2]), 0.0, 0.0};
    detail::read_number(r, "v0", rs.start.v, path);
    detail::read_number(r, "omega0", rs.start.omega, path);
    rs.goal_x = g[0];
    rs.goal_y = g[1];
    rs.goal_theta = g[2];
    detail::read_number(r, "radius", rs.geometry.radius, path);
    detail::read_number(r, "l", rs.geometry.l, path);
    if (r.contains("limits")) detail::read_limits(r.at("limits"), rs.limits, path + ".limits");
    cfg.robots.push_back(rs);
  }
  if (doc.contains("obstacles")) {
    if (!doc.at("obstacles").is_array()) throw ConfigError("obstacles", "expected an array");
    for (size_t i = 0; i < doc.at("obstacles").size(); ++i) {
      const auto& o = doc.at("obstacles")[i];
      const std::string path = "obstacles[" + std::to_string(i) + "]";
      detail::check_keys(o, {"position", "velocity", "acceleration", "radius"}, path);
      ObstacleState ob;
      if (!o.contains("position")) throw ConfigError(path + ".position", "missing");
      if (!o.contains("radius")) throw ConfigError(path + ".radius", "missing");
      ob.position = get_vec2(o.at("position"), path + ".position");
      if (o.contains("velocity")) ob.velocity = get_vec2(o.at("velocity"), path + ".velocity");
      if (o.contains("acceleration")) ob.acceleration = get_vec2(o.at("acceleration"), path + ".acceleration");
      ob.radius = get_number(o.at("radius"), path + ".radius");
      cfg.obstacles.push_back(ob);
    }
  }
  cfg.validate();
  return cfg;
}

inline ScenarioConfig load_scenario(const std::string& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open scenario file " + file);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

}  // namespace vocbf
