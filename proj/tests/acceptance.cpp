// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//   acceptance --cli <vocbf_cli> --data-dir <dir with decnet.bin> [--scenario-dir <dir>] [--only 3,7]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include "oracles.hpp"
#include "vocbf/dataset.hpp"
#include "vocbf/simulation.hpp"

#ifndef VOCBF_SCENARIO_DIR
#define VOCBF_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using namespace vocbf;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Context {
  std::string cli;
  std::string data_dir;
  std::string scenario_dir = VOCBF_SCENARIO_DIR;
  std::shared_ptr<const DecisionNet> net;
  // filled by criterion 9, reused by 12
  double qps_completion = -1.0;
  double decnet_completion = -1.0;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::shared_ptr<const DecisionNet>& net_of(Context& ctx) {
  if (!ctx.net) {
    ctx.net = std::make_shared<const DecisionNet>(DecisionNet::load_file(ctx.data_dir + "/decnet.bin"));
  }
  return ctx.net;
}

ScenarioConfig scene(Context& ctx, const std::string& name) {
  ScenarioConfig cfg = load_scenario(ctx.scenario_dir + "/" + name);
  cfg.controller.net = net_of(ctx);
  return cfg;
}

ObstacleState obstacle_near(std::mt19937_64& rng, const RobotState& s, const RobotGeometry& g) {
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

// ---------------------------------------------------------------- 1
Verdict lie_derivatives(Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  const RobotGeometry g;
  const CbfParams cp;
  const Limits lim;
  const ClfGains k;
  const GoalSpec goal{2.0, -1.0, 0.3};
  long checks = 0, bad = 0;
  auto cmp = [&](double an, double fd) {
    ++checks;
    if (!oracle::close_rel(an, fd, 1e-3, 1e-6)) ++bad;
  };
  for (int i = 0; i < 10000; ++i) {
    const RobotState s = oracle::random_state(rng);
    const ControlInput u = oracle::random_input(rng);
    const ObstacleState o = obstacle_near(rng, s, g);
    const auto fd = [&](auto&& fn) { return oracle::flow_derivative(fn, s, u, o); };

    const PairRows vo = vocbf_rows(s, g, o, cp);
    for (int j = 0; j < 2; ++j) {
      const VocbfTerms& t = vo.terms[j];
      cmp(t.lf + t.lg.dot(u.vec()) + t.drift,
          fd([&](const RobotState& r, const ObstacleState& ob) { return vocbf_rows(r, g, ob, cp).terms[j].value; }));
    }
    const HocbfResult hc = hocbf_rows(s, g, o, cp);
    cmp(hc.psi1 - cp.mu1 * hc.h,
        fd([&](const RobotState& r, const ObstacleState& ob) { return hocbf_rows(r, g, ob, cp).h; }));
    cmp(hc.psi1_dot_free + hc.lg.dot(u.vec()),
        fd([&](const RobotState& r, const ObstacleState& ob) { return hocbf_rows(r, g, ob, cp).psi1; }));

    const std::array<std::function<double(const RobotState&)>, 4> hs = {
        [&](const RobotState& r) { return r.v - lim.v_min; }, [&](const RobotState& r) { return lim.v_max - r.v; },
        [&](const RobotState& r) { return r.omega + lim.omega_max; },
        [&](const RobotState& r) { return lim.omega_max - r.omega; }};
    const auto sl = state_limit_rows(s, lim, cp);
    for (int j = 0; j < 4; ++j) {
      cmp(sl[static_cast<size_t>(j)].value(u.vec()) - cp.mu * hs[static_cast<size_t>(j)](s),
          fd([&](const RobotState& r, const ObstacleState&) { return hs[static_cast<size_t>(j)](r); }));
    }

    cmp(vd_terms(s, g, goal, k).derivative(u),
        fd([&](const RobotState& r, const ObstacleState&) { return eval_Vd(r, g, goal, k); }));
    const auto he = heading_error(s, g, goal);
    if (he && std::abs(he->error) < 3.0) {
      cmp(vtheta_terms(s, g, goal, k)->derivative(u),
          fd([&](const RobotState& r, const ObstacleState&) { return eval_Vtheta(r, g, goal, k); }));
    }
    cmp(vv_terms(s, g, goal, k, lim.v_max).derivative(u),
        fd([&](const RobotState& r, const ObstacleState&) { return eval_Vv(r, g, goal, k, lim.v_max); }));
    cmp(vomega_terms(s).derivative(u), fd([&](const RobotState& r, const ObstacleState&) { return eval_Vomega(r); }));
  }
  const double t = seconds_since(t0);
  return {bad == 0 && t < 10.0,
          std::to_string(checks) + " derivatives, " + std::to_string(bad) + " mismatches, " + fmt("%.2f s", t)};
}

// ---------------------------------------------------------------- 2
Verdict lg_nonzero(Context&) {
  std::mt19937_64 rng(102);
  const RobotGeometry g;
  long tested = 0, bad = 0;
  for (int i = 0; i < 100000; ++i) {
    const RobotState s = oracle::random_state(rng);
    if (std::abs(std::cos(s.theta)) <= 1e-3) continue;
    const ObstacleState o = obstacle_near(rng, s, g);
    const PairRows rows = vocbf_rows(s, g, o, {});
    ++tested;
    if (!(rows.terms[0].lg.norm() > 1e-9) || !(rows.terms[1].lg.norm() > 1e-9)) ++bad;
  }
  return {bad == 0, std::to_string(tested) + " states, " + std::to_string(bad) + " with |L_g h| <= 1e-9"};
}

// ---------------------------------------------------------------- 3
Verdict cone_membership(Context&) {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(-5, 5);
  std::uniform_real_distribution<double> frac(0.01, 0.99);
  long compared = 0, bad = 0;
  for (int i = 0; i < 100000; ++i) {
    const Vec2 p(u(rng), u(rng));
    const double r = frac(rng) * p.norm();
    const Vec2 v(u(rng), u(rng));
    const auto h = vocbf_values(vo_cone(p, v, r));
    if (std::abs(h[0]) < 1e-9 || std::abs(h[1]) < 1e-9) continue;
    ++compared;
    if ((h[0] < 0 && h[1] < 0) != oracle::ray_hits_disk(-p, r, v)) ++bad;
  }
  return {bad == 0 && compared > 95000, std::to_string(compared) + " samples, " + std::to_string(bad) + " disagreements"};
}

// ---------------------------------------------------------------- 4
Verdict rvo_half(Context&) {
  std::mt19937_64 rng(104);
  const RobotGeometry g;
  long pairs = 0, bad = 0;
  while (pairs < 10000) {
    const RobotState si = oracle::random_state(rng);
    const RobotState sj = oracle::random_state(rng);
    if ((center_position(si, g) - center_position(sj, g)).norm() < 1.0) continue;
    ++pairs;
    const PairRows rvo = rvo_rows(si, g, sj, g, {});
    const MovingDisk md = as_moving_disk(sj, g);
    ObstacleState as_obs;
    as_obs.position = md.position;
    as_obs.velocity = md.velocity;
    as_obs.acceleration = md.acceleration;
    as_obs.radius = g.radius;
    const PairRows vo = vocbf_rows(si, g, as_obs, {});
    for (int k = 0; k < 2; ++k) {
      const double hv = vo.terms[k].value;
      const bool value_ok = std::abs(rvo.terms[k].value - 0.5 * hv) <= 1e-12 * (1 + std::abs(hv));
      const bool row_ok = (rvo.rows[k].coeff_u - 0.5 * vo.rows[k].coeff_u).norm() <= 1e-12 * (1 + vo.rows[k].coeff_u.norm()) &&
                          std::abs(rvo.rows[k].constant - 0.5 * vo.rows[k].constant) <=
                              1e-12 * (1 + std::abs(vo.rows[k].constant));
      if (!value_ok || !row_ok) ++bad;
    }
  }
  return {bad == 0, std::to_string(pairs) + " pairs, " + std::to_string(bad) + " rows off the 1/2 ratio"};
}

// ---------------------------------------------------------------- 5
struct Instance {
  QpProblem base;
  std::vector<DisjunctivePair> pairs;
};

Instance controller_instance(std::mt19937_64& rng, int m) {
  const RobotGeometry g;
  std::uniform_real_distribution<double> u01(0, 1);
  Instance inst;
  const RobotState s{u01(rng) * 2, u01(rng) * 2, (u01(rng) - 0.5) * 2, 4 * u01(rng), u01(rng) - 0.5};
  const GoalSpec goal{12, 10, 0};
  inst.base.rows = clf_rows(s, g, goal, ClfGains{}, 4.0);
  for (const auto& r : state_limit_rows(s, Limits{}, CbfParams{})) inst.base.rows.push_back(r);
  inst.base.u_pre = {(u01(rng) - 0.5) * 2, (u01(rng) - 0.5) * 1.2};
  inst.base.box = input_box(Limits{}, inst.base.u_pre, 0.05);
  for (int j = 0; j < m; ++j) {
    ObstacleState o;
    o.radius = 0.1 + 1.4 * u01(rng);
    do {
      o.position = center_position(s, g) + Vec2(8 * u01(rng) - 2, 8 * u01(rng) - 4);
    } while ((o.position - center_position(s, g)).norm() < combined_radius(g, o.radius) + 0.05);
    o.velocity = Vec2(2 * u01(rng) - 1, 2 * u01(rng) - 1);
    inst.pairs.push_back(DisjunctivePair::from(vocbf_rows(s, g, o, CbfParams{})));
  }
  return inst;
}

Verdict miqp_vs_enumeration(Context&) {
  std::mt19937_64 rng(105);
  int optimal = 0, bad_miqp = 0, bad_prescreen = 0;
  for (int t = 0; t < 500; ++t) {
    const Instance inst = controller_instance(rng, 1 + t % 3);
    const DisjunctiveResult with = enumerate_subqps(inst.base, inst.pairs, true);
    const DisjunctiveResult without = enumerate_subqps(inst.base, inst.pairs, false);
    const DisjunctiveResult mi = solve_miqp(inst.base, inst.pairs);
    if (with.optimal() != without.optimal() ||
        (with.optimal() && (with.assignment != without.assignment ||
                            with.solution.objective != without.solution.objective))) {
      ++bad_prescreen;
    }
    if (with.optimal() != mi.optimal()) {
      ++bad_miqp;
    } else if (with.optimal()) {
      ++optimal;
      const double tol = 1e-6 * std::max(1.0, std::abs(with.solution.objective));
      if (std::abs(mi.solution.objective - with.solution.objective) > tol) ++bad_miqp;
    }
  }
  return {bad_miqp == 0 && bad_prescreen == 0,
          std::to_string(optimal) + "/500 feasible, " + std::to_string(bad_miqp) + " miqp mismatches, " +
              std::to_string(bad_prescreen) + " prescreen mismatches"};
}

// ---------------------------------------------------------------- 6
Verdict dense_qp(Context&) {
  std::mt19937_64 rng(106);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> dim(2, 5);
  std::uniform_int_distribution<int> rows(0, 10);
  int optimal = 0, infeasible = 0, bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = dim(rng);
    const int m = rows(rng);
    const Eigen::MatrixXd L = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return u(rng); });
    const Eigen::MatrixXd G = L * L.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd a = Eigen::VectorXd::NullaryExpr(n, [&] { return 3 * u(rng); });
    const Eigen::MatrixXd C = Eigen::MatrixXd::NullaryExpr(m, n, [&] { return u(rng); });
    const Eigen::VectorXd d = Eigen::VectorXd::NullaryExpr(m, [&] { return u(rng); });
    const DenseQpResult r = solve_dense_qp(G, a, C, d);
    const auto ref = oracle::exhaustive_qp(G, a, C, d);
    if (r.status == QpStatus::Optimal) {
      ++optimal;
      if (!ref || (r.x - ref->x).norm() > 1e-6 ||
          std::abs(r.objective - ref->objective) > 1e-6 * std::max(1.0, std::abs(ref->objective))) {
        ++bad;
      }
    } else {
      ++infeasible;
      const Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, -5.0);
      const Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, 5.0);
      if (ref || oracle::grid_feasible(C, d, lo, hi, n <= 3 ? 41 : 13)) ++bad;
    }
  }
  return {bad == 0, std::to_string(optimal) + " optimal, " + std::to_string(infeasible) +
                        " infeasible (grid-confirmed empty), " + std::to_string(bad) + " mismatches"};
}

// ---------------------------------------------------------------- 7
Verdict two_obstacle(Context& ctx) {
  bool ok = true;
  std::string detail;
  for (const char* name : {"two_obstacle_static.json", "two_obstacle_dynamic.json"}) {
    const ScenarioConfig cfg = scene(ctx, name);
    const auto t0 = std::chrono::steady_clock::now();
    for (Method m : {Method::Miqp, Method::SubQps, Method::DecNetQp}) {
      const RunResult r = run_scenario(cfg, m);
      const auto& o = r.robots.front();
      const bool good = o.outcome == Outcome::Completed && o.min_clearance >= 0.0;
      ok = ok && good;
      detail += std::string(name).substr(0, std::string(name).find('.')) + "/" + to_string(m) + " " +
                to_string(o.outcome) + fmt(" clr %.3f; ", o.min_clearance);
    }
    const double t = seconds_since(t0);
    ok = ok && t < 5.0;
    detail += fmt("%.2f s; ", t);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- 8
Verdict crossing(Context& ctx) {
  const ScenarioConfig slow = scene(ctx, "crossing_slow.json");
  const ScenarioConfig fast = scene(ctx, "crossing_fast.json");
  const auto vs = run_scenario(slow, Method::SubQps).robots.front();
  const auto hs = run_scenario(slow, Method::Hocbf).robots.front();
  const auto vf = run_scenario(fast, Method::SubQps).robots.front();
  const auto hf = run_scenario(fast, Method::Hocbf).robots.front();
  const bool ok = vs.outcome == Outcome::Completed && hs.outcome == Outcome::Completed &&
                  vs.reach_time < hs.reach_time && vf.outcome == Outcome::Completed &&
                  hf.outcome != Outcome::Completed;
  std::string d = fmt("slow: vocbf %.2f s", vs.reach_time) + fmt(" vs hocbf %.2f s", hs.reach_time) +
                  " (" + to_string(hs.outcome) + "); fast: vocbf " + to_string(vf.outcome) +
                  fmt(" %.2f s", vf.reach_time) + ", hocbf " + to_string(hf.outcome);
  return {ok, d};
}

// ---------------------------------------------------------------- 9
Verdict table4(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  ControllerParams base;
  base.net = net_of(ctx);
  const BatchMetrics q = run_batch(200, 7, Method::SubQps, base);
  const BatchMetrics d = run_batch(200, 7, Method::DecNetQp, base);
  const double t = seconds_since(t0);
  ctx.qps_completion = q.rate(BatchCategory::Completion);
  ctx.decnet_completion = d.rate(BatchCategory::Completion);
  const double qi = q.rate(BatchCategory::Infeasible);
  const double di = d.rate(BatchCategory::Infeasible);
  const bool ok = ctx.qps_completion >= 80.0 && std::abs(ctx.qps_completion - ctx.decnet_completion) <= 15.0 &&
                  qi <= di && t < 600.0;
  return {ok, fmt("qps completion %.1f%%", ctx.qps_completion) + fmt(" infeasible %.1f%%", qi) +
                  fmt("; decnet completion %.1f%%", ctx.decnet_completion) + fmt(" infeasible %.1f%%", di) +
                  fmt("; %.1f s", t)};
}

// ---------------------------------------------------------------- 10
Verdict table3(Context& ctx) {
  const ScenarioConfig cfg = scene(ctx, "two_obstacle_dynamic.json");
  const std::array<Method, 3> ms = {Method::DecNetQp, Method::SubQps, Method::Miqp};
  // three interleaved rounds; the per-method figure is the smallest round median
  std::array<double, 3> med;
  med.fill(std::numeric_limits<double>::infinity());
  for (int round = 0; round < 3; ++round) {
    for (size_t i = 0; i < ms.size(); ++i) {
      RunOptions opt;
      opt.record = false;
      med[i] = std::min(med[i], median(run_scenario(cfg, ms[i], opt).solve_times));
    }
  }
  return {med[0] < med[1] && med[1] < med[2], fmt("median step: decnet %.4f ms", 1e3 * med[0]) +
                                                  fmt(", qps %.4f ms", 1e3 * med[1]) +
                                                  fmt(", miqp %.4f ms", 1e3 * med[2])};
}

// ---------------------------------------------------------------- 11
Verdict circles(Context& ctx) {
  ControllerParams base;
  base.net = net_of(ctx);
  bool ok = true;
  std::string detail;
  for (int n : {6, 8}) {
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioConfig cfg = circle_scenario(n, 5.0, Vec2(7, 7), base);
    const RunResult r = run_scenario(cfg, cfg.method);
    const double t = seconds_since(t0);
    int done = 0;
    for (const auto& o : r.robots) done += o.outcome == Outcome::Completed;
    const bool good = r.all_completed() && r.min_clearance() >= 0.0 && t < 30.0;
    ok = ok && good;
    detail += "n=" + std::to_string(n) + " " + std::to_string(done) + "/" + std::to_string(n) +
              fmt(" completed, min clr %.3f", r.min_clearance()) + fmt(", %.2f s; ", t);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- 12
Verdict decision_net(Context& ctx) {
  std::mt19937_64 rng(112);
  std::uniform_real_distribution<double> u(-3, 3);
  DecisionNet net(5, 7);
  std::vector<LabeledSample> data;
  for (int k = 0; k < 3; ++k) {
    LabeledSample s;
    for (int j = 0; j < 2; ++j) s.features.obstacles.push_back({u(rng), u(rng), u(rng), u(rng), 1 + std::abs(u(rng))});
    s.features.target = {u(rng), u(rng), 4 + u(rng)};
    s.labels = {k % 3, (k + 1) % 3};
    data.push_back(s);
  }
  std::vector<const LabeledSample*> batch;
  for (const auto& s : data) batch.push_back(&s);
  NetGradients grad(net);
  net.loss(batch, &grad);
  long params = 0, bad = 0;
  const double eps = 1e-6;
  for (int l = 0; l < DecisionNet::kNumLayers; ++l) {
    auto check = [&](double& w, double analytic) {
      const double keep = w;
      w = keep + eps;
      const double lp = net.loss(batch, nullptr);
      w = keep - eps;
      const double lm = net.loss(batch, nullptr);
      w = keep;
      const double fd = (lp - lm) / (2 * eps);
      ++params;
      if (std::abs(fd - analytic) > 1e-4 * std::max(std::abs(fd), 1e-4)) ++bad;
    };
    DenseLayer& layer = net.layer(l);
    for (Eigen::Index i = 0; i < layer.W.size(); ++i) check(layer.W.data()[i], grad.layers[l].W.data()[i]);
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) check(layer.b(i), grad.layers[l].b(i));
  }
  if (ctx.qps_completion < 0) table4(ctx);
  const double gap = std::abs(ctx.qps_completion - ctx.decnet_completion);
  return {bad == 0 && gap <= 15.0, std::to_string(params) + " parameters, " + std::to_string(bad) +
                                       " gradient mismatches; completion gap " + fmt("%.1f points", gap)};
}

// ---------------------------------------------------------------- 13
std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Verdict determinism(Context& ctx) {
  const fs::path dir = fs::temp_directory_path() / ("vocbf_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::array<std::string, 2> out;
  int rc = 0;
  for (int k = 0; k < 2; ++k) {
    const fs::path f = dir / ("table" + std::to_string(k) + ".txt");
    const std::string cmd = "\"" + ctx.cli + "\" --weights \"" + ctx.data_dir + "/decnet.bin\" batch --seed 7 --method decnet > \"" +
                            f.string() + "\"";
    rc |= std::system(cmd.c_str());
    out[static_cast<size_t>(k)] = slurp(f);
  }
  fs::remove_all(dir);
  const bool ok = rc == 0 && !out[0].empty() && out[0] == out[1];
  return {ok, rc != 0 ? "cli exited nonzero" : std::to_string(out[0].size()) + " bytes, " +
                                                   (out[0] == out[1] ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << a << '\n';
        std::exit(2);
      }
      return argv[++i];
    };
    if (a == "--cli") ctx.cli = next();
    else if (a == "--data-dir") ctx.data_dir = next();
    else if (a == "--scenario-dir") ctx.scenario_dir = next();
    else if (a == "--only") {
      std::stringstream ss(next());
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else {
      std::cerr << "unknown argument " << a << '\n';
      return 2;
    }
  }
  if (ctx.cli.empty() || ctx.data_dir.empty()) {
    std::cerr << "usage: acceptance --cli <vocbf_cli> --data-dir <dir> [--scenario-dir <dir>] [--only 1,2]\n";
    return 2;
  }

  const std::vector<std::pair<const char*, Verdict (*)(Context&)>> criteria = {
      {"Lie derivatives vs finite differences", lie_derivatives},
      {"VOCBF input coefficient nonzero", lg_nonzero},
      {"cone membership vs ray-disk", cone_membership},
      {"RVO rows are half of VO rows", rvo_half},
      {"MIQP vs enumeration, LP prescreen", miqp_vs_enumeration},
      {"dense QP vs active-set oracle", dense_qp},
      {"two-obstacle static/dynamic scenes", two_obstacle},
      {"VOCBF vs HOCBF slow/fast obstacle", crossing},
      {"batch rates, enumeration vs decision net", table4},
      {"solve time ordering", table3},
      {"circle exchange n=6, n=8", circles},
      {"decision net gradients and batch gap", decision_net},
      {"batch table determinism", determinism},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Verdict o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
