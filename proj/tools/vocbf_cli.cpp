// Command-line front end: single scenarios, batches, circle exchange, method
// comparison, dataset generation and decision-net training.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "vocbf/dataset.hpp"
#include "vocbf/simulation.hpp"

#ifndef VOCBF_DEFAULT_WEIGHTS
#define VOCBF_DEFAULT_WEIGHTS "data/decnet.bin"
#endif

namespace fs = std::filesystem;
using namespace vocbf;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void attach_net(ControllerParams& p, Method m, const std::string& weights) {
  if (m != Method::DecNetQp || p.net) return;
  p.net = std::make_shared<const DecisionNet>(DecisionNet::load_file(weights));
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

json nan_as_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json summary_json(const RunResult& r, Method m) {
  json j;
  j["method"] = to_string(m);
  j["all_completed"] = r.all_completed();
  j["robots"] = json::array();
  for (const auto& o : r.robots) {
    j["robots"].push_back({{"outcome", to_string(o.outcome)},
                           {"reach_time", nan_as_null(o.reach_time)},
                           {"end_time", o.end_time},
                           {"min_clearance", o.min_clearance},
                           {"min_margin_clearance", o.min_margin_clearance},
                           {"steps", o.steps},
                           {"infeasible_steps", o.infeasible_steps},
                           {"margin_steps", o.margin_steps},
                           {"path_length", o.path_length},
                           {"mean_abs_relaxation", o.steps ? o.relax_sum / o.steps : 0.0},
                           {"mean_sq_input_change", o.steps ? o.du_sq_sum / o.steps : 0.0}});
  }
  j["timing"] = {{"median_solve_ms", nan_as_null(1e3 * median(r.solve_times))},
                 {"mean_solve_ms", nan_as_null(1e3 * mean(r.solve_times))},
                 {"calls", r.solve_times.size()}};
  return j;
}

void write_run(const std::string& out, const RunResult& r, Method m) {
  ensure_dir(out);
  auto traj = open_out(fs::path(out) / "trajectory.csv");
  r.log.write_csv(traj);
  auto sum = open_out(fs::path(out) / "summary.json");
  sum << summary_json(r, m).dump(2) << '\n';
}

void print_outcomes(const RunResult& r) {
  for (size_t i = 0; i < r.robots.size(); ++i) {
    const auto& o = r.robots[i];
    std::printf("robot %zu: %s reach_time=%s min_clearance=%.4f infeasible_steps=%d\n", i, to_string(o.outcome),
                std::isfinite(o.reach_time) ? std::to_string(o.reach_time).c_str() : "n/a", o.min_clearance,
                o.infeasible_steps);
  }
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_method(item));
  }
  if (out.empty()) throw UsageError("--methods: empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Velocity-obstacle barrier controller: simulation and evaluation"};
  app.require_subcommand(1);
  std::string weights = VOCBF_DEFAULT_WEIGHTS;
  app.add_option("--weights", weights, "Decision network weights")->capture_default_str();

  std::string scenario, method = "qps", out, methods = "decnet,qps,miqp,hocbf";
  int n = 100, robots = 6;
  std::uint64_t seed = 7;
  double radius = 5.0, cx = 7.0, cy = 7.0;

  auto* sim = app.add_subcommand("simulate", "Run one scenario file");
  sim->add_option("--scenario", scenario, "Scenario JSON")->required();
  auto* sim_method = sim->add_option("--method", method, "miqp|qps|decnet|hocbf|vo (default: from the file)");
  sim->add_option("--out", out, "Output directory")->required();

  auto* batch = app.add_subcommand("batch", "Run seeded random scenarios and print the rate table");
  batch->add_option("--n", n, "Number of scenarios")->capture_default_str();
  batch->add_option("--seed", seed, "Seed")->capture_default_str();
  batch->add_option("--method", method, "miqp|qps|decnet|hocbf|vo")->capture_default_str();
  batch->add_option("--out", out, "Directory for per-scenario outcomes and timing");

  std::string circle_method = "decnet";
  auto* circle = app.add_subcommand("circle", "Antipodal exchange of robots on a circle");
  circle->add_option("--robots", robots, "Number of robots")->capture_default_str();
  circle->add_option("--radius", radius, "Circle radius")->capture_default_str();
  circle->add_option("--cx", cx, "Circle center x")->capture_default_str();
  circle->add_option("--cy", cy, "Circle center y")->capture_default_str();
  circle->add_option("--method", circle_method, "miqp|qps|decnet|hocbf|vo")->capture_default_str();
  circle->add_option("--out", out, "Output directory");

  auto* cmp = app.add_subcommand("compare", "Run several methods on one scenario");
  cmp->add_option("--scenario", scenario, "Scenario JSON")->required();
  cmp->add_option("--methods", methods, "Comma-separated methods")->capture_default_str();

  DatasetOptions dopt;
  auto* gen = app.add_subcommand("gen-dataset", "Label states with the enumeration oracle along simulated rollouts");
  gen->add_option("--n", dopt.scenarios, "Number of scenarios")->capture_default_str();
  gen->add_option("--seed", dopt.seed, "Seed")->capture_default_str();
  gen->add_option("--out", out, "Dataset file")->required();
  gen->add_option("--exchange-every", dopt.multi_robot_every, "Every k-th scenario is a multi-robot exchange; 0 for none")
      ->capture_default_str();
  gen->add_option("--jitter", dopt.exchange_jitter, "Angular jitter scale of exchange scenes; 0 for exact circles")
      ->capture_default_str();
  std::string policy;
  gen->add_option("--policy", policy, "Drive rollouts with these network weights (labels stay oracle)");

  TrainOptions topt;
  std::vector<std::string> data;
  auto* tr = app.add_subcommand("train-decnet", "Train the decision network");
  tr->add_option("--data", data, "Dataset file(s), concatenated")->required();
  tr->add_option("--out", out, "Weights file")->required();
  tr->add_option("--epochs", topt.epochs, "Epochs")->capture_default_str();
  tr->add_option("--lr", topt.lr, "Learning rate")->capture_default_str();
  tr->add_option("--seed", topt.seed, "Initialization and shuffling seed")->capture_default_str();
  tr->add_option("--width", topt.width, "Hidden width")->capture_default_str();
  tr->add_option("--batch", topt.batch_size, "Mini-batch size")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    ControllerParams base;
    if (sim->parsed()) {
      ScenarioConfig cfg = load_scenario(scenario);
      const Method m = sim_method->count() ? parse_method(method) : cfg.method;
      attach_net(cfg.controller, m, weights);
      const RunResult r = run_scenario(cfg, m);
      write_run(out, r, m);
      print_outcomes(r);
    } else if (batch->parsed()) {
      if (n < 1) throw UsageError("--n must be >= 1");
      const Method m = parse_method(method);
      attach_net(base, m, weights);
      const BatchMetrics b = run_batch(n, seed, m, base);
      b.write_table(std::cout);
      if (!out.empty()) {
        ensure_dir(out);
        auto t = open_out(fs::path(out) / "metrics.csv");
        b.write_table(t);
        auto e = open_out(fs::path(out) / "scenarios.csv");
        b.write_entries(e);
        auto tm = open_out(fs::path(out) / "timing.txt");
        tm << "median_solve_ms " << 1e3 * median(b.solve_times) << "\nmean_solve_ms " << 1e3 * mean(b.solve_times)
           << "\ncalls " << b.solve_times.size() << '\n';
      }
    } else if (circle->parsed()) {
      const Method m = parse_method(circle_method);
      attach_net(base, m, weights);
      const ScenarioConfig cfg = circle_scenario(robots, radius, Vec2(cx, cy), base);
      const RunResult r = run_scenario(cfg, m);
      if (!out.empty()) write_run(out, r, m);
      print_outcomes(r);
      std::printf("all completed: %s\n", r.all_completed() ? "yes" : "no");
    } else if (cmp->parsed()) {
      ScenarioConfig cfg = load_scenario(scenario);
      const auto ms = parse_methods(methods);
      for (Method m : ms) attach_net(cfg.controller, m, weights);
      std::printf("%-8s %-10s %10s %14s %12s %14s\n", "method", "outcome", "reach_s", "min_clear_m", "infeasible",
                  "mean_solve_ms");
      for (const auto& s : compare_methods(cfg, ms)) {
        const auto& o = s.result.robots.front();
        std::printf("%-8s %-10s %10s %14.4f %12d %14.4f\n", to_string(s.method), to_string(o.outcome),
                    std::isfinite(o.reach_time) ? std::to_string(o.reach_time).substr(0, 6).c_str() : "n/a",
                    o.min_clearance, o.infeasible_steps, 1e3 * mean(s.result.solve_times));
      }
    } else if (gen->parsed()) {
      if (!policy.empty()) dopt.policy = std::make_shared<const DecisionNet>(DecisionNet::load_file(policy));
      const auto samples = gen_dataset(dopt, base);
      auto os = open_out(out);
      write_dataset(os, samples);
      if (!os) throw std::runtime_error("failed writing " + out);
      std::printf("%zu samples from %d scenarios\n", samples.size(), dopt.scenarios);
    } else if (tr->parsed()) {
      std::vector<LabeledSample> samples;
      for (const auto& path : data) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot read dataset " + path);
        auto part = read_dataset(is);
        samples.insert(samples.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      }
      if (samples.size() < 100) throw UsageError("dataset has fewer than 100 samples");
      TrainReport rep;
      const DecisionNet net = train(samples, topt, &rep);
      net.save_file(out);
      std::printf("trained on %zu samples: loss %.4f -> %.4f (uniform %.4f)\n", samples.size(),
                  rep.epoch_loss.front(), rep.epoch_loss.back(), rep.baseline_loss);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
