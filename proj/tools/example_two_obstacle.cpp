// Runs the two-obstacle scenes with the three VO-barrier variants and prints
// outcome, clearance and per-step solve time.
//   example_two_obstacle [scenario_dir] [weights]
#include <cstdio>
#include <memory>
#include <string>

#include "vocbf/simulation.hpp"

#ifndef VOCBF_EXAMPLE_SCENARIOS
#define VOCBF_EXAMPLE_SCENARIOS "scenarios"
#endif
#ifndef VOCBF_EXAMPLE_WEIGHTS
#define VOCBF_EXAMPLE_WEIGHTS "data/decnet.bin"
#endif

using namespace vocbf;

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : VOCBF_EXAMPLE_SCENARIOS;
  const std::string weights = argc > 2 ? argv[2] : VOCBF_EXAMPLE_WEIGHTS;
  try {
    const auto net = std::make_shared<const DecisionNet>(DecisionNet::load_file(weights));
    for (const char* name : {"two_obstacle_static.json", "two_obstacle_dynamic.json"}) {
      ScenarioConfig cfg = load_scenario(dir + "/" + name);
      cfg.controller.net = net;
      std::printf("%s\n", name);
      for (Method m : {Method::Miqp, Method::SubQps, Method::DecNetQp}) {
        const RunResult r = run_scenario(cfg, m);
        const RobotOutcome& o = r.robots.front();
        std::printf("  %-7s %-10s reach %6.2f s  min clearance %.3f m  median solve %.4f ms\n", to_string(m),
                    to_string(o.outcome), o.reach_time, o.min_clearance, 1e3 * median(r.solve_times));
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
