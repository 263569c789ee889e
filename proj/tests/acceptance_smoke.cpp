// Learning smoke test: the scaled-down stand-in for the full-scale result
// table, which needs 4M steps x 3 seeds per agent and is not desk-runnable.
// Each agent trains its breakout smoke preset (300k steps, one seed); the
// pooled-cell agent must reach at least 5x the random-policy mean return over
// the last 100 episodes, the other two at least 2x.  Orderings between agents
// are reported, not asserted.
//
// Runtime is dominated by the cell agents' train steps.  Pass a thread count
// as argv[1] to spread the batch across cores (results are bit-identical for
// any thread count); the full sweep takes a couple of hours on one core.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "arq/config.hpp"
#include "arq/envs/grid_games.hpp"
#include "arq/harness.hpp"
#include "arq/parallel.hpp"

using namespace arq;

int main(int argc, char** argv) {
  if (argc > 1) set_worker_threads(std::atoi(argv[1]));
  const std::string preset_dir = std::string(ARQLAB_SOURCE_DIR) + "/presets/";
  const char* out_env = std::getenv("ARQLAB_OUT_ROOT");
  const std::string out_root = (out_env != nullptr && *out_env != '\0')
                                   ? std::string(out_env) + "/acceptance_smoke"
                                   : std::string("/tmp/arqlab_acceptance_smoke");

  // The floor oracle comes first: 1000 uniform-random episodes.
  auto env = envs::make_env("breakout", 0, envs::GridEnvOptions{});
  const auto floor = envs::random_policy_baseline(*env, 1000, 99);
  std::printf("random-policy floor (breakout, 1000 episodes): %.4f +/- %.4f\n\n", floor.mean,
              floor.stddev);

  struct Row {
    std::string agent;
    double required_multiple;
    double last100 = 0.0;
    bool pass = false;
  };
  std::vector<Row> rows{{"arq", 5.0}, {"ad", 2.0}, {"dqn", 2.0}};

  int failures = 0;
  for (Row& row : rows) {
    const RunConfig cfg = load_config_file(preset_dir + "breakout-" + row.agent + "-smoke.json");
    std::printf("== %s smoke (%lld steps, train every %d) ==\n", row.agent.c_str(),
                cfg.total_steps, cfg.learner.train_frequency);
    const RunResult rr = run_training(cfg, out_root, row.agent);
    row.last100 = rr.mean;
    const double required = row.required_multiple * floor.mean;
    row.pass = row.last100 >= required;
    std::printf("criterion  8 (%s >= %.0fx floor): %s -- last100 %.3f vs required %.3f (%.1fx floor), "
                "%.0fs wall\n\n",
                row.agent.c_str(), row.required_multiple, row.pass ? "PASS" : "FAIL", row.last100,
                required, row.last100 / floor.mean, rr.per_seed[0].wall_time_s);
    if (!row.pass) ++failures;
  }

  std::printf("relative ordering (reported, not asserted): ");
  std::vector<Row> sorted = rows;
  std::sort(sorted.begin(), sorted.end(), [](const Row& a, const Row& b) { return a.last100 > b.last100; });
  for (size_t i = 0; i < sorted.size(); ++i)
    std::printf("%s%s (%.2f)", i ? " > " : "", sorted[i].agent.c_str(), sorted[i].last100);
  std::printf("\n");

  if (failures > 0) {
    std::printf("acceptance_smoke: %d agent(s) below the floor multiple\n", failures);
    return 1;
  }
  std::printf("acceptance_smoke: all agents cleared their floor multiples\n");
  return 0;
}
