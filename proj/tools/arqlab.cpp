// arqlab: train/eval/ablate/gradcheck/inspect/fixtures for the local-learning
// RL laboratory.  Exit codes: 0 success, 1 invalid input, 2 check failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "arq/envs/fixtures.hpp"
#include "arq/harness.hpp"
#include "arq/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitCheckFailed = 2;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string seeds_csv;
  std::string out;
  int precision = 0;  // 0 = keep config value
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration (defaults apply when omitted)");
  cmd->add_option("--set", o.overrides, "dotted-path override, e.g. --set learner.lr=0.001")
      ->take_all()
      ->allow_extra_args(false);
  cmd->add_option("--seed", o.seeds_csv, "seed list N[,N...] replacing the config's seeds");
  cmd->add_option("--out", o.out, "output directory (overrides config out_dir)");
  cmd->add_option("--precision", o.precision, "float width: 32 or 64")->check(CLI::IsMember({32, 64}));
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) throw arq::ConfigError("--seed", "empty entry in seed list");
    size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
      throw arq::ConfigError("--seed", "'" + tok + "' is not a seed");
    }
    if (pos != tok.size()) throw arq::ConfigError("--seed", "'" + tok + "' is not a seed");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw arq::ConfigError("--seed", "no seeds given");
  return seeds;
}

arq::RunConfig resolve_config(const CommonOpts& o) {
  json doc = arq::config_to_json(arq::RunConfig{});  // defaults
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw std::runtime_error("cannot open config '" + o.config_path + "'");
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw arq::ConfigError(o.config_path, std::string("not valid JSON: ") + e.what());
    }
  }
  for (const auto& spec : o.overrides) arq::apply_override(doc, spec);
  arq::RunConfig cfg = arq::config_from_json(doc);
  if (!o.seeds_csv.empty()) cfg.seeds = parse_seeds(o.seeds_csv);
  if (o.precision != 0) cfg.precision = o.precision;
  if (!o.out.empty()) cfg.out_dir = o.out;
  cfg.validate();
  return cfg;
}

/// Relative output directories root at $ARQLAB_OUT_ROOT when it is set.
std::string out_root(const std::string& out_dir) {
  fs::path p = out_dir;
  const char* root = std::getenv("ARQLAB_OUT_ROOT");
  if (p.is_relative() && root != nullptr && *root != '\0') p = fs::path(root) / p;
  return p.string();
}

int cmd_train(const CommonOpts& o, int threads) {
  const arq::RunConfig cfg = resolve_config(o);
  if (threads > 0) arq::set_worker_threads(threads);
  const arq::RunResult rr = arq::run_training(cfg, out_root(cfg.out_dir));
  std::printf("\nrun %s (digest %s)\n", rr.run_dir.c_str(), rr.digest.c_str());
  for (const auto& sr : rr.per_seed)
    std::printf("  seed %llu: %d episodes, last100 %.3f, %lld train steps, %.1fs\n",
                static_cast<unsigned long long>(sr.seed), sr.episodes, sr.last100_mean, sr.train_steps,
                sr.wall_time_s);
  std::printf("last-100-episode return: %.3f +/- %.3f over %zu seed(s)\n", rr.mean, rr.stddev,
              rr.per_seed.size());
  return kExitOk;
}

int cmd_eval(const CommonOpts& o, const std::string& checkpoint, int episodes, double epsilon,
             std::uint64_t eval_seed) {
  const arq::RunConfig cfg = resolve_config(o);
  const arq::EvalStats st = arq::evaluate_checkpoint(cfg, checkpoint, episodes, epsilon, eval_seed);
  json j{{"episodes", st.episodes}, {"mean", st.mean},       {"stddev", st.stddev},
         {"min", st.min},           {"max", st.max},         {"epsilon", epsilon},
         {"checkpoint", checkpoint}, {"config_digest", arq::config_digest_hex(cfg)}};
  std::printf("%s\n", j.dump(2).c_str());
  return kExitOk;
}

int cmd_ablate(const std::string& plan_path, const std::string& out, int threads) {
  const arq::AblationPlan plan = arq::load_ablation_plan(plan_path);
  if (threads > 0) arq::set_worker_threads(threads);
  std::printf("plan %s: %zu variants x %zu seed(s)\n", plan.name.c_str(), plan.entries.size(),
              plan.entries.empty() ? 0 : plan.entries.front().cfg.seeds.size());
  const auto rows = arq::run_ablation(plan, out_root(out.empty() ? "runs" : out));
  std::printf("\n%-16s %12s %12s\n", "variant", "mean", "stddev");
  for (const auto& row : rows) std::printf("%-16s %12.3f %12.3f\n", row.name.c_str(), row.mean, row.stddev);
  return kExitOk;
}

int cmd_gradcheck(const CommonOpts& o, int per_variant) {
  const arq::RunConfig cfg = resolve_config(o);
  if (cfg.precision != 64) {
    std::fprintf(stderr, "gradcheck compares against finite differences and needs --precision 64\n");
    return kExitInvalid;
  }
  const std::uint64_t seed = cfg.seeds.empty() ? 0 : cfg.seeds.front();
  const arq::GradcheckOutcome outcome = arq::run_gradcheck(seed, per_variant);
  for (const auto& line : outcome.lines) std::printf("%s\n", line.c_str());
  std::printf("gradcheck: %s\n", outcome.pass ? "all checks passed" : "FAILURES above");
  return outcome.pass ? kExitOk : kExitCheckFailed;
}

int cmd_inspect(const CommonOpts& o, const std::string& checkpoint, int states, int top_k,
                std::uint64_t seed) {
  const arq::RunConfig cfg = resolve_config(o);
  const arq::InspectReport rep = arq::inspect_activations(cfg, checkpoint, states, top_k, seed);
  std::printf("layer-0 readout over %d states (%d neurons total, mean RMS %.4f)\n", rep.states,
              rep.neurons_total, rep.avg_rms_all);
  std::printf("%-8s", "neuron");
  for (int a = 0; a < rep.n_actions; ++a) std::printf("  action%-2d", a);
  std::printf("\n");
  for (const auto& row : rep.rows) {
    std::printf("%-8d", row.neuron);
    for (double v : row.rms_per_action) std::printf("  %8.4f", v);
    std::printf("\n");
  }
  if (!o.out.empty()) {
    json rows = json::array();
    for (const auto& row : rep.rows)
      rows.push_back(json{{"neuron", row.neuron}, {"rms_per_action", row.rms_per_action}});
    json j{{"states", rep.states},
           {"n_actions", rep.n_actions},
           {"neurons_total", rep.neurons_total},
           {"avg_rms_all", rep.avg_rms_all},
           {"config_digest", arq::config_digest_hex(cfg)},
           {"rows", rows}};
    fs::path out_path = fs::path(out_root(o.out));
    fs::create_directories(out_path);
    std::ofstream f(out_path / "inspect.json");
    f << j.dump(2) << "\n";
    std::printf("wrote %s\n", (out_path / "inspect.json").string().c_str());
  }
  return kExitOk;
}

int cmd_fixtures(const std::string& mode, const std::string& dir) {
  const std::vector<std::string> games{"breakout", "space_invaders"};
  constexpr int kSeeds = 5;
  constexpr int kSteps = 200;
  if (mode == "regenerate") fs::create_directories(dir);
  bool all_ok = true;
  for (const auto& game : games)
    for (int seed = 0; seed < kSeeds; ++seed) {
      const fs::path path = fs::path(dir) / (game + "_seed" + std::to_string(seed) + ".txt");
      if (mode == "regenerate") {
        const auto fx = arq::envs::generate_fixture(game, static_cast<std::uint32_t>(seed), kSteps);
        arq::envs::write_fixture(path.string(), fx);
        std::printf("wrote %s\n", path.string().c_str());
      } else {
        const auto fx = arq::envs::read_fixture(path.string());
        const std::string err = arq::envs::replay_fixture(fx);
        std::printf("%-40s %s\n", path.filename().string().c_str(), err.empty() ? "ok" : err.c_str());
        all_ok = all_ok && err.empty();
      }
    }
  if (mode == "verify" && !all_ok) return kExitCheckFailed;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arqlab: local TD-learning laboratory (cell networks vs an MLP baseline)"};
  app.require_subcommand(1);

  CommonOpts train_opts, eval_opts, grad_opts, inspect_opts;
  int threads = 0;
  std::string eval_checkpoint, inspect_checkpoint;
  int eval_episodes = 100, inspect_states = 100, inspect_top = 20, grad_per_variant = 5;
  double eval_epsilon = 0.0;
  std::uint64_t eval_seed = 0, inspect_seed = 0;
  std::string plan_path, ablate_out;
  std::string fixtures_mode = "verify", fixtures_dir = "tests/fixtures";

  CLI::App* train = app.add_subcommand("train", "run the acting/learning loop for every seed");
  add_common(train, train_opts);
  train->add_option("--threads", threads, "worker threads for the train step (default 1)");

  CLI::App* eval = app.add_subcommand("eval", "roll out a checkpointed policy");
  add_common(eval, eval_opts);
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval->add_option("--episodes", eval_episodes, "episodes to run (default 100)");
  eval->add_option("--epsilon", eval_epsilon, "exploration during eval (default 0 = greedy)");
  eval->add_option("--eval-seed", eval_seed, "rollout seed (default 0)");

  CLI::App* ablate = app.add_subcommand("ablate", "run an ablation plan and print the comparison table");
  ablate->add_option("--plan", plan_path, "plan JSON file")->required();
  ablate->add_option("--out", ablate_out, "output root (default runs)");
  ablate->add_option("--threads", threads, "worker threads for the train step (default 1)");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference and locality battery");
  add_common(gradcheck, grad_opts);
  gradcheck->add_option("--per-variant", grad_per_variant, "random configurations per variant (default 5)");
  grad_opts.precision = 64;  // the only sound default here

  CLI::App* inspect = app.add_subcommand("inspect", "rank layer-0 readout neurons by RMS activity");
  add_common(inspect, inspect_opts);
  inspect->add_option("--checkpoint", inspect_checkpoint, "checkpoint file (omit for fresh weights)");
  inspect->add_option("--states", inspect_states, "states to visit (default 100)");
  inspect->add_option("--top", inspect_top, "neurons to report (default 20)");
  inspect->add_option("--inspect-seed", inspect_seed, "rollout seed (default 0)");

  CLI::App* fixtures = app.add_subcommand("fixtures", "verify or regenerate env trajectory fixtures");
  fixtures->add_option("mode", fixtures_mode, "verify | regenerate")
      ->check(CLI::IsMember({"verify", "regenerate"}));
  fixtures->add_option("--dir", fixtures_dir, "fixture directory (default tests/fixtures)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (train->parsed()) return cmd_train(train_opts, threads);
    if (eval->parsed()) return cmd_eval(eval_opts, eval_checkpoint, eval_episodes, eval_epsilon, eval_seed);
    if (ablate->parsed()) return cmd_ablate(plan_path, ablate_out, threads);
    if (gradcheck->parsed()) return cmd_gradcheck(grad_opts, grad_per_variant);
    if (inspect->parsed())
      return cmd_inspect(inspect_opts, inspect_checkpoint, inspect_states, inspect_top, inspect_seed);
    if (fixtures->parsed()) return cmd_fixtures(fixtures_mode, fixtures_dir);
  } catch (const arq::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  }
  return kExitInvalid;
}
