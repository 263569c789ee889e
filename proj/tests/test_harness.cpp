#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "arq/config.hpp"
#include "arq/envs/grid_games.hpp"
#include "arq/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

using arq::AgentKind;
using arq::ConditioningMode;
using arq::ConfigError;
using arq::GoodnessKind;
using arq::RunConfig;

namespace {

const std::string kPresetDir = std::string(ARQLAB_SOURCE_DIR) + "/presets/";

RunConfig tiny_pointmass(AgentKind agent) {
  RunConfig cfg;
  cfg.env = "pointmass";
  cfg.agent = agent;
  cfg.hidden_dims = {16, 16};
  cfg.readout_dims = {4, 4};
  cfg.total_steps = 2500;
  cfg.seeds = {5};
  cfg.learner.batch_size = 32;
  cfg.learner.learning_starts = 400;
  cfg.learner.train_frequency = 4;
  cfg.learner.target_sync_interval = 200;
  cfg.learner.replay_capacity = 2000;
  cfg.metrics_interval = 500;
  cfg.checkpoint_interval = 1000;
  return cfg;
}

fs::path fresh_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / ("arqlab_test_" + leaf);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<json> records;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) records.push_back(json::parse(line));
  return records;
}

/// Metrics lines minus wall-clock fields, which legitimately differ run to run.
std::vector<std::string> timeless_metrics(const std::string& path) {
  std::vector<std::string> out;
  for (json rec : read_jsonl(path)) {
    rec.erase("wall_time_s");
    out.push_back(rec.dump());
  }
  return out;
}

}  // namespace

TEST_CASE("config survives a json round trip with an identical digest") {
  RunConfig cfg = tiny_pointmass(AgentKind::Ad);
  cfg.goodness = GoodnessKind::Var;
  cfg.conditioning = ConditioningMode::Output;
  cfg.learner.opt.lr = 3e-4;
  cfg.env_options.sticky_action_prob = 0.25;

  const RunConfig back = arq::config_from_json(arq::config_to_json(cfg));
  CHECK(arq::config_digest(back) == arq::config_digest(cfg));
  CHECK(back.env == cfg.env);
  CHECK(back.agent == cfg.agent);
  CHECK(back.goodness == cfg.goodness);
  CHECK(back.hidden_dims == cfg.hidden_dims);
  CHECK(back.learner.opt.lr == cfg.learner.opt.lr);
  CHECK(back.seeds == cfg.seeds);
}

TEST_CASE("digest moves when any field moves") {
  const RunConfig base;
  RunConfig a = base;
  a.learner.opt.lr = 2e-4;
  RunConfig b = base;
  b.hidden_dims = {400, 200, 201};
  RunConfig c = base;
  c.seeds = {0, 1};
  CHECK(arq::config_digest(a) != arq::config_digest(base));
  CHECK(arq::config_digest(b) != arq::config_digest(base));
  CHECK(arq::config_digest(c) != arq::config_digest(base));
  CHECK(arq::config_digest_hex(base).size() == 16);
}

TEST_CASE("unknown or ill-typed keys are rejected with their dotted path") {
  json doc = arq::config_to_json(RunConfig{});

  json top = doc;
  top["bogus"] = 1;
  CHECK_THROWS_WITH_AS(arq::config_from_json(top), doctest::Contains("bogus"), ConfigError);

  json nested = doc;
  nested["learner"]["bogus"] = 1;
  try {
    arq::config_from_json(nested);
    FAIL("nested unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(e.field == "learner.bogus");
  }

  json typed = doc;
  typed["precision"] = "wide";
  CHECK_THROWS_WITH_AS(arq::config_from_json(typed), doctest::Contains("precision"), ConfigError);

  json negative = doc;
  negative["seeds"] = json::array({-1});
  CHECK_THROWS_AS(arq::config_from_json(negative), ConfigError);
}

TEST_CASE("a saved run config (digest field included) loads back") {
  const RunConfig cfg = tiny_pointmass(AgentKind::Arq);
  json doc = arq::config_to_json(cfg);
  doc["digest"] = arq::config_digest_hex(cfg);
  const RunConfig back = arq::config_from_json(doc);
  CHECK(arq::config_digest(back) == arq::config_digest(cfg));
}

TEST_CASE("overrides parse values as json and build nested paths") {
  json doc = arq::config_to_json(RunConfig{});
  arq::apply_override(doc, "learner.lr=0.05");
  arq::apply_override(doc, "hidden_dims=[8,4]");
  arq::apply_override(doc, "env=pointmass");
  arq::apply_override(doc, "env_options.difficulty_ramping=false");
  CHECK(doc["learner"]["lr"] == 0.05);
  CHECK(doc["hidden_dims"] == json::array({8, 4}));
  CHECK(doc["env"] == "pointmass");
  CHECK(doc["env_options"]["difficulty_ramping"] == false);

  json scratch = json::object();
  arq::apply_override(scratch, "outer.inner=3");
  CHECK(scratch["outer"]["inner"] == 3);

  CHECK_THROWS_AS(arq::apply_override(doc, "no_equals_sign"), ConfigError);
  CHECK_THROWS_AS(arq::apply_override(doc, "=5"), ConfigError);
}

TEST_CASE("validate names the offending field") {
  RunConfig cfg;
  cfg.env = "pong";
  try {
    cfg.validate();
    FAIL("unknown env accepted");
  } catch (const ConfigError& e) {
    CHECK(e.field == "env");
  }

  cfg = RunConfig{};
  cfg.precision = 16;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = RunConfig{};
  cfg.readout_dims = {32, 32};  // arq needs one readout width per layer
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

// ---------------------------------------------------------------------------
// Shipped presets
// ---------------------------------------------------------------------------

TEST_CASE("full-scale presets carry the reference hyperparameters") {
  const std::vector<std::string> games{"breakout", "space-invaders"};
  const std::vector<std::string> agents{"arq", "ad", "dqn"};
  for (const auto& game : games)
    for (const auto& agent : agents) {
      const std::string path = kPresetDir + game + "-" + agent + "-paper.json";
      INFO(path);
      const RunConfig cfg = arq::load_config_file(path);
      cfg.validate();
      CHECK(cfg.env == (game == "breakout" ? "breakout" : "space_invaders"));
      CHECK(arq::to_string(cfg.agent) == agent);
      CHECK(cfg.hidden_dims == std::vector<int>{400, 200, 200});
      CHECK(cfg.learner.batch_size == 512);
      CHECK(cfg.learner.opt.lr == doctest::Approx(1e-4));
      CHECK(cfg.learner.learning_starts == 50000);
      CHECK(cfg.learner.train_frequency == 1);
      CHECK(cfg.learner.target_sync_interval == 1000);
      CHECK(cfg.learner.replay_capacity == 100000);
      CHECK(cfg.total_steps == 4'000'000);
      CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1, 2});
      CHECK(cfg.epsilon_start == 1.0);
      CHECK(cfg.epsilon_end == doctest::Approx(0.01));
      CHECK(cfg.exploration_fraction == doctest::Approx(0.1));
      CHECK(cfg.env_options.sticky_action_prob == doctest::Approx(0.1));
      CHECK(cfg.env_options.difficulty_ramping);
      CHECK(cfg.precision == 32);
      if (agent == "arq") {
        CHECK(cfg.readout_dims == std::vector<int>{32, 32, 32});
        CHECK(cfg.goodness == GoodnessKind::RMS);
        CHECK(cfg.conditioning == ConditioningMode::Input);
      }
      if (agent == "ad") CHECK(cfg.conditioning == ConditioningMode::Output);
    }
}

TEST_CASE("smoke presets shrink only the step budget, seed count, and train cadence") {
  for (const std::string agent : {"arq", "ad", "dqn"}) {
    const std::string path = kPresetDir + "breakout-" + agent + "-smoke.json";
    INFO(path);
    const RunConfig cfg = arq::load_config_file(path);
    cfg.validate();
    CHECK(cfg.total_steps == 300'000);
    CHECK(cfg.seeds.size() == 1);
    CHECK(cfg.hidden_dims == std::vector<int>{400, 200, 200});
    CHECK(cfg.learner.batch_size == 512);
    CHECK(cfg.learner.opt.lr == doctest::Approx(1e-4));
    CHECK(cfg.learner.learning_starts == 50000);
    CHECK(cfg.learner.train_frequency >= 1);
  }
}

TEST_CASE("goodness plan covers exactly the four pooling functions") {
  const arq::AblationPlan plan = arq::load_ablation_plan(kPresetDir + "ablate-goodness.json");
  REQUIRE(plan.entries.size() == 4);
  const std::vector<std::pair<std::string, GoodnessKind>> expected{
      {"rms", GoodnessKind::RMS}, {"mean", GoodnessKind::Mean}, {"ms", GoodnessKind::MS},
      {"var", GoodnessKind::Var}};
  for (size_t i = 0; i < expected.size(); ++i) {
    CHECK(plan.entries[i].name == expected[i].first);
    CHECK(plan.entries[i].cfg.goodness == expected[i].second);
    CHECK(plan.entries[i].cfg.agent == AgentKind::Arq);
    CHECK(plan.entries[i].cfg.env == "breakout");
  }
}

TEST_CASE("conditioning plan crosses both cell kinds with both injection points") {
  const arq::AblationPlan plan = arq::load_ablation_plan(kPresetDir + "ablate-conditioning.json");
  REQUIRE(plan.entries.size() == 4);
  const std::vector<std::tuple<std::string, AgentKind, ConditioningMode>> expected{
      {"arq-input", AgentKind::Arq, ConditioningMode::Input},
      {"arq-output", AgentKind::Arq, ConditioningMode::Output},
      {"ad-input", AgentKind::Ad, ConditioningMode::Input},
      {"ad-output", AgentKind::Ad, ConditioningMode::Output}};
  for (size_t i = 0; i < expected.size(); ++i) {
    CHECK(plan.entries[i].name == std::get<0>(expected[i]));
    CHECK(plan.entries[i].cfg.agent == std::get<1>(expected[i]));
    CHECK(plan.entries[i].cfg.conditioning == std::get<2>(expected[i]));
  }
}

TEST_CASE("scale plan pairs ad and arq at matched parameter counts") {
  const arq::AblationPlan plan = arq::load_ablation_plan(kPresetDir + "ablate-scale.json");
  REQUIRE(plan.entries.size() == 8);  // {0.5, 1, 1.5, 2} x {ad, arq}

  auto env = arq::envs::make_env("breakout", 0, arq::envs::GridEnvOptions{});
  const arq::envs::EnvSpec spec = env->spec();

  long long ad_base = 0;
  for (size_t i = 0; i < plan.entries.size(); i += 2) {
    const auto& ad = plan.entries[i];
    const auto& arq_entry = plan.entries[i + 1];
    CHECK(ad.name.substr(0, 3) == "ad-");
    CHECK(arq_entry.name.substr(0, 4) == "arq-");
    CHECK(ad.cfg.agent == AgentKind::Ad);
    CHECK(arq_entry.cfg.agent == AgentKind::Arq);

    const long long ca = arq::agent_param_count(ad.cfg, spec);
    const long long cq = arq::agent_param_count(arq_entry.cfg, spec);
    const double rel = std::fabs(double(ca - cq)) / double(std::max(ca, cq));
    INFO(ad.name, " ", ca, " vs ", arq_entry.name, " ", cq);
    CHECK(rel <= 0.01);
    if (ad.name == "ad-1x") ad_base = ca;
  }
  REQUIRE(ad_base > 0);
  // Ratio targets are relative to the unscaled ad network.
  for (size_t i = 0; i < plan.entries.size(); i += 2) {
    const double ratio = std::stod(plan.entries[i].name.substr(3));
    const long long count = arq::agent_param_count(plan.entries[i].cfg, spec);
    CHECK(std::fabs(double(count) - ratio * double(ad_base)) <= 0.01 * ratio * double(ad_base));
  }
}

// ---------------------------------------------------------------------------
// Training loop end to end
// ---------------------------------------------------------------------------

TEST_CASE("two identical training runs write identical metrics and summaries") {
  const RunConfig cfg = tiny_pointmass(AgentKind::Arq);
  const fs::path dir_a = fresh_dir("train_a");
  const fs::path dir_b = fresh_dir("train_b");

  const arq::RunResult ra = arq::run_training(cfg, dir_a.string(), "run", /*quiet=*/true);
  const arq::RunResult rb = arq::run_training(cfg, dir_b.string(), "run", /*quiet=*/true);

  REQUIRE(ra.per_seed.size() == 1);
  CHECK(ra.digest == arq::config_digest_hex(cfg));
  CHECK(ra.digest == rb.digest);
  CHECK(ra.per_seed[0].last100_mean == rb.per_seed[0].last100_mean);
  CHECK(ra.per_seed[0].episodes == rb.per_seed[0].episodes);
  CHECK(ra.per_seed[0].train_steps == rb.per_seed[0].train_steps);

  const auto ma = timeless_metrics((dir_a / "run" / "seed5" / "metrics.jsonl").string());
  const auto mb = timeless_metrics((dir_b / "run" / "seed5" / "metrics.jsonl").string());
  REQUIRE(ma.size() > 4);
  CHECK(ma == mb);

  // The header record carries the digest; every episode lands in the stream.
  const auto records = read_jsonl((dir_a / "run" / "seed5" / "metrics.jsonl").string());
  CHECK(records.front().at("config_digest") == ra.digest);
  int episodes = 0;
  double last_sum = 0.0;
  std::vector<double> returns;
  for (const auto& rec : records)
    if (rec.at("kind") == "episode") {
      ++episodes;
      returns.push_back(rec.at("return").get<double>());
    }
  CHECK(episodes == ra.per_seed[0].episodes);
  const size_t take = std::min<size_t>(100, returns.size());
  for (size_t i = returns.size() - take; i < returns.size(); ++i) last_sum += returns[i];
  CHECK(ra.per_seed[0].last100_mean == doctest::Approx(last_sum / double(take)).epsilon(1e-12));

  // Checkpoints: every interval plus the final state.
  CHECK(fs::exists(dir_a / "run" / "seed5" / "ckpt_step1000.bin"));
  CHECK(fs::exists(dir_a / "run" / "seed5" / "ckpt_step2000.bin"));
  CHECK(fs::exists(dir_a / "run" / "seed5" / "ckpt_final.bin"));
  CHECK(fs::exists(dir_a / "run" / "config.json"));
  CHECK(fs::exists(dir_a / "run" / "summary.json"));

  // The saved config loads back to the same digest.
  const RunConfig reloaded = arq::load_config_file((dir_a / "run" / "config.json").string());
  CHECK(arq::config_digest_hex(reloaded) == ra.digest);

  // Default run names embed env, agent, and digest.
  const arq::RunResult named = arq::run_training(cfg, dir_a.string(), "", /*quiet=*/true);
  CHECK(fs::path(named.run_dir).filename().string() == "pointmass-arq-" + ra.digest);
}

TEST_CASE("evaluation is deterministic, digest-guarded, and honest at epsilon 1") {
  const RunConfig cfg = tiny_pointmass(AgentKind::Arq);
  const fs::path dir = fresh_dir("eval");
  const arq::RunResult rr = arq::run_training(cfg, dir.string(), "run", /*quiet=*/true);
  const std::string ckpt = rr.per_seed[0].final_checkpoint;
  REQUIRE(fs::exists(ckpt));

  const arq::EvalStats a = arq::evaluate_checkpoint(cfg, ckpt, 30, 0.0, 11);
  const arq::EvalStats b = arq::evaluate_checkpoint(cfg, ckpt, 30, 0.0, 11);
  CHECK(a.mean == b.mean);
  CHECK(a.stddev == b.stddev);
  CHECK(a.min == b.min);
  CHECK(a.max == b.max);
  CHECK(a.episodes == 30);
  CHECK(a.min <= a.mean);
  CHECK(a.mean <= a.max);

  RunConfig other = cfg;
  other.goodness = GoodnessKind::Mean;
  CHECK_THROWS_WITH_AS(arq::evaluate_checkpoint(other, ckpt, 4, 0.0, 11),
                       doctest::Contains("digest mismatch"), ConfigError);

  // A fully random evaluation policy must match the uniform-random baseline.
  const int n = 250;
  const arq::EvalStats rand_eval = arq::evaluate_fresh(cfg, n, 1.0, 21);
  auto env = arq::envs::make_env("pointmass", 0, arq::envs::GridEnvOptions{});
  const auto floor = arq::envs::random_policy_baseline(*env, n, 31);
  const double se = std::sqrt(rand_eval.stddev * rand_eval.stddev / n + floor.stddev * floor.stddev / n);
  CHECK(std::fabs(rand_eval.mean - floor.mean) <= 5.0 * se);
}

TEST_CASE("a small ablation plan runs every variant and writes the table") {
  const fs::path dir = fresh_dir("ablate");
  RunConfig base = tiny_pointmass(AgentKind::Arq);
  base.total_steps = 900;
  base.learner.learning_starts = 300;
  base.checkpoint_interval = 900;
  base.seeds = {3};

  json plan_json{{"name", "mini"},
                 {"base", arq::config_to_json(base)},
                 {"variants", json::array({json{{"name", "arq"}, {"set", json::array({"agent=arq"})}},
                                           json{{"name", "dqn"}, {"set", json::array({"agent=dqn"})}}})}};
  const fs::path plan_path = dir / "plan.json";
  std::ofstream(plan_path) << plan_json.dump(2);

  const arq::AblationPlan plan = arq::load_ablation_plan(plan_path.string());
  REQUIRE(plan.entries.size() == 2);
  const auto rows = arq::run_ablation(plan, dir.string(), /*quiet=*/true);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].name == "arq");
  CHECK(rows[1].name == "dqn");
  for (const auto& row : rows) {
    CHECK(row.per_seed.size() == 1);
    CHECK(std::isfinite(row.mean));
  }
  CHECK(fs::exists(dir / "mini" / "table.json"));
  CHECK(fs::exists(dir / "mini" / "arq" / "summary.json"));
  CHECK(fs::exists(dir / "mini" / "dqn" / "summary.json"));

  json bad = plan_json;
  bad["surprise"] = 1;
  std::ofstream(plan_path) << bad.dump(2);
  CHECK_THROWS_AS(arq::load_ablation_plan(plan_path.string()), ConfigError);
}

TEST_CASE("the gradient battery passes end to end") {
  const arq::GradcheckOutcome outcome = arq::run_gradcheck(0, 1);
  CHECK(outcome.pass);
  // 2 kinds x 2 modes x 4 pooling functions, the mlp, and two locality rows.
  CHECK(outcome.lines.size() == 19);
}

TEST_CASE("activation inspection is shaped, nonnegative, and repeatable") {
  RunConfig cfg = tiny_pointmass(AgentKind::Arq);
  const arq::InspectReport rep = arq::inspect_activations(cfg, "", 40, 3, 9);
  CHECK(rep.states == 40);
  CHECK(rep.n_actions == 4);
  CHECK(rep.neurons_total == 4);
  REQUIRE(rep.rows.size() == 3);
  double prev = 1e300;
  for (const auto& row : rep.rows) {
    REQUIRE(row.rms_per_action.size() == 4);
    double mean = 0.0;
    for (double v : row.rms_per_action) {
      CHECK(v >= 0.0);
      CHECK(std::isfinite(v));
      mean += v;
    }
    mean /= 4.0;
    CHECK(mean <= prev);  // ranked by mean rms, descending
    prev = mean;
  }

  const arq::InspectReport again = arq::inspect_activations(cfg, "", 40, 3, 9);
  REQUIRE(again.rows.size() == rep.rows.size());
  for (size_t i = 0; i < rep.rows.size(); ++i) {
    CHECK(again.rows[i].neuron == rep.rows[i].neuron);
    CHECK(again.rows[i].rms_per_action == rep.rows[i].rms_per_action);
  }

  cfg.agent = AgentKind::Dqn;
  CHECK_THROWS_AS(arq::inspect_activations(cfg, "", 10, 3, 9), ConfigError);
}
