#include "arq/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <set>
#include <cstdlib>
#include <memory>

#include <json.hpp>

#include "arq/digest.hpp"

namespace arq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// -- small utilities ---------------------------------------------------------

/// Independent deterministic streams derived from one run seed.
std::uint64_t mix_seed(std::uint64_t seed, const char* tag) {
  std::uint64_t h = fnv1a64(&seed, sizeof seed);
  for (const char* p = tag; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint32_t env_seed(std::uint64_t seed) {
  return static_cast<std::uint32_t>(mix_seed(seed, "env") & 0xFFFFFFFFu);
}

template <class R>
Vec<R> to_vec(const std::vector<double>& v) {
  Vec<R> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<R>(v[i]);
  return out;
}

double now_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Moments {
  double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
};

Moments moments_of(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  m.min = m.max = xs[0];
  double sum = 0;
  for (double x : xs) {
    sum += x;
    m.min = std::min(m.min, x);
    m.max = std::max(m.max, x);
  }
  m.mean = sum / static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.stddev = std::sqrt(ss / static_cast<double>(xs.size()));
  return m;
}

void write_json_line(std::ofstream& out, const json& j) { out << j.dump() << "\n"; }

// -- the acting/learning loop ------------------------------------------------

constexpr long long kEvalEpisodeCap = 1'000'000;  // infinite-episode guard

template <class R, class Agent>
SeedResult train_loop(const RunConfig& cfg, Agent& agent, envs::Env& env, std::uint64_t seed,
                      const fs::path& seed_dir, const std::string& digest, bool quiet) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(seed_dir);

  std::ofstream metrics(seed_dir / "metrics.jsonl");
  if (!metrics) throw std::runtime_error("cannot open metrics file in " + seed_dir.string());
  write_json_line(metrics, json{{"kind", "header"},
                                {"version", 1},
                                {"config_digest", digest},
                                {"seed", seed},
                                {"env", cfg.env},
                                {"agent", to_string(cfg.agent)},
                                {"obs_dim", env.spec().obs_dim},
                                {"n_actions", env.spec().n_actions}});

  SeededRng act_rng(mix_seed(seed, "act"));
  SeededRng train_rng(mix_seed(seed, "train"));
  const EpsilonSchedule sched = epsilon_schedule(cfg);

  Vec<R> obs = to_vec<R>(env.reset_seeded(env_seed(seed)));
  agent.begin_episode();

  SeedResult result;
  result.seed = seed;
  std::deque<double> window;  // last 100 completed episode returns
  double ep_return = 0.0;
  int ep_length = 0;
  TrainStats last_train;
  const long long progress_every = std::max<long long>(cfg.metrics_interval, cfg.total_steps / 20);

  for (long long step = 0; step < cfg.total_steps; ++step) {
    const double eps = sched.at(step);
    const int action = agent.act(obs, eps, act_rng);
    const auto sr = env.step(action);
    Vec<R> obs_next = to_vec<R>(sr.obs);
    agent.record(obs, action, static_cast<R>(sr.reward), obs_next, sr.done);
    ep_return += sr.reward;
    ep_length += 1;

    if (step >= cfg.learner.learning_starts && step % cfg.learner.train_frequency == 0) {
      last_train = agent.train(train_rng);
      if (last_train.ran) result.train_steps += 1;
    }
    if ((step + 1) % cfg.learner.target_sync_interval == 0) agent.sync_target();

    if (sr.done) {
      result.episodes += 1;
      window.push_back(ep_return);
      if (window.size() > 100) window.pop_front();
      write_json_line(metrics, json{{"kind", "episode"},
                                    {"step", step + 1},
                                    {"episode", result.episodes},
                                    {"return", ep_return},
                                    {"length", ep_length},
                                    {"epsilon", eps},
                                    {"wall_time_s", now_seconds(t0)}});
      ep_return = 0.0;
      ep_length = 0;
      obs = to_vec<R>(env.reset());
      agent.begin_episode();
    } else {
      obs = std::move(obs_next);
    }

    if ((step + 1) % cfg.metrics_interval == 0) {
      write_json_line(metrics, json{{"kind", "train"},
                                    {"step", step + 1},
                                    {"epsilon", eps},
                                    {"cell_loss", last_train.cell_loss},
                                    {"mean_q", last_train.mean_q},
                                    {"train_steps", result.train_steps},
                                    {"wall_time_s", now_seconds(t0)}});
    }
    if ((step + 1) % cfg.checkpoint_interval == 0) {
      const auto path = seed_dir / ("ckpt_step" + std::to_string(step + 1) + ".bin");
      save_checkpoint(path.string(), digest, cfg.precision, step + 1, agent.matrices());
    }
    if (!quiet && (step + 1) % progress_every == 0) {
      double last100 = 0;
      for (double r : window) last100 += r;
      if (!window.empty()) last100 /= static_cast<double>(window.size());
      std::printf("seed %llu | step %lld/%lld | ep %d | last100 %.2f | eps %.3f | %.0fs\n",
                  static_cast<unsigned long long>(seed), step + 1, cfg.total_steps, result.episodes, last100,
                  eps, now_seconds(t0));
      std::fflush(stdout);
    }
  }

  const auto final_path = seed_dir / "ckpt_final.bin";
  save_checkpoint(final_path.string(), digest, cfg.precision, cfg.total_steps, agent.matrices());
  result.final_checkpoint = final_path.string();
  result.metrics_path = (seed_dir / "metrics.jsonl").string();

  double last100 = 0;
  for (double r : window) last100 += r;
  if (!window.empty()) last100 /= static_cast<double>(window.size());
  result.last100_mean = last100;
  result.wall_time_s = now_seconds(t0);

  std::ofstream summary(seed_dir / "summary.json");
  summary << json{{"kind", "summary"},
                  {"config_digest", digest},
                  {"seed", seed},
                  {"episodes", result.episodes},
                  {"last100_mean", result.last100_mean},
                  {"total_steps", cfg.total_steps},
                  {"train_steps", result.train_steps},
                  {"wall_time_s", result.wall_time_s}}
                 .dump(2)
          << "\n";
  return result;
}

template <class R>
SeedResult train_one_seed(const RunConfig& cfg, std::uint64_t seed, const fs::path& seed_dir,
                          const std::string& digest, bool quiet) {
  auto env = envs::make_env(cfg.env, env_seed(seed), cfg.env_options);
  if (cfg.agent == AgentKind::Dqn) {
    DqnAgent<R> agent(env->spec().obs_dim, cfg.hidden_dims, env->spec().n_actions, cfg.learner,
                      mix_seed(seed, "init"));
    return train_loop<R>(cfg, agent, *env, seed, seed_dir, digest, quiet);
  }
  CellAgent<R> agent(network_config(cfg, env->spec()), cfg.learner, mix_seed(seed, "init"));
  return train_loop<R>(cfg, agent, *env, seed, seed_dir, digest, quiet);
}

// -- evaluation rollouts -----------------------------------------------------

template <class R, class Agent>
EvalStats rollout(const RunConfig& cfg, Agent& agent, int episodes, double epsilon, std::uint64_t seed) {
  auto env = envs::make_env(cfg.env, env_seed(seed), cfg.env_options);
  SeededRng rng(mix_seed(seed, "eval"));
  std::vector<double> returns;
  returns.reserve(static_cast<size_t>(episodes));
  Vec<R> obs = to_vec<R>(env->reset_seeded(env_seed(seed)));
  for (int ep = 0; ep < episodes; ++ep) {
    agent.begin_episode();
    double ret = 0.0;
    for (long long t = 0; t < kEvalEpisodeCap; ++t) {
      const int action = agent.act(obs, epsilon, rng);
      const auto sr = env->step(action);
      ret += sr.reward;
      if (sr.done) break;
      obs = to_vec<R>(sr.obs);
    }
    returns.push_back(ret);
    obs = to_vec<R>(env->reset());
  }
  const Moments m = moments_of(returns);
  return EvalStats{episodes, m.mean, m.stddev, m.min, m.max};
}

template <class R>
EvalStats evaluate_impl(const RunConfig& cfg, const std::string& checkpoint_path, int episodes, double epsilon,
                        std::uint64_t seed) {
  auto env = envs::make_env(cfg.env, env_seed(seed), cfg.env_options);
  LearnerConfig lc = cfg.learner;
  lc.replay_capacity = static_cast<size_t>(std::max(lc.batch_size, 1));  // rollouts never fill it
  const std::string digest = config_digest_hex(cfg);

  auto load_if_given = [&](auto& agent) {
    if (checkpoint_path.empty()) return;
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    if (ck.config_digest != digest)
      throw ConfigError("checkpoint", "digest mismatch: config " + digest + " vs checkpoint " +
                                          ck.config_digest + " (" + checkpoint_path + ")");
    agent.load_matrices(ck.matrices);
  };

  if (cfg.agent == AgentKind::Dqn) {
    DqnAgent<R> agent(env->spec().obs_dim, cfg.hidden_dims, env->spec().n_actions, lc, mix_seed(seed, "init"));
    load_if_given(agent);
    return rollout<R>(cfg, agent, episodes, epsilon, seed);
  }
  CellAgent<R> agent(network_config(cfg, env->spec()), lc, mix_seed(seed, "init"));
  load_if_given(agent);
  return rollout<R>(cfg, agent, episodes, epsilon, seed);
}

}  // namespace

// -- public entry points -----------------------------------------------------

RunResult run_training(const RunConfig& cfg, const std::string& out_root, std::string run_name, bool quiet) {
  cfg.validate();
  RunResult result;
  result.digest = config_digest_hex(cfg);
  if (run_name.empty()) run_name = cfg.env + "-" + to_string(cfg.agent) + "-" + result.digest;
  const fs::path run_dir = fs::path(out_root) / run_name;
  fs::create_directories(run_dir);
  result.run_dir = run_dir.string();

  {
    std::ofstream out(run_dir / "config.json");
    json j = config_to_json(cfg);
    j["digest"] = result.digest;
    out << j.dump(2) << "\n";
  }

  std::vector<double> finals;
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path seed_dir = run_dir / ("seed" + std::to_string(seed));
    SeedResult sr = cfg.precision == 64 ? train_one_seed<double>(cfg, seed, seed_dir, result.digest, quiet)
                                        : train_one_seed<float>(cfg, seed, seed_dir, result.digest, quiet);
    finals.push_back(sr.last100_mean);
    result.per_seed.push_back(std::move(sr));
  }

  const Moments m = moments_of(finals);
  result.mean = m.mean;
  result.stddev = m.stddev;

  json per_seed = json::array();
  for (const auto& sr : result.per_seed)
    per_seed.push_back(json{{"seed", sr.seed},
                            {"episodes", sr.episodes},
                            {"last100_mean", sr.last100_mean},
                            {"train_steps", sr.train_steps},
                            {"wall_time_s", sr.wall_time_s}});
  std::ofstream out(run_dir / "summary.json");
  out << json{{"kind", "run_summary"},
              {"config_digest", result.digest},
              {"mean", result.mean},
              {"stddev", result.stddev},
              {"per_seed", per_seed}}
             .dump(2)
      << "\n";
  return result;
}

EvalStats evaluate_checkpoint(const RunConfig& cfg, const std::string& checkpoint_path, int episodes,
                              double epsilon, std::uint64_t seed) {
  cfg.validate();
  if (episodes < 1) throw ConfigError("episodes", "must be positive");
  if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("epsilon", "must be in [0, 1]");
  if (checkpoint_path.empty()) throw ConfigError("checkpoint", "path required");
  return cfg.precision == 64 ? evaluate_impl<double>(cfg, checkpoint_path, episodes, epsilon, seed)
                             : evaluate_impl<float>(cfg, checkpoint_path, episodes, epsilon, seed);
}

EvalStats evaluate_fresh(const RunConfig& cfg, int episodes, double epsilon, std::uint64_t seed) {
  cfg.validate();
  if (episodes < 1) throw ConfigError("episodes", "must be positive");
  if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("epsilon", "must be in [0, 1]");
  return cfg.precision == 64 ? evaluate_impl<double>(cfg, "", episodes, epsilon, seed)
                             : evaluate_impl<float>(cfg, "", episodes, epsilon, seed);
}

// -- ablation plans ----------------------------------------------------------

std::vector<PlanEntry> expand_scale_plan(const RunConfig& base, const std::vector<double>& ratios,
                                         double tolerance) {
  if (ratios.empty()) throw ConfigError("scale.ratios", "at least one ratio required");
  if (tolerance <= 0.0 || tolerance >= 1.0) throw ConfigError("scale.tolerance", "must be in (0, 1)");
  auto env = envs::make_env(base.env, 0, base.env_options);
  const envs::EnvSpec spec = env->spec();

  RunConfig ad = base;
  ad.agent = AgentKind::Ad;
  ad.conditioning = ConditioningMode::Output;  // the original formulation
  RunConfig arq = base;
  arq.agent = AgentKind::Arq;
  arq.conditioning = ConditioningMode::Input;

  const auto scaled_dims = [](const std::vector<int>& dims, double s) {
    std::vector<int> out;
    out.reserve(dims.size());
    for (int d : dims) out.push_back(std::max(2, static_cast<int>(std::lround(d * s))));
    return out;
  };
  const auto count_at = [&](const RunConfig& proto, double s) {
    RunConfig c = proto;
    c.hidden_dims = scaled_dims(proto.hidden_dims, s);
    return std::pair{agent_param_count(c, spec), c};
  };
  // Parameter count grows monotonically with the dim multiplier; bisect it,
  // keeping the closest candidate (rounding makes the map a step function).
  const auto fit_to_target = [&](const RunConfig& proto, long long target) {
    double lo = 0.02, hi = 8.0;
    auto best = count_at(proto, 1.0);
    auto consider = [&](double s) {
      auto cand = count_at(proto, s);
      if (std::llabs(cand.first - target) < std::llabs(best.first - target)) best = cand;
      return cand.first;
    };
    consider(lo);
    consider(hi);
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (consider(mid) < target ? lo : hi) = mid;
    }
    const double rel =
        std::abs(static_cast<double>(best.first - target)) / std::max<double>(1.0, static_cast<double>(target));
    if (rel > tolerance)
      throw std::runtime_error("scale plan: no " + to_string(proto.agent) + " dim scaling lands within " +
                               std::to_string(tolerance * 100) + "% of " + std::to_string(target) +
                               " parameters (closest " + std::to_string(best.first) + ")");
    return best;
  };

  const long long ad_base = agent_param_count(ad, spec);
  std::vector<PlanEntry> entries;
  for (double r : ratios) {
    if (r <= 0) throw ConfigError("scale.ratios", "ratios must be positive");
    const long long target = static_cast<long long>(std::llround(r * static_cast<double>(ad_base)));
    auto [ad_count, ad_cfg] = fit_to_target(ad, target);
    auto [arq_count, arq_cfg] = fit_to_target(arq, target);
    const double pair_rel = std::abs(static_cast<double>(ad_count - arq_count)) /
                            std::max<double>(1.0, static_cast<double>(std::max(ad_count, arq_count)));
    if (pair_rel > tolerance)
      throw std::runtime_error("scale plan: matched counts differ by more than the tolerance at ratio " +
                               std::to_string(r));
    char label[32];
    std::snprintf(label, sizeof label, "%g", r);
    entries.push_back({std::string("ad-") + label + "x", std::move(ad_cfg)});
    entries.push_back({std::string("arq-") + label + "x", std::move(arq_cfg)});
  }
  return entries;
}

AblationPlan load_ablation_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("plan: cannot open '" + path + "'");
  json plan_json;
  try {
    in >> plan_json;
  } catch (const json::exception& e) {
    throw ConfigError(path, std::string("not valid JSON: ") + e.what());
  }
  if (!plan_json.is_object()) throw ConfigError(path, "plan must be a JSON object");

  AblationPlan plan;
  plan.name = fs::path(path).stem().string();
  std::set<std::string> allowed{"name", "base", "seeds", "variants", "scale"};
  for (const auto& [key, value] : plan_json.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError(key, "unknown key in plan");
  }
  if (plan_json.contains("name")) plan.name = plan_json.at("name").get<std::string>();

  if (!plan_json.contains("base")) throw ConfigError("base", "plan needs a base config (path or object)");
  json base_json;
  if (plan_json.at("base").is_string()) {
    fs::path base_path = plan_json.at("base").get<std::string>();
    if (base_path.is_relative()) base_path = fs::path(path).parent_path() / base_path;
    std::ifstream bin(base_path);
    if (!bin) throw std::runtime_error("plan: cannot open base config '" + base_path.string() + "'");
    bin >> base_json;
  } else if (plan_json.at("base").is_object()) {
    base_json = plan_json.at("base");
  } else {
    throw ConfigError("base", "must be a path string or a config object");
  }
  if (plan_json.contains("seeds")) base_json["seeds"] = plan_json.at("seeds");

  const bool has_variants = plan_json.contains("variants");
  const bool has_scale = plan_json.contains("scale");
  if (has_variants == has_scale)
    throw ConfigError("variants", "plan needs exactly one of 'variants' or 'scale'");

  if (has_variants) {
    const json& variants = plan_json.at("variants");
    if (!variants.is_array() || variants.empty()) throw ConfigError("variants", "expected a nonempty array");
    for (const auto& v : variants) {
      if (!v.is_object() || !v.contains("name")) throw ConfigError("variants", "each entry needs a 'name'");
      for (const auto& [key, value] : v.items()) {
        (void)value;
        if (key != "name" && key != "set") throw ConfigError("variants." + key, "unknown key");
      }
      PlanEntry entry;
      entry.name = v.at("name").get<std::string>();
      json doc = base_json;
      if (v.contains("set"))
        for (const auto& spec : v.at("set")) apply_override(doc, spec.get<std::string>());
      entry.cfg = config_from_json(doc);
      try {
        entry.cfg.validate();
      } catch (const ConfigError& e) {
        throw ConfigError("variants[" + entry.name + "]." + e.field, e.what());
      }
      plan.entries.push_back(std::move(entry));
    }
  } else {
    const json& scale = plan_json.at("scale");
    if (!scale.is_object()) throw ConfigError("scale", "expected an object");
    for (const auto& [key, value] : scale.items()) {
      (void)value;
      if (key != "ratios" && key != "tolerance") throw ConfigError("scale." + key, "unknown key");
    }
    if (!scale.contains("ratios")) throw ConfigError("scale.ratios", "required");
    std::vector<double> ratios = scale.at("ratios").get<std::vector<double>>();
    const double tolerance = scale.value("tolerance", 0.01);
    RunConfig base_cfg = config_from_json(base_json);
    base_cfg.validate();
    plan.entries = expand_scale_plan(base_cfg, ratios, tolerance);
    for (auto& e : plan.entries) e.cfg.validate();
  }
  return plan;
}

std::vector<AblationRow> run_ablation(const AblationPlan& plan, const std::string& out_root, bool quiet) {
  std::vector<AblationRow> rows;
  const fs::path plan_dir = fs::path(out_root) / plan.name;
  for (const auto& entry : plan.entries) {
    if (!quiet) std::printf("== variant %s ==\n", entry.name.c_str());
    RunResult rr = run_training(entry.cfg, plan_dir.string(), entry.name, quiet);
    AblationRow row;
    row.name = entry.name;
    row.mean = rr.mean;
    row.stddev = rr.stddev;
    for (const auto& sr : rr.per_seed) row.per_seed.push_back(sr.last100_mean);
    rows.push_back(std::move(row));
  }
  json table = json::array();
  for (const auto& row : rows)
    table.push_back(
        json{{"variant", row.name}, {"mean", row.mean}, {"stddev", row.stddev}, {"per_seed", row.per_seed}});
  fs::create_directories(plan_dir);
  std::ofstream out(plan_dir / "table.json");
  out << table.dump(2) << "\n";
  return rows;
}

// -- gradient-check battery ----------------------------------------------------

GradcheckOutcome run_gradcheck(std::uint64_t seed, int configs_per_variant) {
  GradcheckOutcome outcome;
  SeededRng dims_rng(mix_seed(seed, "gradcheck"));
  char line[160];

  const CellKind kinds[] = {CellKind::AD, CellKind::ARQ};
  const ConditioningMode modes[] = {ConditioningMode::Input, ConditioningMode::Output};
  const GoodnessKind goodness[] = {GoodnessKind::RMS, GoodnessKind::Mean, GoodnessKind::MS, GoodnessKind::Var};

  for (CellKind kind : kinds)
    for (ConditioningMode mode : modes)
      for (GoodnessKind g : goodness) {
        double worst = 0.0;
        bool ok = true;
        for (int k = 0; k < configs_per_variant; ++k) {
          CellConfig cc;
          cc.obs_dim = 3 + static_cast<int>(dims_rng.next_u32() % 4);
          cc.below_dim = static_cast<int>(dims_rng.next_u32() % 5);
          cc.above_dim = static_cast<int>(dims_rng.next_u32() % 5);
          cc.n_actions = 2 + static_cast<int>(dims_rng.next_u32() % 3);
          cc.hidden_dim = 4 + static_cast<int>(dims_rng.next_u32() % 5);
          cc.readout_dim = 2 + static_cast<int>(dims_rng.next_u32() % 3);
          cc.kind = kind;
          cc.goodness = g;
          cc.conditioning = mode;
          const auto rep = grad_check(cc, dims_rng.next_u64());
          worst = std::max(worst, rep.max_rel_err);
          ok = ok && rep.pass;
        }
        std::snprintf(line, sizeof line, "%-24s %-6s %-6s max_rel_err %.3e  %s",
                      (std::string(to_string(kind)) + " cell").c_str(), to_string(mode), to_string(g),
                      worst, ok ? "ok" : "FAIL");
        outcome.lines.emplace_back(line);
        outcome.pass = outcome.pass && ok;
      }

  {
    double worst = 0.0;
    bool ok = true;
    for (int k = 0; k < configs_per_variant; ++k) {
      const int obs = 3 + static_cast<int>(dims_rng.next_u32() % 4);
      const int na = 2 + static_cast<int>(dims_rng.next_u32() % 3);
      const std::vector<int> dims{4 + static_cast<int>(dims_rng.next_u32() % 4),
                                  3 + static_cast<int>(dims_rng.next_u32() % 4)};
      const auto rep = mlp_grad_check(obs, dims, na, dims_rng.next_u64());
      worst = std::max(worst, rep.max_rel_err);
      ok = ok && rep.pass;
    }
    std::snprintf(line, sizeof line, "%-24s %-6s %-6s max_rel_err %.3e  %s", "mlp baseline", "-", "-", worst,
                  ok ? "ok" : "FAIL");
    outcome.lines.emplace_back(line);
    outcome.pass = outcome.pass && ok;
  }

  for (CellKind kind : kinds) {
    NetworkConfig net;
    net.obs_dim = 5;
    net.n_actions = 3;
    net.hidden_dims = {6, 5, 4};
    net.readout_dims = {3, 3, 3};
    net.cell_kind = kind;
    net.conditioning = kind == CellKind::ARQ ? ConditioningMode::Input : ConditioningMode::Output;
    const auto rep = locality_check(net, dims_rng.next_u64());
    std::snprintf(line, sizeof line, "%-24s %-6s %-6s max_rel_err %.3e  %s%s",
                  (std::string(to_string(kind)) + " locality").c_str(), "-", "-", rep.max_rel_err,
                  rep.cross_cell_leak ? "CROSS-CELL LEAK " : "", rep.pass ? "ok" : "FAIL");
    outcome.lines.emplace_back(line);
    outcome.pass = outcome.pass && rep.pass;
  }

  return outcome;
}

// -- activation inspection -----------------------------------------------------

namespace {

template <class R>
InspectReport inspect_impl(const RunConfig& cfg, const std::string& checkpoint_path, int states, int top_k,
                           std::uint64_t seed) {
  auto env = envs::make_env(cfg.env, env_seed(seed), cfg.env_options);
  const NetworkConfig net = network_config(cfg, env->spec());
  LearnerConfig lc = cfg.learner;
  lc.replay_capacity = static_cast<size_t>(std::max(lc.batch_size, 1));
  CellAgent<R> agent(net, lc, mix_seed(seed, "init"));

  if (!checkpoint_path.empty()) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const std::string digest = config_digest_hex(cfg);
    if (ck.config_digest != digest)
      throw ConfigError("checkpoint", "digest mismatch: config " + digest + " vs checkpoint " +
                                          ck.config_digest + " (" + checkpoint_path + ")");
    agent.load_matrices(ck.matrices);
  }

  const int n_actions = net.n_actions;
  const int d0 = net.cell_config(0).readout_dim;
  const int neurons = net.cell_kind == CellKind::ARQ ? d0 : 1;

  std::vector<std::vector<double>> sumsq(static_cast<size_t>(neurons),
                                         std::vector<double>(static_cast<size_t>(n_actions), 0.0));

  SeededRng rng(mix_seed(seed, "inspect"));
  Vec<R> obs = to_vec<R>(env->reset_seeded(env_seed(seed)));
  agent.begin_episode();
  constexpr double kInspectEpsilon = 0.05;

  for (int s = 0; s < states; ++s) {
    const auto topdown = topdown_inputs(net, agent.temporal_state());
    const auto acts = net_forward(agent.params().online, net, obs, topdown);
    const auto& cell0 = acts.cells[0];
    for (int a = 0; a < n_actions; ++a) {
      if (net.conditioning == ConditioningMode::Input) {
        const auto& y = cell0.branches[static_cast<size_t>(a)].y;
        if (net.cell_kind == CellKind::ARQ)
          for (int i = 0; i < neurons; ++i) sumsq[i][a] += static_cast<double>(y[i]) * static_cast<double>(y[i]);
        else
          sumsq[0][a] += static_cast<double>(y[0]) * static_cast<double>(y[0]);
      } else {
        const auto& y = cell0.branches[0].y;
        if (net.cell_kind == CellKind::ARQ)
          for (int i = 0; i < neurons; ++i) {
            const double v = static_cast<double>(y[static_cast<size_t>(a * d0 + i)]);
            sumsq[i][a] += v * v;
          }
        else
          sumsq[0][a] += static_cast<double>(y[a]) * static_cast<double>(y[a]);
      }
    }

    const int action = agent.act(obs, kInspectEpsilon, rng);
    const auto sr = env->step(action);
    if (sr.done) {
      obs = to_vec<R>(env->reset());
      agent.begin_episode();
    } else {
      obs = to_vec<R>(sr.obs);
    }
  }

  InspectReport report;
  report.states = states;
  report.n_actions = n_actions;
  report.neurons_total = neurons;

  std::vector<InspectRow> all(static_cast<size_t>(neurons));
  double total = 0.0;
  for (int i = 0; i < neurons; ++i) {
    all[i].neuron = i;
    all[i].rms_per_action.resize(static_cast<size_t>(n_actions));
    for (int a = 0; a < n_actions; ++a) {
      all[i].rms_per_action[a] = std::sqrt(sumsq[i][a] / std::max(1, states));
      total += all[i].rms_per_action[a];
    }
  }
  report.avg_rms_all = total / (static_cast<double>(neurons) * n_actions);

  const auto row_mean = [n_actions](const InspectRow& r) {
    double m = 0;
    for (double v : r.rms_per_action) m += v;
    return m / n_actions;
  };
  std::sort(all.begin(), all.end(), [&](const InspectRow& a, const InspectRow& b) {
    const double ma = row_mean(a), mb = row_mean(b);
    return ma != mb ? ma > mb : a.neuron < b.neuron;
  });
  all.resize(static_cast<size_t>(std::min(top_k, neurons)));
  report.rows = std::move(all);
  return report;
}

}  // namespace

InspectReport inspect_activations(const RunConfig& cfg, const std::string& checkpoint_path, int states,
                                  int top_k, std::uint64_t seed) {
  cfg.validate();
  if (cfg.agent == AgentKind::Dqn)
    throw ConfigError("agent", "inspect requires a cell agent (arq or ad); the MLP has no per-action readout");
  if (states < 1) throw ConfigError("states", "must be positive");
  if (top_k < 1) throw ConfigError("top", "must be positive");
  return cfg.precision == 64 ? inspect_impl<double>(cfg, checkpoint_path, states, top_k, seed)
                             : inspect_impl<float>(cfg, checkpoint_path, states, top_k, seed);
}

}  // namespace arq
