#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arq/config.hpp"

namespace arq {

// ---------------------------------------------------------------------------
// Training runs
// ---------------------------------------------------------------------------

struct SeedResult {
  std::uint64_t seed = 0;
  int episodes = 0;
  long long train_steps = 0;
  double last100_mean = 0.0;  // mean return over the final (up to) 100 episodes
  double wall_time_s = 0.0;
  std::string metrics_path;
  std::string final_checkpoint;
};

struct RunResult {
  std::string digest;
  std::string run_dir;
  std::vector<SeedResult> per_seed;
  double mean = 0.0;    // of last100_mean across seeds
  double stddev = 0.0;  // population std across seeds
};

/// Trains every seed in cfg sequentially.  Artifacts land under
///   <out_root>/<run_name>/            config.json, summary.json
///   <out_root>/<run_name>/seed<k>/    metrics.jsonl, ckpt_step*.bin,
///                                     ckpt_final.bin, summary.json
/// run_name defaults to "<env>-<agent>-<digest16>".  Progress lines go to
/// stdout unless quiet.
RunResult run_training(const RunConfig& cfg, const std::string& out_root, std::string run_name = "",
                       bool quiet = false);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalStats {
  int episodes = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Greedy (or epsilon-softened) rollouts of a checkpointed policy.  The
/// checkpoint's embedded digest must match cfg's; mismatch throws ConfigError.
EvalStats evaluate_checkpoint(const RunConfig& cfg, const std::string& checkpoint_path, int episodes,
                              double epsilon, std::uint64_t seed);

/// Rollouts of a freshly initialized agent (no checkpoint); the floor check.
EvalStats evaluate_fresh(const RunConfig& cfg, int episodes, double epsilon, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Ablation plans
// ---------------------------------------------------------------------------

struct PlanEntry {
  std::string name;
  RunConfig cfg;
};

struct AblationPlan {
  std::vector<PlanEntry> entries;  // every cfg already validated
  std::string name;                // plan file stem
};

/// Plan file: {"base": <path or inline config>, "seeds": [...],
/// "variants": [{"name":..., "set": ["dotted.path=value", ...]}, ...]} or
/// {"base": ..., "seeds": [...], "scale": {"ratios": [...], "tolerance": 0.01}}.
/// Relative base paths resolve against the plan file's directory.
AblationPlan load_ablation_plan(const std::string& path);

/// Scaling-study expansion: for each ratio r of the ad-cell baseline's
/// parameter count, emit matched "ad-~x"/"arq-~x" variants whose hidden dims
/// are scaled so both agents land within `tolerance` of the target count
/// (throws std::runtime_error when no dim scaling gets close enough).
std::vector<PlanEntry> expand_scale_plan(const RunConfig& base, const std::vector<double>& ratios,
                                         double tolerance);

struct AblationRow {
  std::string name;
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> per_seed;
};

/// Runs every entry sequentially (no shared state) and aggregates the
/// last-100-episode statistic.  Writes <out_root>/<plan name>/table.json.
std::vector<AblationRow> run_ablation(const AblationPlan& plan, const std::string& out_root, bool quiet = false);

// ---------------------------------------------------------------------------
// Gradient-check battery
// ---------------------------------------------------------------------------

struct GradcheckOutcome {
  bool pass = true;
  std::vector<std::string> lines;  // one human-readable line per check
};

/// Finite-difference checks for every cell variant (kind x conditioning x
/// goodness) and the MLP baseline, plus the cross-cell locality probe.
GradcheckOutcome run_gradcheck(std::uint64_t seed, int configs_per_variant);

// ---------------------------------------------------------------------------
// Activation inspection
// ---------------------------------------------------------------------------

struct InspectRow {
  int neuron = 0;
  std::vector<double> rms_per_action;  // root-mean-square over visited states
};

struct InspectReport {
  int states = 0;
  int n_actions = 0;
  int neurons_total = 0;
  double avg_rms_all = 0.0;  // mean RMS over every neuron/action pair
  std::vector<InspectRow> rows;  // top-K neurons by mean RMS, descending
};

/// Rolls the checkpointed policy (epsilon 0.05) until `states` states are
/// visited and ranks the first layer's per-action readout activations.
/// Cell agents only; the MLP baseline has no per-action readout vector.
InspectReport inspect_activations(const RunConfig& cfg, const std::string& checkpoint_path, int states,
                                  int top_k, std::uint64_t seed);

}  // namespace arq
