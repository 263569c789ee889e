#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace arq::envs {

struct EnvSpec {
  std::string name;
  int obs_dim = 0;
  int n_actions = 0;
  std::pair<double, double> reward_range{0.0, 0.0};
};

struct StepResult {
  std::vector<double> obs;
  double reward = 0.0;
  bool done = false;
};

/// Episodic environment.  A single instance is owned by one rollout loop;
/// reset() starts a fresh episode while the internal random stream continues,
/// reset_seeded() rewinds the stream itself (same seed -> identical episode
/// sequence).
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::vector<double> reset() = 0;
  virtual std::vector<double> reset_seeded(std::uint32_t seed) = 0;
  /// Stepping a finished episode throws std::logic_error.
  virtual StepResult step(int action) = 0;
};

struct GridEnvOptions {
  double sticky_action_prob = 0.1;
  bool difficulty_ramping = true;
};

/// names: "breakout", "space_invaders", "pointmass"
std::unique_ptr<Env> make_env(const std::string& name, std::uint32_t seed);
std::unique_ptr<Env> make_env(const std::string& name, std::uint32_t seed, const GridEnvOptions& opts);

/// All 2^k force vectors in {-1,+1}^k, lexicographic with -1 < +1.
/// k > 16 throws (combinatorial guard).
std::vector<std::vector<double>> bang_bang_actions(int k);

struct BaselineStats {
  double mean = 0.0;
  double stddev = 0.0;
  int episodes = 0;
};

/// Uniform-random rollouts; the acceptance-test floor for learning checks.
BaselineStats random_policy_baseline(Env& env, int episodes, std::uint64_t seed);

}  // namespace arq::envs
