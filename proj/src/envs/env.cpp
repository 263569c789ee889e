#include "arq/envs/env.hpp"

#include <cmath>
#include <stdexcept>

#include "arq/envs/grid_games.hpp"
#include "arq/envs/pointmass.hpp"
#include "arq/linalg.hpp"

namespace arq::envs {

std::unique_ptr<Env> make_env(const std::string& name, std::uint32_t seed) {
  return make_env(name, seed, GridEnvOptions{});
}

std::unique_ptr<Env> make_env(const std::string& name, std::uint32_t seed, const GridEnvOptions& opts) {
  if (name == "breakout")
    return std::make_unique<GridEnv>(std::make_unique<BreakoutGame>(), name, seed, opts);
  if (name == "space_invaders")
    return std::make_unique<GridEnv>(std::make_unique<SpaceInvadersGame>(opts.difficulty_ramping), name, seed, opts);
  if (name == "pointmass") return std::make_unique<PointMassEnv>(seed);
  throw std::invalid_argument("make_env: unknown environment '" + name + "'");
}

std::vector<std::vector<double>> bang_bang_actions(int k) {
  if (k < 1) throw std::invalid_argument("bang_bang_actions: k must be >= 1");
  if (k > 16) throw std::invalid_argument("bang_bang_actions: k = " + std::to_string(k) + " exceeds the 2^16 guard");
  std::vector<std::vector<double>> out;
  out.reserve(1u << k);
  for (int i = 0; i < (1 << k); ++i) {
    std::vector<double> v(k);
    // Lexicographic with -1 < +1: component 0 is the most significant bit.
    for (int j = 0; j < k; ++j) v[j] = (i >> (k - 1 - j)) & 1 ? 1.0 : -1.0;
    out.push_back(std::move(v));
  }
  return out;
}

BaselineStats random_policy_baseline(Env& env, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("random_policy_baseline: episodes must be >= 1");
  SeededRng rng(seed);
  const int n_actions = env.spec().n_actions;
  std::vector<double> returns;
  returns.reserve(episodes);
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset();
    double ret = 0.0;
    bool done = false;
    while (!done) {
      auto res = env.step(static_cast<int>(rng.bounded(static_cast<std::uint32_t>(n_actions))));
      ret += res.reward;
      done = res.done;
    }
    returns.push_back(ret);
  }
  BaselineStats stats;
  stats.episodes = episodes;
  for (double r : returns) stats.mean += r;
  stats.mean /= episodes;
  double var = 0.0;
  for (double r : returns) var += (r - stats.mean) * (r - stats.mean);
  stats.stddev = std::sqrt(var / episodes);
  return stats;
}

}  // namespace arq::envs
