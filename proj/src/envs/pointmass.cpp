#include "arq/envs/pointmass.hpp"

#include <cmath>
#include <stdexcept>

namespace arq::envs {

PointMassEnv::PointMassEnv(std::uint32_t seed) : rng_(seed), forces_(bang_bang_actions(kDim)) {
  spec_.name = "pointmass";
  spec_.obs_dim = 3 * kDim;  // position, velocity, target
  spec_.n_actions = static_cast<int>(forces_.size());
  spec_.reward_range = {0.0, 1.0};
  diag_ = 2.0 * std::sqrt(static_cast<double>(kDim));  // arena [-1,1]^k diagonal
  reset();
}

std::vector<double> PointMassEnv::reset() {
  for (int i = 0; i < kDim; ++i) pos_[i] = -0.8 + 1.6 * rng_.rand();
  for (int i = 0; i < kDim; ++i) target_[i] = -0.8 + 1.6 * rng_.rand();
  for (int i = 0; i < kDim; ++i) vel_[i] = 0.0;
  step_count_ = 0;
  done_ = false;
  return observe();
}

std::vector<double> PointMassEnv::reset_seeded(std::uint32_t seed) {
  rng_.reseed(seed);
  return reset();
}

StepResult PointMassEnv::step(int action) {
  if (action < 0 || action >= spec_.n_actions)
    throw std::invalid_argument("pointmass: action " + std::to_string(action) + " out of range");
  if (done_) throw std::logic_error("pointmass: step() on a finished episode");

  const auto& f = forces_[action];
  for (int i = 0; i < kDim; ++i) {
    vel_[i] += kDt * f[i];
    pos_[i] += kDt * vel_[i];
  }
  step_count_ += 1;
  done_ = step_count_ >= kHorizon;

  double d2 = 0.0;
  for (int i = 0; i < kDim; ++i) {
    double d = pos_[i] - target_[i];
    d2 += d * d;
  }
  double reward = std::max(0.0, 1.0 - std::sqrt(d2) / diag_);

  StepResult res;
  res.obs = observe();
  res.reward = reward;
  res.done = done_;
  return res;
}

std::vector<double> PointMassEnv::observe() const {
  std::vector<double> obs(spec_.obs_dim);
  for (int i = 0; i < kDim; ++i) {
    obs[i] = pos_[i];
    obs[kDim + i] = vel_[i];
    obs[2 * kDim + i] = target_[i];
  }
  return obs;
}

}  // namespace arq::envs
