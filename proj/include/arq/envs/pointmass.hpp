#pragma once

#include "arq/envs/env.hpp"
#include "arq/envs/numpy_rng.hpp"

namespace arq::envs {

/// Continuous k-dimensional point mass driven through bang-bang force
/// vectors (all components +-1).  Start and target are drawn uniformly in
/// [-0.8, 0.8]^k, velocity starts at rest, and each step earns
/// max(0, 1 - |p - target| / D) with D the arena diagonal, so returns are
/// nonnegative and bounded by the horizon.  Dynamics run in 64-bit:
/// v += dt*f; p += dt*v.
class PointMassEnv final : public Env {
 public:
  static constexpr int kDim = 2;
  static constexpr double kDt = 0.05;
  static constexpr int kHorizon = 200;

  explicit PointMassEnv(std::uint32_t seed);

  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset() override;
  std::vector<double> reset_seeded(std::uint32_t seed) override;
  StepResult step(int action) override;

 private:
  std::vector<double> observe() const;

  EnvSpec spec_;
  NumpyRng rng_;
  std::vector<std::vector<double>> forces_;
  double pos_[kDim]{}, vel_[kDim]{}, target_[kDim]{};
  int step_count_ = 0;
  bool done_ = false;
  double diag_ = 0.0;
};

}  // namespace arq::envs
