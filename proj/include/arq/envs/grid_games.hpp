#pragma once

#include <array>
#include <cstdint>
#include <memory>

#include "arq/envs/env.hpp"
#include "arq/envs/numpy_rng.hpp"

namespace arq::envs {

using GridMap = std::array<std::array<std::uint8_t, 10>, 10>;  // [row][col]

/// One 10x10 grid game: integer state, fixed rules, randomness only through
/// the shared per-env stream.  Dynamics conform to the published MinAtar
/// reference behavior (pinned by the committed trajectory fixtures).
class GridGame {
 public:
  virtual ~GridGame() = default;
  virtual void reset(NumpyRng& rng) = 0;
  /// One tick; returns (reward, terminal).  No-op once terminal.
  virtual std::pair<double, bool> act(int action, NumpyRng& rng) = 0;
  virtual void render(std::vector<double>& obs) const = 0;  // (row*10+col)*channels + c
  virtual int channels() const = 0;
  virtual bool terminal() const = 0;
};

/// Actions: 0 none, 1 left, 2 up, 3 right, 4 down, 5 fire (up/down/fire are
/// no-ops).  Ball moves diagonally; direction code is clockwise: 0 up-left,
/// 1 up-right, 2 down-right, 3 down-left.
class BreakoutGame final : public GridGame {
 public:
  void reset(NumpyRng& rng) override;
  std::pair<double, bool> act(int action, NumpyRng& rng) override;
  void render(std::vector<double>& obs) const override;
  int channels() const override { return 4; }  // paddle, ball, trail, brick
  bool terminal() const override { return terminal_; }

  int pos = 4;
  int ball_x = 0, ball_y = 0;
  int last_x = 0, last_y = 0;
  int ball_dir = 0;
  GridMap brick_map{};
  bool strike = false;
  bool terminal_ = false;
};

/// Actions: 0 none, 1 left, 2 up, 3 right, 4 down, 5 fire.  Aliens march and
/// descend at walls; nearest-column alien returns fire; difficulty ramps by
/// shortening the march interval each time the wave is cleared.
class SpaceInvadersGame final : public GridGame {
 public:
  explicit SpaceInvadersGame(bool ramping) : ramping_(ramping) {}
  void reset(NumpyRng& rng) override;
  std::pair<double, bool> act(int action, NumpyRng& rng) override;
  void render(std::vector<double>& obs) const override;
  int channels() const override { return 6; }
  bool terminal() const override { return terminal_; }

  static constexpr int kShotCoolDown = 5;
  static constexpr int kEnemyMoveInterval = 12;
  static constexpr int kEnemyShotInterval = 10;

  int pos = 5;
  GridMap f_bullet_map{}, e_bullet_map{}, alien_map{};
  int alien_dir = -1;
  int enemy_move_interval = kEnemyMoveInterval;
  int alien_move_timer = kEnemyMoveInterval;
  int alien_shot_timer = kEnemyShotInterval;
  int ramp_index = 0;
  int shot_timer = 0;
  bool ramping_ = true;
  bool terminal_ = false;
};

/// Sticky-action wrapper around a grid game: with probability
/// sticky_action_prob the previous action is repeated.  The draw happens on
/// every step and last_action persists across episode resets; the random
/// stream is shared with the game and only rewinds on reset_seeded.
class GridEnv final : public Env {
 public:
  GridEnv(std::unique_ptr<GridGame> game, std::string name, std::uint32_t seed, const GridEnvOptions& opts);

  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset() override;
  std::vector<double> reset_seeded(std::uint32_t seed) override;
  StepResult step(int action) override;

 private:
  std::vector<double> observe() const;

  std::unique_ptr<GridGame> game_;
  EnvSpec spec_;
  NumpyRng rng_;
  GridEnvOptions opts_;
  int last_action_ = 0;
};

}  // namespace arq::envs
