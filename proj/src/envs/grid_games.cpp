#include "arq/envs/grid_games.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace arq::envs {

namespace {

int count_nonzero(const GridMap& m) {
  int n = 0;
  for (const auto& row : m)
    for (auto v : row) n += (v != 0);
  return n;
}

int row_sum(const GridMap& m, int row) {
  int n = 0;
  for (auto v : m[row]) n += (v != 0);
  return n;
}

int col_sum(const GridMap& m, int col) {
  int n = 0;
  for (const auto& row : m) n += (row[col] != 0);
  return n;
}

// np.roll(m, -1, axis=0): row i <- row i+1, wrapping.
void roll_rows_up(GridMap& m) {
  auto first = m[0];
  for (int i = 0; i < 9; ++i) m[i] = m[i + 1];
  m[9] = first;
}

// np.roll(m, 1, axis=0): row i <- row i-1, wrapping.
void roll_rows_down(GridMap& m) {
  auto last = m[9];
  for (int i = 9; i > 0; --i) m[i] = m[i - 1];
  m[0] = last;
}

// np.roll(m, shift, axis=1): new[:, j] = old[:, j-shift mod 10].
void roll_cols(GridMap& m, int shift) {
  for (auto& row : m) {
    std::array<std::uint8_t, 10> tmp{};
    for (int j = 0; j < 10; ++j) tmp[(j + shift + 10) % 10] = row[j];
    row = tmp;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Breakout

void BreakoutGame::reset(NumpyRng& rng) {
  ball_y = 3;
  int ball_start = rng.choice2();
  if (ball_start == 0) {
    ball_x = 0;
    ball_dir = 2;  // down-right
  } else {
    ball_x = 9;
    ball_dir = 3;  // down-left
  }
  pos = 4;
  brick_map = GridMap{};
  for (int y = 1; y < 4; ++y) brick_map[y].fill(1);
  strike = false;
  last_x = ball_x;
  last_y = ball_y;
  terminal_ = false;
}

std::pair<double, bool> BreakoutGame::act(int action, NumpyRng&) {
  double r = 0.0;
  if (terminal_) return {r, terminal_};

  if (action == 1) pos = std::max(0, pos - 1);
  else if (action == 3) pos = std::min(9, pos + 1);

  last_x = ball_x;
  last_y = ball_y;
  static constexpr int kDx[4] = {-1, +1, +1, -1};
  static constexpr int kDy[4] = {-1, -1, +1, +1};
  int new_x = ball_x + kDx[ball_dir];
  int new_y = ball_y + kDy[ball_dir];

  static constexpr int kSideBounce[4] = {1, 0, 3, 2};    // flip horizontal
  static constexpr int kFlatBounce[4] = {3, 2, 1, 0};    // flip vertical
  static constexpr int kCornerBounce[4] = {2, 3, 0, 1};  // full reverse

  bool strike_toggle = false;
  if (new_x < 0 || new_x > 9) {
    new_x = std::clamp(new_x, 0, 9);
    ball_dir = kSideBounce[ball_dir];
  }
  if (new_y < 0) {
    new_y = 0;
    ball_dir = kFlatBounce[ball_dir];
  } else if (brick_map[new_y][new_x] == 1) {
    strike_toggle = true;
    if (!strike) {
      r += 1.0;
      strike = true;
      brick_map[new_y][new_x] = 0;
      new_y = last_y;
      ball_dir = kFlatBounce[ball_dir];
    }
  } else if (new_y == 9) {
    if (count_nonzero(brick_map) == 0) {
      for (int y = 1; y < 4; ++y) brick_map[y].fill(1);
    }
    if (ball_x == pos) {
      ball_dir = kFlatBounce[ball_dir];
      new_y = last_y;
    } else if (new_x == pos) {
      ball_dir = kCornerBounce[ball_dir];
      new_y = last_y;
    } else {
      terminal_ = true;
    }
  }

  if (!strike_toggle) strike = false;

  ball_x = new_x;
  ball_y = new_y;
  return {r, terminal_};
}

void BreakoutGame::render(std::vector<double>& obs) const {
  const int C = channels();
  obs.assign(static_cast<size_t>(100) * C, 0.0);
  auto set = [&](int y, int x, int c) { obs[(static_cast<size_t>(y) * 10 + x) * C + c] = 1.0; };
  set(ball_y, ball_x, 1);
  set(9, pos, 0);
  set(last_y, last_x, 2);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x)
      if (brick_map[y][x]) set(y, x, 3);
}

// ---------------------------------------------------------------------------
// SpaceInvaders

void SpaceInvadersGame::reset(NumpyRng&) {
  pos = 5;
  f_bullet_map = GridMap{};
  e_bullet_map = GridMap{};
  alien_map = GridMap{};
  for (int y = 0; y < 4; ++y)
    for (int x = 2; x < 8; ++x) alien_map[y][x] = 1;
  alien_dir = -1;
  enemy_move_interval = kEnemyMoveInterval;
  alien_move_timer = enemy_move_interval;
  alien_shot_timer = kEnemyShotInterval;
  ramp_index = 0;
  shot_timer = 0;
  terminal_ = false;
}

std::pair<double, bool> SpaceInvadersGame::act(int action, NumpyRng&) {
  double r = 0.0;
  if (terminal_) return {r, terminal_};

  if (action == 5 && shot_timer == 0) {
    f_bullet_map[9][pos] = 1;
    shot_timer = kShotCoolDown;
  } else if (action == 1) {
    pos = std::max(0, pos - 1);
  } else if (action == 3) {
    pos = std::min(9, pos + 1);
  }

  roll_rows_up(f_bullet_map);
  f_bullet_map[9].fill(0);

  roll_rows_down(e_bullet_map);
  e_bullet_map[0].fill(0);

  if (e_bullet_map[9][pos]) terminal_ = true;

  if (alien_map[9][pos]) terminal_ = true;
  if (alien_move_timer == 0) {
    alien_move_timer = std::min(count_nonzero(alien_map), enemy_move_interval);
    bool at_wall = (col_sum(alien_map, 0) > 0 && alien_dir < 0) || (col_sum(alien_map, 9) > 0 && alien_dir > 0);
    if (at_wall) {
      alien_dir = -alien_dir;
      if (row_sum(alien_map, 9) > 0) terminal_ = true;
      roll_rows_down(alien_map);
    } else {
      roll_cols(alien_map, alien_dir);
    }
    if (alien_map[9][pos]) terminal_ = true;
  }
  if (alien_shot_timer == 0) {
    alien_shot_timer = kEnemyShotInterval;
    // Nearest occupied column (ties to the lower index), bullet from the
    // lowest alien in it.
    int best_col = -1, best_dist = 100;
    for (int c = 0; c < 10; ++c) {
      if (col_sum(alien_map, c) > 0 && std::abs(c - pos) < best_dist) {
        best_dist = std::abs(c - pos);
        best_col = c;
      }
    }
    if (best_col >= 0) {
      int max_row = 0;
      for (int y = 0; y < 10; ++y)
        if (alien_map[y][best_col]) max_row = y;
      e_bullet_map[max_row][best_col] = 1;
    }
  }

  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      if (alien_map[y][x] && f_bullet_map[y][x]) {
        r += 1.0;
        alien_map[y][x] = 0;
        f_bullet_map[y][x] = 0;
      }
    }
  }

  if (shot_timer > 0) shot_timer -= 1;
  alien_move_timer -= 1;
  alien_shot_timer -= 1;

  if (count_nonzero(alien_map) == 0) {
    if (enemy_move_interval > 6 && ramping_) {
      enemy_move_interval -= 1;
      ramp_index += 1;
    }
    for (int y = 0; y < 4; ++y)
      for (int x = 2; x < 8; ++x) alien_map[y][x] = 1;
  }

  return {r, terminal_};
}

void SpaceInvadersGame::render(std::vector<double>& obs) const {
  const int C = channels();
  obs.assign(static_cast<size_t>(100) * C, 0.0);
  auto set = [&](int y, int x, int c) { obs[(static_cast<size_t>(y) * 10 + x) * C + c] = 1.0; };
  set(9, pos, 0);
  const int dir_channel = alien_dir < 0 ? 2 : 3;
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      if (alien_map[y][x]) {
        set(y, x, 1);
        set(y, x, dir_channel);
      }
      if (f_bullet_map[y][x]) set(y, x, 4);
      if (e_bullet_map[y][x]) set(y, x, 5);
    }
  }
}

// ---------------------------------------------------------------------------
// Sticky-action wrapper

GridEnv::GridEnv(std::unique_ptr<GridGame> game, std::string name, std::uint32_t seed, const GridEnvOptions& opts)
    : game_(std::move(game)), rng_(seed), opts_(opts) {
  spec_.name = std::move(name);
  spec_.obs_dim = 100 * game_->channels();
  spec_.n_actions = 6;
  spec_.reward_range = {0.0, spec_.name == "breakout" ? 1.0 : 24.0};
  game_->reset(rng_);
}

std::vector<double> GridEnv::reset() {
  game_->reset(rng_);
  return observe();
}

std::vector<double> GridEnv::reset_seeded(std::uint32_t seed) {
  rng_.reseed(seed);
  last_action_ = 0;
  game_->reset(rng_);
  return observe();
}

StepResult GridEnv::step(int action) {
  if (action < 0 || action >= spec_.n_actions)
    throw std::invalid_argument(spec_.name + ": action " + std::to_string(action) + " out of range");
  if (game_->terminal()) throw std::logic_error(spec_.name + ": step() on a finished episode");
  if (rng_.rand() < opts_.sticky_action_prob) action = last_action_;
  last_action_ = action;
  auto [reward, done] = game_->act(action, rng_);
  StepResult res;
  res.obs = observe();
  res.reward = reward;
  res.done = done;
  return res;
}

std::vector<double> GridEnv::observe() const {
  std::vector<double> obs;
  game_->render(obs);
  return obs;
}

}  // namespace arq::envs
