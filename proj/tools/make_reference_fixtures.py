#!/usr/bin/env python3
"""Generate grid-game trajectory fixtures from the numpy reference dynamics.

This is the provenance anchor for the C++ Breakout / SpaceInvaders
implementations: the game logic below is a direct transcription of the
published MinAtar 10x10 dynamics (sticky actions 0.1, difficulty ramping on),
driven by numpy's legacy RandomState so the random streams match the original
bit for bit.  The C++ envs must replay every fixture exactly; `arqlab fixtures
--verify` and the env test suite enforce that.

Usage: python3 tools/make_reference_fixtures.py [outdir]
"""

import os
import sys

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK64
    return h


class Pcg32:
    """Minimal PCG32 (XSH-RR 64/32); mirrors the C++ SeededRng, used only to
    pick the scripted action sequences so both generators agree."""

    MULT = 6364136223846793005

    def __init__(self, seed: int, stream: int = 0):
        self.state = 0
        self.inc = ((stream << 1) | 1) & MASK64
        self.next_u32()
        self.state = (self.state + seed) & MASK64
        self.next_u32()

    def next_u32(self) -> int:
        old = self.state
        self.state = (old * self.MULT + self.inc) & MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((32 - rot) & 31))) & 0xFFFFFFFF

    def bounded(self, n: int) -> int:
        return (self.next_u32() * n) >> 32


class BreakoutGame:
    channels = {"paddle": 0, "ball": 1, "trail": 2, "brick": 3}
    action_map = ["n", "l", "u", "r", "d", "f"]

    def __init__(self, ramping=None, random_state=None):
        self.random = random_state if random_state is not None else np.random.RandomState()
        self.reset()

    def reset(self):
        self.ball_y = 3
        ball_start = self.random.choice(2)
        self.ball_x, self.ball_dir = [(0, 2), (9, 3)][ball_start]
        self.pos = 4
        self.brick_map = np.zeros((10, 10))
        self.brick_map[1:4, :] = 1
        self.strike = False
        self.last_x = self.ball_x
        self.last_y = self.ball_y
        self.terminal = False

    def act(self, a):
        r = 0
        if self.terminal:
            return r, self.terminal
        a = self.action_map[a]

        if a == "l":
            self.pos = max(0, self.pos - 1)
        elif a == "r":
            self.pos = min(9, self.pos + 1)

        # Ball directions are clockwise: 0 up-left, 1 up-right, 2 down-right,
        # 3 down-left.
        self.last_x = self.ball_x
        self.last_y = self.ball_y
        if self.ball_dir == 0:
            new_x, new_y = self.ball_x - 1, self.ball_y - 1
        elif self.ball_dir == 1:
            new_x, new_y = self.ball_x + 1, self.ball_y - 1
        elif self.ball_dir == 2:
            new_x, new_y = self.ball_x + 1, self.ball_y + 1
        else:
            new_x, new_y = self.ball_x - 1, self.ball_y + 1

        strike_toggle = False
        if new_x < 0 or new_x > 9:
            new_x = max(0, min(9, new_x))
            self.ball_dir = [1, 0, 3, 2][self.ball_dir]
        if new_y < 0:
            new_y = 0
            self.ball_dir = [3, 2, 1, 0][self.ball_dir]
        elif self.brick_map[new_y, new_x] == 1:
            strike_toggle = True
            if not self.strike:
                r += 1
                self.strike = True
                self.brick_map[new_y, new_x] = 0
                new_y = self.last_y
                self.ball_dir = [3, 2, 1, 0][self.ball_dir]
        elif new_y == 9:
            if np.count_nonzero(self.brick_map) == 0:
                self.brick_map[1:4, :] = 1
            if self.ball_x == self.pos:
                self.ball_dir = [3, 2, 1, 0][self.ball_dir]
                new_y = self.last_y
            elif new_x == self.pos:
                self.ball_dir = [2, 3, 0, 1][self.ball_dir]
                new_y = self.last_y
            else:
                self.terminal = True

        if not strike_toggle:
            self.strike = False

        self.ball_x = new_x
        self.ball_y = new_y
        return r, self.terminal

    def state(self):
        s = np.zeros((10, 10, len(self.channels)), dtype=bool)
        s[self.ball_y, self.ball_x, self.channels["ball"]] = 1
        s[9, self.pos, self.channels["paddle"]] = 1
        s[self.last_y, self.last_x, self.channels["trail"]] = 1
        s[:, :, self.channels["brick"]] = self.brick_map.astype(bool)
        return s


SI_SHOT_COOL_DOWN = 5
SI_ENEMY_MOVE_INTERVAL = 12
SI_ENEMY_SHOT_INTERVAL = 10


class SpaceInvadersGame:
    channels = {
        "cannon": 0,
        "alien": 1,
        "alien_left": 2,
        "alien_right": 3,
        "friendly_bullet": 4,
        "enemy_bullet": 5,
    }
    action_map = ["n", "l", "u", "r", "d", "f"]

    def __init__(self, ramping=True, random_state=None):
        self.random = random_state if random_state is not None else np.random.RandomState()
        self.ramping = ramping
        self.reset()

    def reset(self):
        self.pos = 5
        self.f_bullet_map = np.zeros((10, 10))
        self.e_bullet_map = np.zeros((10, 10))
        self.alien_map = np.zeros((10, 10))
        self.alien_map[0:4, 2:8] = 1
        self.alien_dir = -1
        self.enemy_move_interval = SI_ENEMY_MOVE_INTERVAL
        self.alien_move_timer = self.enemy_move_interval
        self.alien_shot_timer = SI_ENEMY_SHOT_INTERVAL
        self.ramp_index = 0
        self.shot_timer = 0
        self.terminal = False

    def act(self, a):
        r = 0
        if self.terminal:
            return r, self.terminal
        a = self.action_map[a]

        if a == "f" and self.shot_timer == 0:
            self.f_bullet_map[9, self.pos] = 1
            self.shot_timer = SI_SHOT_COOL_DOWN
        elif a == "l":
            self.pos = max(0, self.pos - 1)
        elif a == "r":
            self.pos = min(9, self.pos + 1)

        self.f_bullet_map = np.roll(self.f_bullet_map, -1, axis=0)
        self.f_bullet_map[9, :] = 0

        self.e_bullet_map = np.roll(self.e_bullet_map, 1, axis=0)
        self.e_bullet_map[0, :] = 0

        if self.e_bullet_map[9, self.pos]:
            self.terminal = True

        if self.alien_map[9, self.pos]:
            self.terminal = True
        if self.alien_move_timer == 0:
            self.alien_move_timer = min(np.count_nonzero(self.alien_map), self.enemy_move_interval)
            if (np.sum(self.alien_map[:, 0]) > 0 and self.alien_dir < 0) or (
                np.sum(self.alien_map[:, 9]) > 0 and self.alien_dir > 0
            ):
                self.alien_dir = -self.alien_dir
                if np.sum(self.alien_map[9, :]) > 0:
                    self.terminal = True
                self.alien_map = np.roll(self.alien_map, 1, axis=0)
            else:
                self.alien_map = np.roll(self.alien_map, self.alien_dir, axis=1)
            if self.alien_map[9, self.pos]:
                self.terminal = True
        if self.alien_shot_timer == 0:
            self.alien_shot_timer = SI_ENEMY_SHOT_INTERVAL
            nearest = self._nearest_alien(self.pos)
            self.e_bullet_map[nearest[0], nearest[1]] = 1

        kill_locations = np.logical_and(self.alien_map, self.alien_map == self.f_bullet_map)
        r += np.sum(kill_locations)
        self.alien_map[kill_locations] = 0
        self.f_bullet_map[kill_locations] = 0

        self.shot_timer -= self.shot_timer > 0
        self.alien_move_timer -= 1
        self.alien_shot_timer -= 1

        if np.count_nonzero(self.alien_map) == 0:
            if self.enemy_move_interval > 6 and self.ramping:
                self.enemy_move_interval -= 1
                self.ramp_index += 1
            self.alien_map[0:4, 2:8] = 1

        return r, self.terminal

    def _nearest_alien(self, pos):
        search_order = [i for i in range(10)]
        search_order.sort(key=lambda x: abs(x - pos))
        for i in search_order:
            if np.sum(self.alien_map[:, i]) > 0:
                return [np.max(np.where(self.alien_map[:, i] == 1)), i]
        return None

    def state(self):
        s = np.zeros((10, 10, len(self.channels)), dtype=bool)
        s[9, self.pos, self.channels["cannon"]] = 1
        s[:, :, self.channels["alien"]] = self.alien_map
        if self.alien_dir < 0:
            s[:, :, self.channels["alien_left"]] = self.alien_map
        else:
            s[:, :, self.channels["alien_right"]] = self.alien_map
        s[:, :, self.channels["friendly_bullet"]] = self.f_bullet_map
        s[:, :, self.channels["enemy_bullet"]] = self.e_bullet_map
        return s


class GridEnvironment:
    """Sticky-action wrapper: with prob 0.1 the previous action is repeated.
    The draw happens on every act and last_action persists across resets."""

    def __init__(self, game_cls, seed, sticky_action_prob=0.1, difficulty_ramping=True):
        self.random = np.random.RandomState(seed)
        self.game = game_cls(ramping=difficulty_ramping, random_state=self.random)
        self.sticky_action_prob = sticky_action_prob
        self.last_action = 0

    def reset(self):
        self.game.reset()
        return self.game.state()

    def act(self, a):
        if self.random.rand() < self.sticky_action_prob:
            a = self.last_action
        self.last_action = a
        return self.game.act(a)

    def state(self):
        return self.game.state()


def obs_digest(state) -> int:
    return fnv1a64(state.astype(np.uint8).tobytes(order="C"))


def write_fixture(path, env_name, game_cls, seed, steps):
    env = GridEnvironment(game_cls, seed)
    actions = Pcg32(seed, stream=77)
    lines = [
        "# arqlab trajectory fixture v1",
        f"env {env_name}",
        f"seed {seed}",
        f"steps {steps}",
        "sticky 0.1",
        "ramping 1",
    ]
    obs = env.reset()
    lines.append(f"reset {obs_digest(obs):016x}")
    for _ in range(steps):
        a = actions.bounded(6)
        r, done = env.act(a)
        lines.append(f"step {a} {int(r)} {int(done)} {obs_digest(env.state()):016x}")
        if done:
            obs = env.reset()
            lines.append(f"reset {obs_digest(obs):016x}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def main():
    outdir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")
    os.makedirs(outdir, exist_ok=True)
    for seed in range(5):
        write_fixture(os.path.join(outdir, f"breakout_seed{seed}.txt"), "breakout", BreakoutGame, seed, 200)
        write_fixture(
            os.path.join(outdir, f"space_invaders_seed{seed}.txt"), "space_invaders", SpaceInvadersGame, seed, 200
        )
    print(f"fixtures written to {outdir}")


if __name__ == "__main__":
    main()
