#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arq/envs/env.hpp"

namespace arq::envs {

/// FNV-1a 64-bit over a canonical observation encoding: one byte (0/1) per
/// cell for grid observations, 8 little-endian IEEE bytes per element
/// otherwise.  Shared with the reference fixture generator.
std::uint64_t obs_digest(const std::vector<double>& obs, bool grid);

struct FixtureRecord {
  enum class Kind { Reset, Step } kind = Kind::Step;
  int action = 0;
  double reward = 0.0;
  bool done = false;
  std::uint64_t digest = 0;
};

struct TrajectoryFixture {
  int version = 1;
  std::string env;
  std::uint32_t seed = 0;
  int steps = 0;
  double sticky = 0.1;
  bool ramping = true;
  std::vector<FixtureRecord> records;
};

TrajectoryFixture read_fixture(const std::string& path);
void write_fixture(const std::string& path, const TrajectoryFixture& fx);

/// Roll the fixture's env/seed forward and compare every record.  Returns an
/// empty string on an exact match, else a description of the first mismatch.
std::string replay_fixture(const TrajectoryFixture& fx);

/// Generate a fixture by rolling the named env with the scripted action
/// stream (PCG32, stream 77 -- same rule as the reference generator).
TrajectoryFixture generate_fixture(const std::string& env_name, std::uint32_t seed, int steps);

}  // namespace arq::envs
