#include "arq/envs/fixtures.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "arq/digest.hpp"
#include "arq/linalg.hpp"

namespace arq::envs {

namespace {

std::string hex16(std::uint64_t v) { return to_hex16(v); }

}  // namespace

std::uint64_t obs_digest(const std::vector<double>& obs, bool grid) {
  std::vector<unsigned char> bytes;
  if (grid) {
    bytes.resize(obs.size());
    for (size_t i = 0; i < obs.size(); ++i) bytes[i] = obs[i] != 0.0 ? 1 : 0;
  } else {
    bytes.resize(obs.size() * 8);
    static_assert(sizeof(double) == 8);
    for (size_t i = 0; i < obs.size(); ++i) std::memcpy(bytes.data() + i * 8, &obs[i], 8);  // little-endian host
  }
  return fnv1a64(bytes.data(), bytes.size());
}

TrajectoryFixture read_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_fixture: cannot open " + path);
  TrajectoryFixture fx;
  std::string line;
  bool got_version = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("fixture v1") != std::string::npos) {
        fx.version = 1;
        got_version = true;
      }
      continue;
    }
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "env") ss >> fx.env;
    else if (tag == "seed") ss >> fx.seed;
    else if (tag == "steps") ss >> fx.steps;
    else if (tag == "sticky") ss >> fx.sticky;
    else if (tag == "ramping") ss >> fx.ramping;
    else if (tag == "reset") {
      FixtureRecord rec;
      rec.kind = FixtureRecord::Kind::Reset;
      std::string hex;
      ss >> hex;
      rec.digest = std::stoull(hex, nullptr, 16);
      fx.records.push_back(rec);
    } else if (tag == "step") {
      FixtureRecord rec;
      rec.kind = FixtureRecord::Kind::Step;
      std::string hex;
      int done = 0;
      ss >> rec.action >> rec.reward >> done >> hex;
      rec.done = done != 0;
      rec.digest = std::stoull(hex, nullptr, 16);
      fx.records.push_back(rec);
    } else {
      throw std::runtime_error("read_fixture: unknown record '" + tag + "' in " + path);
    }
    if (ss.fail()) throw std::runtime_error("read_fixture: malformed line '" + line + "' in " + path);
  }
  if (!got_version) throw std::runtime_error("read_fixture: missing version header in " + path);
  if (fx.env.empty() || fx.records.empty()) throw std::runtime_error("read_fixture: incomplete fixture " + path);
  return fx;
}

void write_fixture(const std::string& path, const TrajectoryFixture& fx) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_fixture: cannot open " + path);
  out << "# arqlab trajectory fixture v" << fx.version << "\n";
  out << "env " << fx.env << "\n";
  out << "seed " << fx.seed << "\n";
  out << "steps " << fx.steps << "\n";
  out << "sticky " << fx.sticky << "\n";
  out << "ramping " << (fx.ramping ? 1 : 0) << "\n";
  for (const auto& rec : fx.records) {
    if (rec.kind == FixtureRecord::Kind::Reset) {
      out << "reset " << hex16(rec.digest) << "\n";
    } else {
      out << "step " << rec.action << " " << static_cast<long long>(rec.reward) << " " << (rec.done ? 1 : 0) << " "
          << hex16(rec.digest) << "\n";
    }
  }
}

std::string replay_fixture(const TrajectoryFixture& fx) {
  GridEnvOptions opts;
  opts.sticky_action_prob = fx.sticky;
  opts.difficulty_ramping = fx.ramping;
  auto env = make_env(fx.env, fx.seed, opts);
  const bool grid = fx.env != "pointmass";

  size_t i = 0;
  auto fail = [&](const std::string& what, std::uint64_t want, std::uint64_t got) {
    return fx.env + " seed " + std::to_string(fx.seed) + " record " + std::to_string(i) + ": " + what + " expected " +
           hex16(want) + " got " + hex16(got);
  };

  if (fx.records.empty() || fx.records[0].kind != FixtureRecord::Kind::Reset)
    return fx.env + ": fixture does not begin with a reset record";

  for (i = 0; i < fx.records.size(); ++i) {
    const auto& rec = fx.records[i];
    if (rec.kind == FixtureRecord::Kind::Reset) {
      auto obs = env->reset();
      std::uint64_t got = obs_digest(obs, grid);
      if (got != rec.digest) return fail("reset obs digest", rec.digest, got);
    } else {
      auto res = env->step(rec.action);
      if (res.reward != rec.reward)
        return fx.env + " seed " + std::to_string(fx.seed) + " record " + std::to_string(i) + ": reward expected " +
               std::to_string(rec.reward) + " got " + std::to_string(res.reward);
      if (res.done != rec.done)
        return fx.env + " seed " + std::to_string(fx.seed) + " record " + std::to_string(i) + ": done expected " +
               std::to_string(rec.done) + " got " + std::to_string(res.done);
      std::uint64_t got = obs_digest(res.obs, grid);
      if (got != rec.digest) return fail("step obs digest", rec.digest, got);
    }
  }
  return {};
}

TrajectoryFixture generate_fixture(const std::string& env_name, std::uint32_t seed, int steps) {
  TrajectoryFixture fx;
  fx.env = env_name;
  fx.seed = seed;
  fx.steps = steps;
  GridEnvOptions opts;
  opts.sticky_action_prob = fx.sticky;
  opts.difficulty_ramping = fx.ramping;
  auto env = make_env(env_name, seed, opts);
  const bool grid = env_name != "pointmass";
  const int n_actions = env->spec().n_actions;

  SeededRng actions(seed, 77);
  auto obs = env->reset();
  FixtureRecord reset_rec;
  reset_rec.kind = FixtureRecord::Kind::Reset;
  reset_rec.digest = obs_digest(obs, grid);
  fx.records.push_back(reset_rec);

  for (int s = 0; s < steps; ++s) {
    int a = static_cast<int>(actions.bounded(static_cast<std::uint32_t>(n_actions)));
    auto res = env->step(a);
    FixtureRecord rec;
    rec.kind = FixtureRecord::Kind::Step;
    rec.action = a;
    rec.reward = res.reward;
    rec.done = res.done;
    rec.digest = obs_digest(res.obs, grid);
    fx.records.push_back(rec);
    if (res.done) {
      auto o = env->reset();
      FixtureRecord rr;
      rr.kind = FixtureRecord::Kind::Reset;
      rr.digest = obs_digest(o, grid);
      fx.records.push_back(rr);
    }
  }
  return fx;
}

}  // namespace arq::envs
