#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "arq/envs/env.hpp"
#include "arq/learner.hpp"
#include "arq/network.hpp"

namespace arq {

/// Configuration problem tied to a specific field; `field` is the dotted path
/// ("learner.batch_size") so CLI errors point at the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field_path, const std::string& message)
      : std::runtime_error("config: '" + field_path + "': " + message), field(std::move(field_path)) {}

  std::string field;
};

enum class AgentKind { Arq, Ad, Dqn };

std::string to_string(AgentKind k);

/// One experiment, fully resolved.  Serializes to a flat JSON document whose
/// unknown keys are rejected; the digest of the canonical serialization is
/// stamped into every metrics file and checkpoint the run produces.
struct RunConfig {
  std::string env = "breakout";
  AgentKind agent = AgentKind::Arq;
  GoodnessKind goodness = GoodnessKind::RMS;
  ConditioningMode conditioning = ConditioningMode::Input;
  EnsembleMode ensemble = EnsembleMode::MeanOverCells;
  std::vector<int> hidden_dims{400, 200, 200};
  std::vector<int> readout_dims{32, 32, 32};
  int precision = 32;  // 32 or 64
  long long total_steps = 4'000'000;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::string out_dir = "runs";
  LearnerConfig learner;
  double epsilon_start = 1.0;
  double epsilon_end = 0.01;
  double exploration_fraction = 0.1;
  envs::GridEnvOptions env_options;
  long long metrics_interval = 1'000;
  long long checkpoint_interval = 100'000;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// Struct -> canonical JSON (every field emitted, keys sorted by nlohmann).
nlohmann::json config_to_json(const RunConfig& cfg);

/// JSON -> struct.  Missing keys take defaults; unknown keys anywhere in the
/// document raise ConfigError with the dotted path; type mismatches likewise.
/// Does not call validate() -- callers decide when the config must be sound.
RunConfig config_from_json(const nlohmann::json& j);

/// Read + parse a JSON config file.  Throws ConfigError (bad content) or
/// std::runtime_error (unreadable file).
RunConfig load_config_file(const std::string& path);

/// Apply one "dotted.path=value" override onto a JSON document.  The value is
/// parsed as JSON when possible ("0.5", "[8,8]", "true"), else kept a string.
/// Malformed specs (no '=', empty path) throw ConfigError.
void apply_override(nlohmann::json& doc, const std::string& spec);

/// FNV-1a 64 over the canonical serialization; equal digests imply identical
/// resolved configurations.
std::uint64_t config_digest(const RunConfig& cfg);
std::string config_digest_hex(const RunConfig& cfg);

/// Derived views consumed by the library layers.
NetworkConfig network_config(const RunConfig& cfg, const envs::EnvSpec& spec);
EpsilonSchedule epsilon_schedule(const RunConfig& cfg);

/// Learnable-parameter count for the configured agent on the given env
/// (cells for arq/ad, weights + biases for the MLP baseline).
long long agent_param_count(const RunConfig& cfg, const envs::EnvSpec& spec);

}  // namespace arq
