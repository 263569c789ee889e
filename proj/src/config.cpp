#include "arq/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "arq/digest.hpp"

namespace arq {

using nlohmann::json;

std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::Arq: return "arq";
    case AgentKind::Ad: return "ad";
    case AgentKind::Dqn: return "dqn";
  }
  return "?";
}

namespace {

// -- enum <-> string ---------------------------------------------------------

AgentKind agent_from_string(const std::string& s, const std::string& path) {
  if (s == "arq") return AgentKind::Arq;
  if (s == "ad") return AgentKind::Ad;
  if (s == "dqn") return AgentKind::Dqn;
  throw ConfigError(path, "expected one of arq|ad|dqn, got '" + s + "'");
}

GoodnessKind goodness_from_string(const std::string& s, const std::string& path) {
  if (s == "rms") return GoodnessKind::RMS;
  if (s == "mean") return GoodnessKind::Mean;
  if (s == "ms") return GoodnessKind::MS;
  if (s == "var") return GoodnessKind::Var;
  throw ConfigError(path, "expected one of rms|mean|ms|var, got '" + s + "'");
}

ConditioningMode conditioning_from_string(const std::string& s, const std::string& path) {
  if (s == "input") return ConditioningMode::Input;
  if (s == "output") return ConditioningMode::Output;
  throw ConfigError(path, "expected input|output, got '" + s + "'");
}

EnsembleMode ensemble_from_string(const std::string& s, const std::string& path) {
  if (s == "mean") return EnsembleMode::MeanOverCells;
  if (s == "top") return EnsembleMode::TopCellOnly;
  throw ConfigError(path, "expected mean|top, got '" + s + "'");
}

OptimizerKind optimizer_from_string(const std::string& s, const std::string& path) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sgd") return OptimizerKind::Sgd;
  throw ConfigError(path, "expected adam|sgd, got '" + s + "'");
}

std::string goodness_key(GoodnessKind g) {
  switch (g) {
    case GoodnessKind::RMS: return "rms";
    case GoodnessKind::Mean: return "mean";
    case GoodnessKind::MS: return "ms";
    case GoodnessKind::Var: return "var";
  }
  return "?";
}

// -- typed extraction with dotted-path diagnostics ---------------------------

/// Walks one JSON object, handing out typed fields and remembering which keys
/// were touched; finish() rejects anything left over.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "(root)" : path_, "expected a JSON object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <class T>
  void get(const std::string& key, T& out);

  const json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!seen_.count(key)) throw ConfigError(at(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class T>
void ObjectReader::get(const std::string& key, T& out) {
  if (!has(key)) return;
  const json& v = j_.at(key);
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(at(key), "expected a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(at(key), "expected true/false");
      out = v.get<bool>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(at(key), "expected a number");
      out = v.get<double>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError(at(key), "expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
        throw ConfigError(at(key), "must be nonnegative");
      out = v.get<T>();
    } else {
      // vectors of integers
      if (!v.is_array()) throw ConfigError(at(key), "expected an array");
      out.clear();
      for (const auto& e : v) {
        if (!e.is_number_integer() && !e.is_number_unsigned())
          throw ConfigError(at(key), "expected an array of integers");
        if (std::is_unsigned_v<typename T::value_type> && e.is_number_integer() && !e.is_number_unsigned() &&
            e.get<long long>() < 0)
          throw ConfigError(at(key), "entries must be nonnegative");
        out.push_back(e.get<typename T::value_type>());
      }
    }
  } catch (const json::exception&) {
    throw ConfigError(at(key), "value does not fit the expected type");
  }
}

}  // namespace

json config_to_json(const RunConfig& c) {
  json learner{
      {"gamma", c.learner.gamma},
      {"batch_size", c.learner.batch_size},
      {"learning_starts", c.learner.learning_starts},
      {"train_frequency", c.learner.train_frequency},
      {"target_sync_interval", c.learner.target_sync_interval},
      {"replay_capacity", c.learner.replay_capacity},
      {"optimizer", to_string(c.learner.opt.kind)},
      {"lr", c.learner.opt.lr},
      {"beta1", c.learner.opt.beta1},
      {"beta2", c.learner.opt.beta2},
      {"adam_eps", c.learner.opt.eps},
  };
  json epsilon{
      {"start", c.epsilon_start},
      {"end", c.epsilon_end},
      {"exploration_fraction", c.exploration_fraction},
  };
  json env_options{
      {"sticky_action_prob", c.env_options.sticky_action_prob},
      {"difficulty_ramping", c.env_options.difficulty_ramping},
  };
  return json{
      {"env", c.env},
      {"agent", to_string(c.agent)},
      {"goodness", goodness_key(c.goodness)},
      {"conditioning", c.conditioning == ConditioningMode::Input ? "input" : "output"},
      {"ensemble", c.ensemble == EnsembleMode::MeanOverCells ? "mean" : "top"},
      {"hidden_dims", c.hidden_dims},
      {"readout_dims", c.readout_dims},
      {"precision", c.precision},
      {"total_steps", c.total_steps},
      {"seeds", c.seeds},
      {"out_dir", c.out_dir},
      {"learner", learner},
      {"epsilon", epsilon},
      {"env_options", env_options},
      {"metrics_interval", c.metrics_interval},
      {"checkpoint_interval", c.checkpoint_interval},
  };
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  ObjectReader root(j, "");

  // Run directories save their config with the digest stamped in; the digest
  // is derived output, so loading one back tolerates the field and recomputes.
  std::string ignored_digest;
  root.get("digest", ignored_digest);

  std::string agent = to_string(c.agent), goodness = goodness_key(c.goodness);
  std::string conditioning = "input", ensemble = "mean";
  root.get("env", c.env);
  root.get("agent", agent);
  root.get("goodness", goodness);
  root.get("conditioning", conditioning);
  root.get("ensemble", ensemble);
  c.agent = agent_from_string(agent, root.at("agent"));
  c.goodness = goodness_from_string(goodness, root.at("goodness"));
  c.conditioning = conditioning_from_string(conditioning, root.at("conditioning"));
  c.ensemble = ensemble_from_string(ensemble, root.at("ensemble"));

  root.get("hidden_dims", c.hidden_dims);
  root.get("readout_dims", c.readout_dims);
  root.get("precision", c.precision);
  root.get("total_steps", c.total_steps);
  root.get("seeds", c.seeds);
  root.get("out_dir", c.out_dir);
  root.get("metrics_interval", c.metrics_interval);
  root.get("checkpoint_interval", c.checkpoint_interval);

  if (const json* lj = root.child("learner")) {
    ObjectReader lr(*lj, "learner");
    std::string optimizer = to_string(c.learner.opt.kind);
    lr.get("gamma", c.learner.gamma);
    lr.get("batch_size", c.learner.batch_size);
    lr.get("learning_starts", c.learner.learning_starts);
    lr.get("train_frequency", c.learner.train_frequency);
    lr.get("target_sync_interval", c.learner.target_sync_interval);
    lr.get("replay_capacity", c.learner.replay_capacity);
    lr.get("optimizer", optimizer);
    lr.get("lr", c.learner.opt.lr);
    lr.get("beta1", c.learner.opt.beta1);
    lr.get("beta2", c.learner.opt.beta2);
    lr.get("adam_eps", c.learner.opt.eps);
    c.learner.opt.kind = optimizer_from_string(optimizer, lr.at("optimizer"));
    lr.finish();
  }

  if (const json* ej = root.child("epsilon")) {
    ObjectReader ep(*ej, "epsilon");
    ep.get("start", c.epsilon_start);
    ep.get("end", c.epsilon_end);
    ep.get("exploration_fraction", c.exploration_fraction);
    ep.finish();
  }

  if (const json* oj = root.child("env_options")) {
    ObjectReader eo(*oj, "env_options");
    eo.get("sticky_action_prob", c.env_options.sticky_action_prob);
    eo.get("difficulty_ramping", c.env_options.difficulty_ramping);
    eo.finish();
  }

  root.finish();
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path, std::string("not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

void apply_override(json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(spec, "override must look like dotted.path=value");
  const std::string path = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // unquoted strings such as agent=ad
  }

  json* node = &doc;
  std::stringstream keys(path);
  std::string key, next;
  std::getline(keys, key, '.');
  while (std::getline(keys, next, '.')) {
    if (key.empty() || next.empty()) throw ConfigError(path, "empty key segment in override path");
    if (!node->contains(key)) (*node)[key] = json::object();
    node = &(*node)[key];
    if (!node->is_object()) throw ConfigError(path, "'" + key + "' is not an object");
    key = next;
  }
  (*node)[key] = value;
}

void RunConfig::validate() const {
  if (env != "breakout" && env != "space_invaders" && env != "pointmass")
    throw ConfigError("env", "unknown environment '" + env + "'");
  if (precision != 32 && precision != 64) throw ConfigError("precision", "must be 32 or 64");
  if (total_steps < 1) throw ConfigError("total_steps", "must be positive");
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed required");
  if (hidden_dims.empty()) throw ConfigError("hidden_dims", "at least one layer required");
  for (int d : hidden_dims)
    if (d < 2) throw ConfigError("hidden_dims", "every layer needs at least 2 units");
  if (agent == AgentKind::Arq) {
    if (readout_dims.size() != hidden_dims.size())
      throw ConfigError("readout_dims", "must have one entry per layer");
    for (int d : readout_dims)
      if (d < 1) throw ConfigError("readout_dims", "entries must be positive");
  }
  if (epsilon_start < 0.0 || epsilon_start > 1.0) throw ConfigError("epsilon.start", "must be in [0, 1]");
  if (epsilon_end < 0.0 || epsilon_end > 1.0) throw ConfigError("epsilon.end", "must be in [0, 1]");
  if (exploration_fraction <= 0.0 || exploration_fraction > 1.0)
    throw ConfigError("epsilon.exploration_fraction", "must be in (0, 1]");
  if (env_options.sticky_action_prob < 0.0 || env_options.sticky_action_prob >= 1.0)
    throw ConfigError("env_options.sticky_action_prob", "must be in [0, 1)");
  if (metrics_interval < 1) throw ConfigError("metrics_interval", "must be positive");
  if (checkpoint_interval < 1) throw ConfigError("checkpoint_interval", "must be positive");
  try {
    learner.validate();
  } catch (const std::exception& e) {
    throw ConfigError("learner", e.what());
  }
}

std::uint64_t config_digest(const RunConfig& cfg) { return fnv1a64(config_to_json(cfg).dump()); }

std::string config_digest_hex(const RunConfig& cfg) { return to_hex16(config_digest(cfg)); }

NetworkConfig network_config(const RunConfig& cfg, const envs::EnvSpec& spec) {
  NetworkConfig net;
  net.obs_dim = spec.obs_dim;
  net.n_actions = spec.n_actions;
  net.hidden_dims = cfg.hidden_dims;
  net.readout_dims = cfg.agent == AgentKind::Arq ? cfg.readout_dims : std::vector<int>(cfg.hidden_dims.size(), 1);
  net.cell_kind = cfg.agent == AgentKind::Ad ? CellKind::AD : CellKind::ARQ;
  net.goodness = cfg.goodness;
  net.conditioning = cfg.conditioning;
  net.ensemble = cfg.ensemble;
  return net;
}

EpsilonSchedule epsilon_schedule(const RunConfig& cfg) {
  EpsilonSchedule sched;
  sched.start = cfg.epsilon_start;
  sched.end = cfg.epsilon_end;
  sched.exploration_fraction = cfg.exploration_fraction;
  sched.total_steps = cfg.total_steps;
  return sched;
}

long long agent_param_count(const RunConfig& cfg, const envs::EnvSpec& spec) {
  if (cfg.agent == AgentKind::Dqn) {
    long long total = 0;
    int in = spec.obs_dim;
    std::vector<int> dims = cfg.hidden_dims;
    dims.push_back(spec.n_actions);
    for (int out : dims) {
      total += static_cast<long long>(out) * in + out;  // weights + biases
      in = out;
    }
    return total;
  }
  const NetworkConfig net = network_config(cfg, spec);
  long long total = 0;
  for (int l = 0; l < net.n_layers(); ++l) {
    const CellConfig cc = net.cell_config(l);
    total += static_cast<long long>(cc.hidden_dim) * cc.input_dim();
    total += static_cast<long long>(cc.hidden_dim) * cc.attn_input_dim();
    total += static_cast<long long>(cc.attn_rows()) * cc.attn_input_dim();
  }
  return total;
}

}  // namespace arq
