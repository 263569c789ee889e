#pragma once

#include <string>
#include <vector>

#include "arq/cells.hpp"

namespace arq {

/// How per-cell Q vectors combine into the single Q vector used for acting.
enum class EnsembleMode { MeanOverCells, TopCellOnly };
const char* to_string(EnsembleMode m);

struct NetworkConfig {
  int obs_dim = 0;
  int n_actions = 1;
  std::vector<int> hidden_dims = {400, 200, 200};  // d_h per layer
  std::vector<int> readout_dims = {32, 32, 32};    // d per layer (ARQ only)
  CellKind cell_kind = CellKind::ARQ;
  GoodnessKind goodness = GoodnessKind::RMS;
  ConditioningMode conditioning = ConditioningMode::Input;
  EnsembleMode ensemble = EnsembleMode::MeanOverCells;

  int n_layers() const { return static_cast<int>(hidden_dims.size()); }

  /// The per-cell geometry implied by the stack: every layer sees the
  /// observation (skip connection), the layer below from this step, and the
  /// layer above from the previous step.
  CellConfig cell_config(int layer) const;

  void validate() const;  // throws std::invalid_argument
};

/// Per-layer hidden vectors from the previous timestep.  All zeros at
/// episode start.
template <class R>
struct TemporalState {
  std::vector<Vec<R>> h;  // h[l] has hidden_dims[l] entries

  static TemporalState zeros(const NetworkConfig& cfg);
  bool all_zero() const;
};

/// The top-down input each layer consumes this step: topdown[l] = state.h[l+1]
/// for every layer but the top, whose slot is empty.  This is exactly what a
/// replayed transition must store.
template <class R>
std::vector<Vec<R>> topdown_inputs(const NetworkConfig& cfg, const TemporalState<R>& state);

template <class R>
struct NetworkParams {
  std::vector<CellParams<R>> online;
  std::vector<CellParams<R>> target;  // frozen copy, same shapes

  static NetworkParams init(const NetworkConfig& cfg, SeededRng& rng);
  void sync_target() { target = online; }
  size_t param_count() const;
};

template <class R>
struct QReadout {
  std::vector<Vec<R>> per_cell;  // n_layers x n_actions
  Vec<R> ensemble;               // n_actions
};

template <class R>
QReadout<R> make_readout(const NetworkConfig& cfg, std::vector<Vec<R>> per_cell);

/// One bottom-up sweep over the stack from an observation and stored
/// top-down inputs.  Layer l's input is concat(obs, h_{l-1} from this sweep,
/// topdown[l]).  `actions` restricts Input-conditioned cells to a candidate
/// subset (empty = all); Output-conditioned stacks require it empty.
template <class R>
struct NetworkActivations {
  std::vector<CellActivations<R>> cells;
};

template <class R>
NetworkActivations<R> net_forward(const std::vector<CellParams<R>>& cells, const NetworkConfig& cfg, const Vec<R>& obs,
                                  const std::vector<Vec<R>>& topdown, const std::vector<int>& actions = {});

/// Hidden chains only (no Q): enough to advance the temporal state when the
/// policy already chose a random action.
template <class R>
NetworkActivations<R> net_forward_hidden(const std::vector<CellParams<R>>& cells, const NetworkConfig& cfg,
                                         const Vec<R>& obs, const std::vector<Vec<R>>& topdown);

template <class R>
QReadout<R> readout_of(const NetworkConfig& cfg, const NetworkActivations<R>& acts);

template <class R>
TemporalState<R> state_of(const NetworkConfig& cfg, const NetworkActivations<R>& acts);

/// Acting-time result: Q estimates, the state to carry into the next step,
/// and the top-down snapshot that must accompany this step's transition.
template <class R>
struct ActResult {
  QReadout<R> q;
  TemporalState<R> next_state;
  std::vector<Vec<R>> topdown;  // the inputs consumed this step
};

template <class R>
ActResult<R> act_forward(const NetworkParams<R>& params, const NetworkConfig& cfg, const TemporalState<R>& state,
                         const Vec<R>& obs);

/// One epsilon-greedy decision.  Consumes one uniform draw, plus one bounded
/// draw when it explores.  Greedy ties break toward the lowest action index.
bool explore(double epsilon, SeededRng& rng);
template <class R>
int greedy_action(const Vec<R>& q);
template <class R>
int select_action(const Vec<R>& q_ensemble, double epsilon, SeededRng& rng);

/// Per-cell backward: grads[l] receives the gradient of sum_a dLdQ[l][a] *
/// q[l][a] with respect to cell l's parameters only.  Nothing crosses cells.
template <class R>
void net_backward_accum(const std::vector<CellParams<R>>& cells, const NetworkConfig& cfg,
                        const NetworkActivations<R>& acts, const std::vector<Vec<R>>& dLdQ,
                        std::vector<CellGrads<R>>& grads);

/// Network-level locality check: on a random stack and input, each cell's
/// analytic gradient is compared against central finite differences of that
/// cell's own scalar loss with all of its inputs held fixed, and cells whose
/// upstream loss weight is zero are asserted to receive exactly zero
/// gradient.
struct LocalityReport {
  bool pass = false;
  double max_rel_err = 0.0;
  std::string worst;  // e.g. "layer 1 W_att2[0][3]"
  bool cross_cell_leak = false;
  int checked = 0;
};
LocalityReport locality_check(const NetworkConfig& cfg, std::uint64_t seed, int params_per_cell = 40);

// ---------------------------------------------------------------------------
// Checkpoints: named fp32 matrices with a one-line JSON header.
// ---------------------------------------------------------------------------

struct NamedMatrix {
  std::string name;
  Matrix<float> values;
};

/// Writes "arqlab-checkpoint v1", a JSON header line {config_digest, precision,
/// step, matrices: [{name, rows, cols}...]}, then each matrix row-major as
/// 32-bit little-endian floats in header order.
void save_checkpoint(const std::string& path, const std::string& config_digest, int precision, long long step,
                     const std::vector<NamedMatrix>& matrices);

struct Checkpoint {
  std::string config_digest;
  int precision = 32;
  long long step = 0;
  std::vector<NamedMatrix> matrices;
};
Checkpoint load_checkpoint(const std::string& path);

/// Online weights of a cell stack as named matrices ("cell0.W_h", ...) and
/// back.  Loading re-syncs the target copy.
template <class R>
std::vector<NamedMatrix> network_matrices(const NetworkConfig& cfg, const NetworkParams<R>& params);
template <class R>
void load_network_matrices(const NetworkConfig& cfg, const std::vector<NamedMatrix>& mats, NetworkParams<R>& params);

extern template struct TemporalState<float>;
extern template struct TemporalState<double>;
extern template struct NetworkParams<float>;
extern template struct NetworkParams<double>;

extern template std::vector<Vec<float>> topdown_inputs<float>(const NetworkConfig&, const TemporalState<float>&);
extern template std::vector<Vec<double>> topdown_inputs<double>(const NetworkConfig&, const TemporalState<double>&);
extern template NetworkActivations<float> net_forward<float>(const std::vector<CellParams<float>>&, const NetworkConfig&, const Vec<float>&, const std::vector<Vec<float>>&, const std::vector<int>&);
extern template NetworkActivations<double> net_forward<double>(const std::vector<CellParams<double>>&, const NetworkConfig&, const Vec<double>&, const std::vector<Vec<double>>&, const std::vector<int>&);
extern template NetworkActivations<float> net_forward_hidden<float>(const std::vector<CellParams<float>>&, const NetworkConfig&, const Vec<float>&, const std::vector<Vec<float>>&);
extern template NetworkActivations<double> net_forward_hidden<double>(const std::vector<CellParams<double>>&, const NetworkConfig&, const Vec<double>&, const std::vector<Vec<double>>&);
extern template QReadout<float> readout_of<float>(const NetworkConfig&, const NetworkActivations<float>&);
extern template QReadout<double> readout_of<double>(const NetworkConfig&, const NetworkActivations<double>&);
extern template TemporalState<float> state_of<float>(const NetworkConfig&, const NetworkActivations<float>&);
extern template TemporalState<double> state_of<double>(const NetworkConfig&, const NetworkActivations<double>&);
extern template ActResult<float> act_forward<float>(const NetworkParams<float>&, const NetworkConfig&, const TemporalState<float>&, const Vec<float>&);
extern template ActResult<double> act_forward<double>(const NetworkParams<double>&, const NetworkConfig&, const TemporalState<double>&, const Vec<double>&);
extern template int greedy_action<float>(const Vec<float>&);
extern template int greedy_action<double>(const Vec<double>&);
extern template int select_action<float>(const Vec<float>&, double, SeededRng&);
extern template int select_action<double>(const Vec<double>&, double, SeededRng&);
extern template void net_backward_accum<float>(const std::vector<CellParams<float>>&, const NetworkConfig&, const NetworkActivations<float>&, const std::vector<Vec<float>>&, std::vector<CellGrads<float>>&);
extern template void net_backward_accum<double>(const std::vector<CellParams<double>>&, const NetworkConfig&, const NetworkActivations<double>&, const std::vector<Vec<double>>&, std::vector<CellGrads<double>>&);
extern template QReadout<float> make_readout<float>(const NetworkConfig&, std::vector<Vec<float>>);
extern template QReadout<double> make_readout<double>(const NetworkConfig&, std::vector<Vec<double>>);
extern template std::vector<NamedMatrix> network_matrices<float>(const NetworkConfig&, const NetworkParams<float>&);
extern template std::vector<NamedMatrix> network_matrices<double>(const NetworkConfig&, const NetworkParams<double>&);
extern template void load_network_matrices<float>(const NetworkConfig&, const std::vector<NamedMatrix>&, NetworkParams<float>&);
extern template void load_network_matrices<double>(const NetworkConfig&, const std::vector<NamedMatrix>&, NetworkParams<double>&);

}  // namespace arq
