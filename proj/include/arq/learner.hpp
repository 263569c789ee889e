#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arq/network.hpp"

namespace arq {

/// One environment step as stored for replay.  The terminal observation is
/// kept even when done (the done flag alone disables bootstrapping).  The
/// top-down snapshots are the activations each layer consumed from above at
/// times t and t+1; replay feeds them back instead of re-unrolling time.
template <class R>
struct Transition {
  Vec<R> obs_t;
  int action = 0;
  R reward = R(0);
  Vec<R> obs_tp1;
  bool done = false;
  std::vector<Vec<R>> topdown_t;
  std::vector<Vec<R>> topdown_tp1;
};

/// FIFO ring with uniform sampling (with replacement).  Index 0 is always the
/// oldest retained transition.
template <class R>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity);
  void push(Transition<R> t);
  size_t size() const { return size_; }
  size_t capacity() const { return data_.size(); }
  const Transition<R>& at(size_t i) const;  // insertion order, oldest first
  size_t sample_index(SeededRng& rng) const;

 private:
  std::vector<Transition<R>> data_;
  size_t head_ = 0;  // slot of the oldest element
  size_t size_ = 0;
};

/// Linear decay from start to end over exploration_fraction * total_steps
/// environment steps, clamped at end afterwards.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.01;
  double exploration_fraction = 0.1;
  long long total_steps = 4'000'000;

  double at(long long step) const;
};

enum class OptimizerKind { Adam, Sgd };

std::string to_string(OptimizerKind k);

struct AdamHyper {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Per-matrix first/second moment accumulators.
template <class R>
struct AdamMoments {
  Matrix<R> m, v;
  explicit AdamMoments(int rows = 0, int cols = 0) : m(rows, cols), v(rows, cols) {}
};

/// One bias-corrected adaptive-moment update on a single matrix.  beta powers
/// are tracked by the owner so several matrices can share one step counter.
/// A non-finite gradient entry is a hard error naming `who`.
template <class R>
void adam_update(Matrix<R>& param, const Matrix<R>& grad, AdamMoments<R>& mom, const AdamHyper& hp, double beta1_pow,
                 double beta2_pow, const std::string& who);

/// The three-matrix optimizer owned by one cell.  Cells never share optimizer
/// state, so per-cell updates can run concurrently.
template <class R>
class CellAdam {
 public:
  CellAdam(const CellConfig& cfg, const AdamHyper& hp);
  void step(CellParams<R>& params, const CellGrads<R>& grads, const std::string& who);
  long long steps_taken() const { return t_; }

 private:
  AdamHyper hp_;
  AdamMoments<R> w_h_, w_att1_, w_att2_;
  long long t_ = 0;
  double b1p_ = 1.0, b2p_ = 1.0;
};

struct LearnerConfig {
  double gamma = 0.99;
  int batch_size = 512;
  long long learning_starts = 50'000;
  int train_frequency = 1;
  long long target_sync_interval = 1'000;
  size_t replay_capacity = 100'000;
  AdamHyper opt;

  void validate() const;
};

/// r + gamma * max_a' Q(s', a'), bootstrap dropped on terminal transitions.
template <class R>
R td_target(R reward, R max_q_next, bool done, double gamma);

/// Squared TD error and its derivative with respect to Q(s_t, a_t).
template <class R>
struct LossGrad {
  R loss;
  R dLdQ;
};
template <class R>
LossGrad<R> loss_and_grad(R q, R target);

/// Per-train-step record: one loss mean per cell (single entry for the MLP
/// baseline).
struct TrainStats {
  bool ran = false;
  std::vector<double> cell_loss;
  double mean_q = 0.0;  // mean Q(s_t, a_t) over the batch
};

// ---------------------------------------------------------------------------
// Cell-network agent
// ---------------------------------------------------------------------------

/// Acting + learning state for a stack of locally trained cells: temporal
/// state, replay buffer, per-cell optimizers, online/target parameters.
template <class R>
class CellAgent {
 public:
  CellAgent(const NetworkConfig& net, const LearnerConfig& learn, std::uint64_t init_seed);

  void begin_episode();

  /// Epsilon-greedy act.  Consumes one uniform draw; a random action skips the
  /// Q readout entirely (the hidden sweep still advances the temporal state).
  int act(const Vec<R>& obs, double epsilon, SeededRng& rng);

  /// Q ensemble at obs without changing any agent state (evaluation path).
  QReadout<R> peek_q(const Vec<R>& obs) const;

  /// Store the transition for the step that act() just took.
  void record(const Vec<R>& obs, int action, R reward, const Vec<R>& obs_tp1, bool done);

  /// One gradient step on a uniform batch: bottom-up sweeps (parallel over
  /// samples), then per-cell backward + optimizer (parallel over cells, each
  /// accumulating samples in ascending index order).  Bit-identical for any
  /// worker count.
  TrainStats train(SeededRng& rng);

  void sync_target() { params_.sync_target(); }

  const NetworkConfig& net_config() const { return net_; }
  const LearnerConfig& learner_config() const { return learn_; }
  ReplayBuffer<R>& buffer() { return buffer_; }
  NetworkParams<R>& params() { return params_; }
  const TemporalState<R>& temporal_state() const { return state_; }

  std::vector<NamedMatrix> matrices() const { return network_matrices(net_, params_); }
  void load_matrices(const std::vector<NamedMatrix>& mats) { load_network_matrices(net_, mats, params_); }

 private:
  NetworkConfig net_;
  LearnerConfig learn_;
  NetworkParams<R> params_;
  TemporalState<R> state_;
  std::vector<Vec<R>> pending_topdown_;  // inputs consumed by the latest act()
  std::vector<CellAdam<R>> opt_;
  ReplayBuffer<R> buffer_;
};

// ---------------------------------------------------------------------------
// Backprop MLP baseline (DQN)
// ---------------------------------------------------------------------------

/// Fully connected ReLU network with biases and a linear head; trained by
/// ordinary end-to-end backpropagation.
template <class R>
struct MlpParams {
  std::vector<Matrix<R>> W;  // n_hidden + 1 matrices
  std::vector<Vec<R>> b;

  static MlpParams init(int obs_dim, const std::vector<int>& hidden_dims, int n_actions, SeededRng& rng);
  size_t param_count() const;
  int n_layers() const { return static_cast<int>(W.size()); }
};

template <class R>
struct MlpActivations {
  Vec<R> x;                  // input
  std::vector<Vec<R>> pre;   // per hidden layer, before ReLU
  std::vector<Vec<R>> post;  // per hidden layer, after ReLU
  Vec<R> q;
};

template <class R>
struct MlpGrads {
  std::vector<Matrix<R>> W;
  std::vector<Vec<R>> b;

  static MlpGrads zeros(const MlpParams<R>& shape);
  void zero();
};

template <class R>
MlpActivations<R> mlp_forward(const MlpParams<R>& params, const Vec<R>& obs);

template <class R>
void mlp_backward_accum(const MlpParams<R>& params, const MlpActivations<R>& acts, const Vec<R>& dLdQ,
                        MlpGrads<R>& grads);

/// Central finite differences over every MLP parameter (64-bit).
GradCheckReport mlp_grad_check(int obs_dim, const std::vector<int>& hidden_dims, int n_actions, std::uint64_t seed);

/// DQN agent: same replay/target/epsilon machinery as CellAgent, backprop
/// updates, no temporal state or snapshots.
template <class R>
class DqnAgent {
 public:
  DqnAgent(int obs_dim, const std::vector<int>& hidden_dims, int n_actions, const LearnerConfig& learn,
           std::uint64_t init_seed);

  void begin_episode() {}
  int act(const Vec<R>& obs, double epsilon, SeededRng& rng);
  Vec<R> peek_q(const Vec<R>& obs) const { return mlp_forward(online_, obs).q; }
  void record(const Vec<R>& obs, int action, R reward, const Vec<R>& obs_tp1, bool done);
  TrainStats train(SeededRng& rng);
  void sync_target() { target_ = online_; }

  const LearnerConfig& learner_config() const { return learn_; }
  ReplayBuffer<R>& buffer() { return buffer_; }
  MlpParams<R>& online() { return online_; }
  MlpParams<R>& target() { return target_; }

  std::vector<NamedMatrix> matrices() const;
  void load_matrices(const std::vector<NamedMatrix>& mats);

 private:
  int obs_dim_;
  int n_actions_;
  LearnerConfig learn_;
  MlpParams<R> online_, target_;
  std::vector<AdamMoments<R>> mom_w_, mom_b_;
  long long t_ = 0;
  double b1p_ = 1.0, b2p_ = 1.0;
  ReplayBuffer<R> buffer_;
};

extern template struct Transition<float>;
extern template struct Transition<double>;
extern template class ReplayBuffer<float>;
extern template class ReplayBuffer<double>;
extern template void adam_update<float>(Matrix<float>&, const Matrix<float>&, AdamMoments<float>&, const AdamHyper&, double, double, const std::string&);
extern template void adam_update<double>(Matrix<double>&, const Matrix<double>&, AdamMoments<double>&, const AdamHyper&, double, double, const std::string&);
extern template class CellAdam<float>;
extern template class CellAdam<double>;
extern template float td_target<float>(float, float, bool, double);
extern template double td_target<double>(double, double, bool, double);
extern template LossGrad<float> loss_and_grad<float>(float, float);
extern template LossGrad<double> loss_and_grad<double>(double, double);
extern template class CellAgent<float>;
extern template class CellAgent<double>;
extern template struct MlpParams<float>;
extern template struct MlpParams<double>;
extern template struct MlpGrads<float>;
extern template struct MlpGrads<double>;
extern template MlpActivations<float> mlp_forward<float>(const MlpParams<float>&, const Vec<float>&);
extern template MlpActivations<double> mlp_forward<double>(const MlpParams<double>&, const Vec<double>&);
extern template void mlp_backward_accum<float>(const MlpParams<float>&, const MlpActivations<float>&, const Vec<float>&, MlpGrads<float>&);
extern template void mlp_backward_accum<double>(const MlpParams<double>&, const MlpActivations<double>&, const Vec<double>&, MlpGrads<double>&);
extern template class DqnAgent<float>;
extern template class DqnAgent<double>;

}  // namespace arq
