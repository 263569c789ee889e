#include "arq/learner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "arq/parallel.hpp"

namespace arq {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

// ---------------------------------------------------------------------------
// Replay buffer
// ---------------------------------------------------------------------------

template <class R>
ReplayBuffer<R>::ReplayBuffer(size_t capacity) : data_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

template <class R>
void ReplayBuffer<R>::push(Transition<R> t) {
  const size_t cap = data_.size();
  if (size_ < cap) {
    data_[(head_ + size_) % cap] = std::move(t);
    ++size_;
  } else {
    data_[head_] = std::move(t);  // overwrite the oldest
    head_ = (head_ + 1) % cap;
  }
}

template <class R>
const Transition<R>& ReplayBuffer<R>::at(size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer: index " + std::to_string(i) + " of " + std::to_string(size_));
  return data_[(head_ + i) % data_.size()];
}

template <class R>
size_t ReplayBuffer<R>::sample_index(SeededRng& rng) const {
  if (size_ == 0) throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
  return rng.bounded(static_cast<std::uint32_t>(size_));
}

// ---------------------------------------------------------------------------
// Epsilon schedule
// ---------------------------------------------------------------------------

double EpsilonSchedule::at(long long step) const {
  if (step < 0) throw std::invalid_argument("epsilon_at: negative step");
  const double decay = exploration_fraction * static_cast<double>(total_steps);
  if (decay <= 0.0 || static_cast<double>(step) >= decay) return end;
  return start + (end - start) * (static_cast<double>(step) / decay);
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

namespace {

template <class R>
void adam_update_raw(R* p, const R* g, R* m, R* v, size_t n, const AdamHyper& hp, double b1p, double b2p,
                     const std::string& who) {
  if (!la::all_finite(g, n)) throw std::runtime_error("optimizer: non-finite gradient in " + who);
  if (hp.kind == OptimizerKind::Sgd) {
    const R lr = static_cast<R>(hp.lr);
    for (size_t i = 0; i < n; ++i) p[i] -= lr * g[i];
    return;
  }
  const R b1 = static_cast<R>(hp.beta1), b2 = static_cast<R>(hp.beta2);
  const R one_m_b1 = R(1) - b1, one_m_b2 = R(1) - b2;
  const R corr1 = static_cast<R>(1.0 / (1.0 - b1p));
  const R corr2 = static_cast<R>(1.0 / (1.0 - b2p));
  const R lr = static_cast<R>(hp.lr), eps = static_cast<R>(hp.eps);
  for (size_t i = 0; i < n; ++i) {
    const R gi = g[i];
    const R mi = m[i] = b1 * m[i] + one_m_b1 * gi;
    const R vi = v[i] = b2 * v[i] + one_m_b2 * gi * gi;
    p[i] -= lr * (mi * corr1) / (std::sqrt(vi * corr2) + eps);
  }
}

}  // namespace

template <class R>
void adam_update(Matrix<R>& param, const Matrix<R>& grad, AdamMoments<R>& mom, const AdamHyper& hp, double beta1_pow,
                 double beta2_pow, const std::string& who) {
  if (param.rows != grad.rows || param.cols != grad.cols || mom.m.rows != param.rows || mom.m.cols != param.cols)
    la::shape_error("adam_update", who + ": parameter/gradient/moment shape mismatch");
  adam_update_raw(param.data.data(), grad.data.data(), mom.m.data.data(), mom.v.data.data(), param.size(), hp,
                  beta1_pow, beta2_pow, who);
}

template <class R>
CellAdam<R>::CellAdam(const CellConfig& cfg, const AdamHyper& hp)
    : hp_(hp),
      w_h_(cfg.hidden_dim, cfg.input_dim()),
      w_att1_(cfg.hidden_dim, cfg.attn_input_dim()),
      w_att2_(cfg.attn_rows(), cfg.attn_input_dim()) {}

template <class R>
void CellAdam<R>::step(CellParams<R>& params, const CellGrads<R>& grads, const std::string& who) {
  ++t_;
  b1p_ *= hp_.beta1;
  b2p_ *= hp_.beta2;
  adam_update(params.W_h, grads.W_h, w_h_, hp_, b1p_, b2p_, who + " W_h");
  adam_update(params.W_att1, grads.W_att1, w_att1_, hp_, b1p_, b2p_, who + " W_att1");
  adam_update(params.W_att2, grads.W_att2, w_att2_, hp_, b1p_, b2p_, who + " W_att2");
}

void LearnerConfig::validate() const {
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("LearnerConfig: gamma must be in [0, 1)");
  if (batch_size < 1) throw std::invalid_argument("LearnerConfig: batch_size must be positive");
  if (train_frequency < 1) throw std::invalid_argument("LearnerConfig: train_frequency must be positive");
  if (target_sync_interval < 1) throw std::invalid_argument("LearnerConfig: target_sync_interval must be positive");
  if (replay_capacity < static_cast<size_t>(batch_size))
    throw std::invalid_argument("LearnerConfig: replay capacity below batch size");
  if (opt.lr < 0.0) throw std::invalid_argument("LearnerConfig: learning rate must not be negative");
}

// ---------------------------------------------------------------------------
// TD pieces
// ---------------------------------------------------------------------------

template <class R>
R td_target(R reward, R max_q_next, bool done, double gamma) {
  if (done) return reward;
  return reward + static_cast<R>(gamma) * max_q_next;
}

template <class R>
LossGrad<R> loss_and_grad(R q, R target) {
  const R diff = target - q;
  return {diff * diff, R(-2) * diff};
}

// ---------------------------------------------------------------------------
// Cell-network agent
// ---------------------------------------------------------------------------

template <class R>
CellAgent<R>::CellAgent(const NetworkConfig& net, const LearnerConfig& learn, std::uint64_t init_seed)
    : net_(net), learn_(learn), params_(), state_(), buffer_(learn.replay_capacity) {
  net_.validate();
  learn_.validate();
  SeededRng rng(init_seed);
  params_ = NetworkParams<R>::init(net_, rng);
  state_ = TemporalState<R>::zeros(net_);
  for (int l = 0; l < net_.n_layers(); ++l) opt_.emplace_back(net_.cell_config(l), learn_.opt);
}

template <class R>
void CellAgent<R>::begin_episode() {
  state_ = TemporalState<R>::zeros(net_);
  pending_topdown_.clear();
}

template <class R>
int CellAgent<R>::act(const Vec<R>& obs, double epsilon, SeededRng& rng) {
  pending_topdown_ = topdown_inputs(net_, state_);
  if (explore(epsilon, rng)) {
    const int a = static_cast<int>(rng.bounded(static_cast<std::uint32_t>(net_.n_actions)));
    auto acts = net_forward_hidden(params_.online, net_, obs, pending_topdown_);
    state_ = state_of(net_, acts);
    return a;
  }
  auto acts = net_forward(params_.online, net_, obs, pending_topdown_);
  state_ = state_of(net_, acts);
  return greedy_action(readout_of(net_, acts).ensemble);
}

template <class R>
QReadout<R> CellAgent<R>::peek_q(const Vec<R>& obs) const {
  auto td = topdown_inputs(net_, state_);
  return readout_of(net_, net_forward(params_.online, net_, obs, td));
}

template <class R>
void CellAgent<R>::record(const Vec<R>& obs, int action, R reward, const Vec<R>& obs_tp1, bool done) {
  if (pending_topdown_.empty()) throw std::logic_error("CellAgent: record() before act()");
  Transition<R> t;
  t.obs_t = obs;
  t.action = action;
  t.reward = reward;
  t.obs_tp1 = obs_tp1;
  t.done = done;
  t.topdown_t = pending_topdown_;
  t.topdown_tp1 = topdown_inputs(net_, state_);
  buffer_.push(std::move(t));
}

template <class R>
TrainStats CellAgent<R>::train(SeededRng& rng) {
  TrainStats stats;
  const int B = learn_.batch_size;
  if (buffer_.size() < static_cast<size_t>(B)) return stats;  // ran = false
  const int L = net_.n_layers();

  std::vector<size_t> idx(B);
  for (auto& i : idx) i = buffer_.sample_index(rng);

  // Phase A: per-sample sweeps.  Online pass caches activations for backward
  // (only the taken action's branch under Input conditioning); the target
  // pass is reduced to its per-cell max Q on the spot.
  std::vector<NetworkActivations<R>> online_acts(B);
  Matrix<R> maxq(B, L);
  parallel_for(B, [&](int lo, int hi) {
    for (int s = lo; s < hi; ++s) {
      const Transition<R>& tr = buffer_.at(idx[s]);
      std::vector<int> candidates;
      if (net_.conditioning == ConditioningMode::Input) candidates = {tr.action};
      online_acts[s] = net_forward(params_.online, net_, tr.obs_t, tr.topdown_t, candidates);
      if (!tr.done) {
        auto tacts = net_forward(params_.target, net_, tr.obs_tp1, tr.topdown_tp1);
        for (int l = 0; l < L; ++l) {
          const auto& q = tacts.cells[l].q;
          maxq.at(s, l) = *std::max_element(q.begin(), q.end());
        }
      }
    }
  });

  // Phase B: per-cell backward + update.  Cells share nothing; each one
  // accumulates its batch gradient over samples in ascending order, so the
  // result is identical for any worker count.
  stats.cell_loss.assign(L, 0.0);
  parallel_for(L, [&](int cell_lo, int cell_hi) {
    for (int l = cell_lo; l < cell_hi; ++l) {
      CellGrads<R> grads = CellGrads<R>::zeros(net_.cell_config(l));
      Vec<R> dLdQ(net_.n_actions);
      const R inv_b = R(1) / static_cast<R>(B);
      double loss_sum = 0.0;
      for (int s = 0; s < B; ++s) {
        const Transition<R>& tr = buffer_.at(idx[s]);
        const R target = td_target(tr.reward, tr.done ? R(0) : maxq.at(s, l), tr.done, learn_.gamma);
        const R q_sa = online_acts[s].cells[l].q[tr.action];
        const auto lg = loss_and_grad(q_sa, target);
        loss_sum += static_cast<double>(lg.loss);
        std::fill(dLdQ.begin(), dLdQ.end(), R(0));
        dLdQ[tr.action] = lg.dLdQ * inv_b;
        backward_accum(params_.online[l], net_.cell_config(l), online_acts[s].cells[l], dLdQ, grads);
      }
      opt_[l].step(params_.online[l], grads, "cell " + std::to_string(l));
      stats.cell_loss[l] = loss_sum / B;
    }
  });

  double q_sum = 0.0;
  for (int s = 0; s < B; ++s) {
    const Transition<R>& tr = buffer_.at(idx[s]);
    for (int l = 0; l < L; ++l) q_sum += static_cast<double>(online_acts[s].cells[l].q[tr.action]);
  }
  stats.mean_q = q_sum / (static_cast<double>(B) * L);
  stats.ran = true;
  return stats;
}

// ---------------------------------------------------------------------------
// MLP baseline
// ---------------------------------------------------------------------------

template <class R>
MlpParams<R> MlpParams<R>::init(int obs_dim, const std::vector<int>& hidden_dims, int n_actions, SeededRng& rng) {
  if (obs_dim < 1 || n_actions < 1 || hidden_dims.empty())
    throw std::invalid_argument("MlpParams: dimensions must be positive");
  MlpParams<R> p;
  int in = obs_dim;
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("MlpParams: hidden width must be positive");
    p.W.emplace_back(h, in);
    la::init_weights(p.W.back(), rng);
    p.b.emplace_back(h, R(0));
    in = h;
  }
  p.W.emplace_back(n_actions, in);
  la::init_weights(p.W.back(), rng);
  p.b.emplace_back(n_actions, R(0));
  return p;
}

template <class R>
size_t MlpParams<R>::param_count() const {
  size_t n = 0;
  for (const auto& w : W) n += w.size();
  for (const auto& v : b) n += v.size();
  return n;
}

template <class R>
MlpGrads<R> MlpGrads<R>::zeros(const MlpParams<R>& shape) {
  MlpGrads<R> g;
  for (const auto& w : shape.W) g.W.emplace_back(w.rows, w.cols);
  for (const auto& v : shape.b) g.b.emplace_back(v.size(), R(0));
  return g;
}

template <class R>
void MlpGrads<R>::zero() {
  for (auto& w : W) w.zero();
  for (auto& v : b) std::fill(v.begin(), v.end(), R(0));
}

template <class R>
MlpActivations<R> mlp_forward(const MlpParams<R>& params, const Vec<R>& obs) {
  const int n_hidden = params.n_layers() - 1;
  if (static_cast<int>(obs.size()) != params.W[0].cols)
    la::shape_error("mlp_forward", "obs has " + std::to_string(obs.size()) + " entries, expected " +
                                       std::to_string(params.W[0].cols));
  MlpActivations<R> acts;
  acts.x = obs;
  const Vec<R>* in = &acts.x;
  for (int i = 0; i < n_hidden; ++i) {
    Vec<R> pre(params.W[i].rows);
    la::matvec(params.W[i], in->data(), static_cast<int>(in->size()), pre.data());
    for (size_t j = 0; j < pre.size(); ++j) pre[j] += params.b[i][j];
    Vec<R> post(pre.size());
    la::relu(pre.data(), post.data(), static_cast<int>(pre.size()));
    acts.pre.push_back(std::move(pre));
    acts.post.push_back(std::move(post));
    in = &acts.post.back();
  }
  acts.q.resize(params.W.back().rows);
  la::matvec(params.W.back(), in->data(), static_cast<int>(in->size()), acts.q.data());
  for (size_t j = 0; j < acts.q.size(); ++j) acts.q[j] += params.b.back()[j];
  return acts;
}

template <class R>
void mlp_backward_accum(const MlpParams<R>& params, const MlpActivations<R>& acts, const Vec<R>& dLdQ,
                        MlpGrads<R>& grads) {
  const int n_hidden = params.n_layers() - 1;
  if (dLdQ.size() != acts.q.size()) la::shape_error("mlp_backward", "dLdQ size mismatch");

  // Head: q = W_last post_last + b_last.
  const Vec<R>& last_post = n_hidden > 0 ? acts.post.back() : acts.x;
  la::outer_accum(dLdQ.data(), static_cast<int>(dLdQ.size()), last_post.data(), static_cast<int>(last_post.size()),
                  grads.W.back());
  for (size_t j = 0; j < dLdQ.size(); ++j) grads.b.back()[j] += dLdQ[j];

  Vec<R> upstream(last_post.size(), R(0));
  la::matvec_transpose_accum(params.W.back(), dLdQ.data(), static_cast<int>(dLdQ.size()), upstream.data());

  for (int i = n_hidden - 1; i >= 0; --i) {
    // Through ReLU.
    Vec<R> dpre = std::move(upstream);
    for (size_t j = 0; j < dpre.size(); ++j)
      if (acts.pre[i][j] <= R(0)) dpre[j] = R(0);

    const Vec<R>& below = i > 0 ? acts.post[i - 1] : acts.x;
    la::outer_accum(dpre.data(), static_cast<int>(dpre.size()), below.data(), static_cast<int>(below.size()),
                    grads.W[i]);
    for (size_t j = 0; j < dpre.size(); ++j) grads.b[i][j] += dpre[j];

    if (i > 0) {
      upstream.assign(below.size(), R(0));
      la::matvec_transpose_accum(params.W[i], dpre.data(), static_cast<int>(dpre.size()), upstream.data());
    }
  }
}

GradCheckReport mlp_grad_check(int obs_dim, const std::vector<int>& hidden_dims, int n_actions, std::uint64_t seed) {
  SeededRng rng(seed);
  auto params = MlpParams<double>::init(obs_dim, hidden_dims, n_actions, rng);
  Vec<double> obs(obs_dim);
  for (auto& v : obs) v = rng.uniform(-1.0, 1.0);
  Vec<double> dLdQ(n_actions);
  for (auto& v : dLdQ) v = rng.uniform(-1.0, 1.0);

  auto grads = MlpGrads<double>::zeros(params);
  mlp_backward_accum(params, mlp_forward(params, obs), dLdQ, grads);

  auto loss = [&]() {
    auto acts = mlp_forward(params, obs);
    double s = 0;
    for (int k = 0; k < n_actions; ++k) s += dLdQ[k] * acts.q[k];
    return s;
  };

  const double h = 1e-4;
  const double bound = 1e-4;
  GradCheckReport rep;
  auto probe = [&](double& p, double analytic, const std::string& name) {
    auto fd_at = [&](double step) {
      const double saved = p;
      p = saved + step;
      const double lp = loss();
      p = saved - step;
      const double lm = loss();
      p = saved;
      return (lp - lm) / (2 * step);
    };
    auto rel_of = [&](double fd) {
      return std::fabs(fd - analytic) / std::max({std::fabs(fd), std::fabs(analytic), 1e-6});
    };
    double rel = rel_of(fd_at(h));
    // A pre-activation within the step of a relu kink makes the two probes
    // straddle the corner and the difference quotient meaningless; shrinking
    // the step moves the probes onto one side.  A wrong analytic gradient
    // stays wrong at every step.
    for (double step = h / 10; rel >= bound && step >= h / 100; step /= 10) rel = std::min(rel, rel_of(fd_at(step)));
    rep.checked++;
    if (rel > rep.max_rel_err) {
      rep.max_rel_err = rel;
      rep.worst_param = name;
    }
  };
  for (int i = 0; i < params.n_layers(); ++i) {
    for (size_t k = 0; k < params.W[i].size(); ++k)
      probe(params.W[i].data[k], grads.W[i].data[k], "W" + std::to_string(i) + "[" + std::to_string(k) + "]");
    for (size_t k = 0; k < params.b[i].size(); ++k)
      probe(params.b[i][k], grads.b[i][k], "b" + std::to_string(i) + "[" + std::to_string(k) + "]");
  }
  rep.pass = rep.max_rel_err < bound;
  return rep;
}

template <class R>
DqnAgent<R>::DqnAgent(int obs_dim, const std::vector<int>& hidden_dims, int n_actions, const LearnerConfig& learn,
                      std::uint64_t init_seed)
    : obs_dim_(obs_dim), n_actions_(n_actions), learn_(learn), buffer_(learn.replay_capacity) {
  learn_.validate();
  SeededRng rng(init_seed);
  online_ = MlpParams<R>::init(obs_dim, hidden_dims, n_actions, rng);
  target_ = online_;
  for (const auto& w : online_.W) mom_w_.emplace_back(w.rows, w.cols);
  for (const auto& v : online_.b) mom_b_.emplace_back(1, static_cast<int>(v.size()));
}

template <class R>
int DqnAgent<R>::act(const Vec<R>& obs, double epsilon, SeededRng& rng) {
  if (explore(epsilon, rng)) return static_cast<int>(rng.bounded(static_cast<std::uint32_t>(n_actions_)));
  return greedy_action(mlp_forward(online_, obs).q);
}

template <class R>
void DqnAgent<R>::record(const Vec<R>& obs, int action, R reward, const Vec<R>& obs_tp1, bool done) {
  Transition<R> t;
  t.obs_t = obs;
  t.action = action;
  t.reward = reward;
  t.obs_tp1 = obs_tp1;
  t.done = done;
  buffer_.push(std::move(t));
}

template <class R>
TrainStats DqnAgent<R>::train(SeededRng& rng) {
  TrainStats stats;
  const int B = learn_.batch_size;
  if (buffer_.size() < static_cast<size_t>(B)) return stats;

  std::vector<size_t> idx(B);
  for (auto& i : idx) i = buffer_.sample_index(rng);

  std::vector<MlpActivations<R>> acts(B);
  Vec<R> maxq(B, R(0));
  parallel_for(B, [&](int lo, int hi) {
    for (int s = lo; s < hi; ++s) {
      const Transition<R>& tr = buffer_.at(idx[s]);
      acts[s] = mlp_forward(online_, tr.obs_t);
      if (!tr.done) {
        const auto tq = mlp_forward(target_, tr.obs_tp1).q;
        maxq[s] = *std::max_element(tq.begin(), tq.end());
      }
    }
  });

  auto grads = MlpGrads<R>::zeros(online_);
  Vec<R> dLdQ(n_actions_);
  const R inv_b = R(1) / static_cast<R>(B);
  double loss_sum = 0.0, q_sum = 0.0;
  for (int s = 0; s < B; ++s) {
    const Transition<R>& tr = buffer_.at(idx[s]);
    const R target = td_target(tr.reward, maxq[s], tr.done, learn_.gamma);
    const R q_sa = acts[s].q[tr.action];
    const auto lg = loss_and_grad(q_sa, target);
    loss_sum += static_cast<double>(lg.loss);
    q_sum += static_cast<double>(q_sa);
    std::fill(dLdQ.begin(), dLdQ.end(), R(0));
    dLdQ[tr.action] = lg.dLdQ * inv_b;
    mlp_backward_accum(online_, acts[s], dLdQ, grads);
  }

  ++t_;
  b1p_ *= learn_.opt.beta1;
  b2p_ *= learn_.opt.beta2;
  for (int i = 0; i < online_.n_layers(); ++i) {
    adam_update(online_.W[i], grads.W[i], mom_w_[i], learn_.opt, b1p_, b2p_, "dqn W" + std::to_string(i));
    if (!la::all_finite(grads.b[i].data(), grads.b[i].size()))
      throw std::runtime_error("optimizer: non-finite gradient in dqn b" + std::to_string(i));
    adam_update_raw(online_.b[i].data(), grads.b[i].data(), mom_b_[i].m.data.data(), mom_b_[i].v.data.data(),
                    online_.b[i].size(), learn_.opt, b1p_, b2p_, "dqn b" + std::to_string(i));
  }

  stats.ran = true;
  stats.cell_loss = {loss_sum / B};
  stats.mean_q = q_sum / B;
  return stats;
}

template <class R>
std::vector<NamedMatrix> DqnAgent<R>::matrices() const {
  std::vector<NamedMatrix> out;
  for (int i = 0; i < online_.n_layers(); ++i) {
    Matrix<float> w(online_.W[i].rows, online_.W[i].cols);
    for (size_t k = 0; k < w.size(); ++k) w.data[k] = static_cast<float>(online_.W[i].data[k]);
    out.push_back({"mlp.W" + std::to_string(i), std::move(w)});
    Matrix<float> b(1, static_cast<int>(online_.b[i].size()));
    for (size_t k = 0; k < b.size(); ++k) b.data[k] = static_cast<float>(online_.b[i][k]);
    out.push_back({"mlp.b" + std::to_string(i), std::move(b)});
  }
  return out;
}

template <class R>
void DqnAgent<R>::load_matrices(const std::vector<NamedMatrix>& mats) {
  if (mats.size() != static_cast<size_t>(online_.n_layers()) * 2)
    throw std::runtime_error("checkpoint holds " + std::to_string(mats.size()) + " matrices, expected " +
                             std::to_string(online_.n_layers() * 2));
  size_t i = 0;
  for (int l = 0; l < online_.n_layers(); ++l) {
    const auto& wm = mats[i++];
    if (wm.name != "mlp.W" + std::to_string(l) || wm.values.rows != online_.W[l].rows ||
        wm.values.cols != online_.W[l].cols)
      throw std::runtime_error("checkpoint matrix mismatch at " + wm.name);
    for (size_t k = 0; k < wm.values.size(); ++k) online_.W[l].data[k] = static_cast<R>(wm.values.data[k]);
    const auto& bm = mats[i++];
    if (bm.name != "mlp.b" + std::to_string(l) || bm.values.size() != online_.b[l].size())
      throw std::runtime_error("checkpoint matrix mismatch at " + bm.name);
    for (size_t k = 0; k < bm.values.size(); ++k) online_.b[l][k] = static_cast<R>(bm.values.data[k]);
  }
  target_ = online_;
}

template struct Transition<float>;
template struct Transition<double>;
template class ReplayBuffer<float>;
template class ReplayBuffer<double>;
template void adam_update<float>(Matrix<float>&, const Matrix<float>&, AdamMoments<float>&, const AdamHyper&, double, double, const std::string&);
template void adam_update<double>(Matrix<double>&, const Matrix<double>&, AdamMoments<double>&, const AdamHyper&, double, double, const std::string&);
template class CellAdam<float>;
template class CellAdam<double>;
template float td_target<float>(float, float, bool, double);
template double td_target<double>(double, double, bool, double);
template LossGrad<float> loss_and_grad<float>(float, float);
template LossGrad<double> loss_and_grad<double>(double, double);
template class CellAgent<float>;
template class CellAgent<double>;
template struct MlpParams<float>;
template struct MlpParams<double>;
template struct MlpGrads<float>;
template struct MlpGrads<double>;
template MlpActivations<float> mlp_forward<float>(const MlpParams<float>&, const Vec<float>&);
template MlpActivations<double> mlp_forward<double>(const MlpParams<double>&, const Vec<double>&);
template void mlp_backward_accum<float>(const MlpParams<float>&, const MlpActivations<float>&, const Vec<float>&, MlpGrads<float>&);
template void mlp_backward_accum<double>(const MlpParams<double>&, const MlpActivations<double>&, const Vec<double>&, MlpGrads<double>&);
template class DqnAgent<float>;
template class DqnAgent<double>;

}  // namespace arq
