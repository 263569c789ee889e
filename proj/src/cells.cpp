#include "arq/cells.hpp"

#include <cmath>
#include <stdexcept>

namespace arq {

const char* to_string(GoodnessKind k) {
  switch (k) {
    case GoodnessKind::RMS: return "rms";
    case GoodnessKind::Mean: return "mean";
    case GoodnessKind::MS: return "ms";
    case GoodnessKind::Var: return "var";
  }
  return "?";
}

const char* to_string(ConditioningMode m) {
  return m == ConditioningMode::Input ? "input" : "output";
}

const char* to_string(CellKind k) { return k == CellKind::AD ? "ad" : "arq"; }

int CellConfig::attn_rows() const {
  if (kind == CellKind::AD) return conditioning == ConditioningMode::Output ? n_actions : 1;
  return conditioning == ConditioningMode::Output ? n_actions * readout_dim : readout_dim;
}

void CellConfig::validate() const {
  if (obs_dim < 0 || below_dim < 0 || above_dim < 0)
    throw std::invalid_argument("CellConfig: negative input dims");
  if (input_dim() <= 0) throw std::invalid_argument("CellConfig: input_dim must be positive");
  if (n_actions < 1) throw std::invalid_argument("CellConfig: n_actions must be >= 1");
  if (hidden_dim < 2) throw std::invalid_argument("CellConfig: hidden_dim must be >= 2 (layernorm needs it)");
  if (kind == CellKind::ARQ && readout_dim < 1)
    throw std::invalid_argument("CellConfig: readout_dim must be >= 1");
}

template <class R>
CellParams<R> CellParams<R>::init(const CellConfig& cfg, SeededRng& rng) {
  cfg.validate();
  CellParams<R> p;
  p.W_h = Matrix<R>(cfg.hidden_dim, cfg.input_dim());
  p.W_att1 = Matrix<R>(cfg.hidden_dim, cfg.attn_input_dim());
  p.W_att2 = Matrix<R>(cfg.attn_rows(), cfg.attn_input_dim());
  la::init_weights(p.W_h, rng);
  la::init_weights(p.W_att1, rng);
  la::init_weights(p.W_att2, rng);
  return p;
}

template <class R>
CellGrads<R> CellGrads<R>::zeros(const CellConfig& cfg) {
  CellGrads<R> g;
  g.W_h = Matrix<R>(cfg.hidden_dim, cfg.input_dim());
  g.W_att1 = Matrix<R>(cfg.hidden_dim, cfg.attn_input_dim());
  g.W_att2 = Matrix<R>(cfg.attn_rows(), cfg.attn_input_dim());
  return g;
}

template <class R>
void CellGrads<R>::zero() {
  W_h.zero();
  W_att1.zero();
  W_att2.zero();
}

template <class R>
R goodness(const R* y, int n, GoodnessKind kind) {
  if (n < 1) throw std::invalid_argument("goodness: empty vector");
  const R inv_n = R(1) / R(n);
  switch (kind) {
    case GoodnessKind::Mean: {
      R s = R(0);
      for (int i = 0; i < n; ++i) s += y[i];
      return s * inv_n;
    }
    case GoodnessKind::MS: {
      R s = R(0);
      for (int i = 0; i < n; ++i) s += y[i] * y[i];
      return s * inv_n;
    }
    case GoodnessKind::RMS:
    case GoodnessKind::Var: {
      R mu = R(0);
      for (int i = 0; i < n; ++i) mu += y[i];
      mu *= inv_n;
      R var = R(0);
      for (int i = 0; i < n; ++i) {
        R d = y[i] - mu;
        var += d * d;
      }
      var *= inv_n;
      return kind == GoodnessKind::Var ? var : std::sqrt(var);
    }
  }
  return R(0);
}

template <class R>
void goodness_grad_accum(const R* y, int n, GoodnessKind kind, R dq, R* gy) {
  const R inv_n = R(1) / R(n);
  switch (kind) {
    case GoodnessKind::Mean: {
      const R g = dq * inv_n;
      for (int i = 0; i < n; ++i) gy[i] += g;
      return;
    }
    case GoodnessKind::MS: {
      const R c = dq * R(2) * inv_n;
      for (int i = 0; i < n; ++i) gy[i] += c * y[i];
      return;
    }
    case GoodnessKind::Var: {
      R mu = R(0);
      for (int i = 0; i < n; ++i) mu += y[i];
      mu *= inv_n;
      const R c = dq * R(2) * inv_n;
      for (int i = 0; i < n; ++i) gy[i] += c * (y[i] - mu);
      return;
    }
    case GoodnessKind::RMS: {
      const R rms = goodness(y, n, GoodnessKind::RMS);
      if (rms == R(0)) return;  // subgradient at zero variance
      R mu = R(0);
      for (int i = 0; i < n; ++i) mu += y[i];
      mu *= inv_n;
      const R c = dq / (R(n) * rms);
      for (int i = 0; i < n; ++i) gy[i] += c * (y[i] - mu);
      return;
    }
  }
}

namespace {

// Projection of the action-free input prefix: base[i] = W[i, :in_dim] . X.
// The action one-hot only ever adds W[i, in_dim + a] on top, so this part is
// computed once and shared across every action branch.
template <class R>
void attn_base(const Matrix<R>& W, const Vec<R>& X, int in_dim, Vec<R>& out) {
  out.resize(W.rows);
  for (int i = 0; i < W.rows; ++i) out[i] = la::dot(W.row(i), X.data(), in_dim);
}

// One attention branch: Z1, Z2, T = tanh(outer(Z2, Z1)), N = row-layernorm(T),
// y = N h.
template <class R>
void run_branch(const CellParams<R>& params, const CellConfig& cfg, const Vec<R>& z1base, const Vec<R>& z2base,
                const Vec<R>& h, int action, typename CellActivations<R>::Branch& br) {
  const int in_dim = cfg.input_dim();
  const int rows = cfg.attn_rows();
  const int d_h = cfg.hidden_dim;

  br.action = action;
  br.Z1 = z1base;
  br.Z2 = z2base;
  if (action >= 0) {
    for (int i = 0; i < d_h; ++i) br.Z1[i] += params.W_att1.row(i)[in_dim + action];
    for (int i = 0; i < rows; ++i) br.Z2[i] += params.W_att2.row(i)[in_dim + action];
  }

  br.T = Matrix<R>(rows, d_h);
  br.N = Matrix<R>(rows, d_h);
  br.row_inv_std.resize(rows);
  br.y.resize(rows);
  Vec<R> raw(d_h);
  for (int i = 0; i < rows; ++i) {
    const R z2 = br.Z2[i];
    for (int j = 0; j < d_h; ++j) raw[j] = z2 * br.Z1[j];
    la::tanh_act(raw.data(), br.T.row(i), d_h);
    br.row_inv_std[i] = la::layernorm(br.T.row(i), d_h, br.N.row(i));
    br.y[i] = la::dot(br.N.row(i), h.data(), d_h);
  }
}

template <class R>
void readout_q(const CellConfig& cfg, CellActivations<R>& acts) {
  acts.q.assign(cfg.n_actions, R(0));
  if (cfg.conditioning == ConditioningMode::Output) {
    const auto& y = acts.branches[0].y;
    if (cfg.kind == CellKind::AD) {
      for (int a = 0; a < cfg.n_actions; ++a) acts.q[a] = y[a];
    } else {
      const int d = cfg.readout_dim;
      for (int a = 0; a < cfg.n_actions; ++a) acts.q[a] = goodness(y.data() + static_cast<size_t>(a) * d, d, cfg.goodness);
    }
  } else {
    for (const auto& br : acts.branches) {
      if (cfg.kind == CellKind::AD) acts.q[br.action] = br.y[0];
      else acts.q[br.action] = goodness(br.y.data(), static_cast<int>(br.y.size()), cfg.goodness);
    }
  }
}

// The action-agnostic part: X checks plus h = layernorm(relu(W_h X)).
template <class R>
CellActivations<R> hidden_chain(const CellParams<R>& params, const CellConfig& cfg, const Vec<R>& X) {
  if (static_cast<int>(X.size()) != cfg.input_dim())
    la::shape_error("cell_forward", "X has " + std::to_string(X.size()) + " elements, input_dim is " +
                                        std::to_string(cfg.input_dim()));
  if (params.W_h.rows != cfg.hidden_dim || params.W_h.cols != cfg.input_dim() ||
      params.W_att1.cols != cfg.attn_input_dim() || params.W_att2.rows != cfg.attn_rows())
    la::shape_error("cell_forward", "params do not match config");

  CellActivations<R> acts;
  acts.X = X;
  acts.pre.resize(cfg.hidden_dim);
  la::matvec(params.W_h, X.data(), cfg.input_dim(), acts.pre.data());
  Vec<R> r(cfg.hidden_dim);
  la::relu(acts.pre.data(), r.data(), cfg.hidden_dim);
  acts.h.resize(cfg.hidden_dim);
  acts.inv_std_h = la::layernorm(r.data(), cfg.hidden_dim, acts.h.data());
  return acts;
}

template <class R>
CellActivations<R> forward_common(const CellParams<R>& params, const CellConfig& cfg, const Vec<R>& X,
                                  const std::vector<int>& actions) {
  CellActivations<R> acts = hidden_chain(params, cfg, X);

  Vec<R> z1base, z2base;
  attn_base(params.W_att1, X, cfg.input_dim(), z1base);
  attn_base(params.W_att2, X, cfg.input_dim(), z2base);

  if (cfg.conditioning == ConditioningMode::Output) {
    if (!actions.empty())
      throw std::invalid_argument("cell_forward: action candidates only apply under Input conditioning");
    acts.branches.resize(1);
    run_branch(params, cfg, z1base, z2base, acts.h, -1, acts.branches[0]);
  } else {
    std::vector<int> list = actions;
    if (list.empty()) {
      list.resize(cfg.n_actions);
      for (int a = 0; a < cfg.n_actions; ++a) list[a] = a;
    }
    acts.branches.resize(list.size());
    for (size_t k = 0; k < list.size(); ++k) {
      int a = list[k];
      if (a < 0 || a >= cfg.n_actions)
        throw std::invalid_argument("cell_forward: action " + std::to_string(a) + " out of range");
      run_branch(params, cfg, z1base, z2base, acts.h, a, acts.branches[k]);
    }
  }
  readout_q(cfg, acts);
  return acts;
}

}  // namespace

template <class R>
CellActivations<R> cell_hidden(const CellParams<R>& params, const CellConfig& cfg, const Vec<R>& X) {
  return hidden_chain(params, cfg, X);
}

template <class R>
CellActivations<R> forward_ad(const CellParams<R>& params, const CellConfig& cfg, const Vec<R>& X) {
  if (cfg.conditioning != ConditioningMode::Output)
    throw std::invalid_argument("forward_ad: requires Output conditioning");
  return forward_common(params, cfg, X, {});
}

template <class R>
CellActivations<R> forward_arq(const CellParams<R>& params, const CellConfig& cfg, const Vec<R>& X,
                               const std::vector<int>& actions) {
  if (cfg.conditioning != ConditioningMode::Input)
    throw std::invalid_argument("forward_arq: requires Input conditioning");
  return forward_common(params, cfg, X, actions);
}

template <class R>
CellActivations<R> cell_forward(const CellParams<R>& params, const CellConfig& cfg, const Vec<R>& X,
                                const std::vector<int>& actions) {
  return forward_common(params, cfg, X, actions);
}

template <class R>
void backward_accum(const CellParams<R>& params, const CellConfig& cfg, const CellActivations<R>& acts,
                    const Vec<R>& dLdQ, CellGrads<R>& grads) {
  if (static_cast<int>(dLdQ.size()) != cfg.n_actions)
    la::shape_error("backward", "dLdQ has " + std::to_string(dLdQ.size()) + " entries, n_actions is " +
                                    std::to_string(cfg.n_actions));
  if (acts.branches.empty() || acts.h.empty()) throw std::invalid_argument("backward: activations missing");
  if (grads.W_h.rows != params.W_h.rows || grads.W_h.cols != params.W_h.cols ||
      grads.W_att1.rows != params.W_att1.rows || grads.W_att1.cols != params.W_att1.cols ||
      grads.W_att2.rows != params.W_att2.rows || grads.W_att2.cols != params.W_att2.cols)
    la::shape_error("backward", "grads do not match params");
  const int in_dim = cfg.input_dim();
  const int d_h = cfg.hidden_dim;
  const int d = cfg.readout_dim;

  Vec<R> dh(d_h, R(0));
  Vec<R> gy;        // d loss / d y for the current branch
  Vec<R> dn(d_h);   // upstream for one row of N
  Vec<R> dt(d_h);   // gradient at one row of T
  Vec<R> dz1(d_h);  // accumulated per branch

  for (const auto& br : acts.branches) {
    const int rows = static_cast<int>(br.y.size());
    gy.assign(rows, R(0));
    if (cfg.conditioning == ConditioningMode::Output) {
      if (cfg.kind == CellKind::AD) {
        for (int a = 0; a < cfg.n_actions; ++a) gy[a] = dLdQ[a];
      } else {
        for (int a = 0; a < cfg.n_actions; ++a)
          goodness_grad_accum(br.y.data() + static_cast<size_t>(a) * d, d, cfg.goodness, dLdQ[a],
                              gy.data() + static_cast<size_t>(a) * d);
      }
    } else {
      const R dq = dLdQ[br.action];
      if (cfg.kind == CellKind::AD) gy[0] = dq;
      else goodness_grad_accum(br.y.data(), rows, cfg.goodness, dq, gy.data());
    }

    std::fill(dz1.begin(), dz1.end(), R(0));
    Vec<R> dz2(rows);
    for (int i = 0; i < rows; ++i) {
      const R g = gy[i];
      // y[i] = dot(N_row, h): dh += g*N_row; dN_row = g*h.
      la::axpy(g, br.N.row(i), dh.data(), d_h);
      for (int j = 0; j < d_h; ++j) dn[j] = g * acts.h[j];
      la::layernorm_backward(br.N.row(i), br.row_inv_std[i], dn.data(), d_h, dt.data());
      // Through tanh: dT_raw = dt * (1 - T^2); raw[i][j] = Z2[i]*Z1[j].
      const R* t = br.T.row(i);
      for (int j = 0; j < d_h; ++j) dt[j] *= (R(1) - t[j] * t[j]);
      dz2[i] = la::dot(dt.data(), br.Z1.data(), d_h);
      la::axpy(br.Z2[i], dt.data(), dz1.data(), d_h);
    }

    // dW_att2 += outer(dz2, X_a); dW_att1 += outer(dz1, X_a).  The one-hot
    // column only exists under Input conditioning.
    for (int i = 0; i < rows; ++i) {
      la::axpy(dz2[i], acts.X.data(), grads.W_att2.row(i), in_dim);
      if (br.action >= 0) grads.W_att2.row(i)[in_dim + br.action] += dz2[i];
    }
    for (int i = 0; i < d_h; ++i) {
      la::axpy(dz1[i], acts.X.data(), grads.W_att1.row(i), in_dim);
      if (br.action >= 0) grads.W_att1.row(i)[in_dim + br.action] += dz1[i];
    }
  }

  // Back through h = layernorm(relu(pre)) and W_h.
  Vec<R> dr(d_h);
  la::layernorm_backward(acts.h.data(), acts.inv_std_h, dh.data(), d_h, dr.data());
  for (int j = 0; j < d_h; ++j)
    if (acts.pre[j] <= R(0)) dr[j] = R(0);
  for (int i = 0; i < d_h; ++i) la::axpy(dr[i], acts.X.data(), grads.W_h.row(i), in_dim);
}

template <class R>
CellGrads<R> backward(const CellParams<R>& params, const CellConfig& cfg, const CellActivations<R>& acts,
                      const Vec<R>& dLdQ) {
  CellGrads<R> grads = CellGrads<R>::zeros(cfg);
  backward_accum(params, cfg, acts, dLdQ, grads);
  return grads;
}

namespace {

GradCheckReport grad_check_impl(const CellConfig& cfg, std::uint64_t seed, bool corrupt, double corruption) {
  cfg.validate();
  SeededRng rng(seed);
  auto params = CellParams<double>::init(cfg, rng);
  Vec<double> X(cfg.input_dim());
  for (auto& v : X) v = rng.uniform(-1.0, 1.0);
  Vec<double> dLdQ(cfg.n_actions);
  for (auto& v : dLdQ) v = rng.uniform(-1.0, 1.0);

  auto acts = cell_forward(params, cfg, X);
  auto grads = backward(params, cfg, acts, dLdQ);
  if (corrupt && grads.W_att1.size() > 0) grads.W_att1.data[grads.W_att1.size() / 2] += corruption;

  auto loss = [&](const CellParams<double>& p) {
    auto a = cell_forward(p, cfg, X);
    double s = 0;
    for (int k = 0; k < cfg.n_actions; ++k) s += dLdQ[k] * a.q[k];
    return s;
  };

  const double h = 1e-4;
  const double bound = 1e-4;
  GradCheckReport rep;
  rep.pass = true;
  auto check_matrix = [&](Matrix<double>& m, const Matrix<double>& g, const char* name) {
    for (int i = 0; i < m.rows; ++i) {
      for (int j = 0; j < m.cols; ++j) {
        auto fd_at = [&](double step) {
          double saved = m.at(i, j);
          m.at(i, j) = saved + step;
          double lp = loss(params);
          m.at(i, j) = saved - step;
          double lm = loss(params);
          m.at(i, j) = saved;
          return (lp - lm) / (2 * step);
        };
        double an = g.at(i, j);
        auto rel_of = [&](double fd) {
          double denom = std::max({std::fabs(fd), std::fabs(an), 1e-6});
          return std::fabs(fd - an) / denom;
        };
        double rel = rel_of(fd_at(h));
        // Two ways an accurate gradient can still miss the bound at the
        // default step: layernorm near its variance floor makes truncation
        // error (quadratic in the step) blow past it, and a pre-activation
        // within the step of the relu kink makes the probes straddle the
        // corner.  Both recover under a finer step; a wrong gradient does
        // not, so refining only on suspicious coordinates keeps the check
        // honest.
        for (double step = h / 10; rel >= bound && step >= h / 100; step /= 10)
          rel = std::min(rel, rel_of(fd_at(step)));
        rep.checked++;
        if (rel > rep.max_rel_err) {
          rep.max_rel_err = rel;
          rep.worst_param = std::string(name) + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
        }
      }
    }
  };
  check_matrix(params.W_h, grads.W_h, "W_h");
  check_matrix(params.W_att1, grads.W_att1, "W_att1");
  check_matrix(params.W_att2, grads.W_att2, "W_att2");
  rep.pass = rep.max_rel_err < bound;
  return rep;
}

}  // namespace

GradCheckReport grad_check(const CellConfig& cfg, std::uint64_t seed) {
  return grad_check_impl(cfg, seed, false, 0.0);
}

GradCheckReport grad_check_corrupted(const CellConfig& cfg, std::uint64_t seed, double corruption) {
  return grad_check_impl(cfg, seed, true, corruption);
}

template struct CellParams<float>;
template struct CellParams<double>;
template struct CellActivations<float>;
template struct CellActivations<double>;
template struct CellGrads<float>;
template struct CellGrads<double>;

template float goodness<float>(const float*, int, GoodnessKind);
template double goodness<double>(const double*, int, GoodnessKind);
template void goodness_grad_accum<float>(const float*, int, GoodnessKind, float, float*);
template void goodness_grad_accum<double>(const double*, int, GoodnessKind, double, double*);
template CellActivations<float> forward_ad<float>(const CellParams<float>&, const CellConfig&, const Vec<float>&);
template CellActivations<double> forward_ad<double>(const CellParams<double>&, const CellConfig&, const Vec<double>&);
template CellActivations<float> forward_arq<float>(const CellParams<float>&, const CellConfig&, const Vec<float>&, const std::vector<int>&);
template CellActivations<double> forward_arq<double>(const CellParams<double>&, const CellConfig&, const Vec<double>&, const std::vector<int>&);
template CellActivations<float> cell_forward<float>(const CellParams<float>&, const CellConfig&, const Vec<float>&, const std::vector<int>&);
template CellActivations<double> cell_forward<double>(const CellParams<double>&, const CellConfig&, const Vec<double>&, const std::vector<int>&);
template CellActivations<float> cell_hidden<float>(const CellParams<float>&, const CellConfig&, const Vec<float>&);
template CellActivations<double> cell_hidden<double>(const CellParams<double>&, const CellConfig&, const Vec<double>&);
template void backward_accum<float>(const CellParams<float>&, const CellConfig&, const CellActivations<float>&, const Vec<float>&, CellGrads<float>&);
template void backward_accum<double>(const CellParams<double>&, const CellConfig&, const CellActivations<double>&, const Vec<double>&, CellGrads<double>&);
template CellGrads<float> backward<float>(const CellParams<float>&, const CellConfig&, const CellActivations<float>&, const Vec<float>&);
template CellGrads<double> backward<double>(const CellParams<double>&, const CellConfig&, const CellActivations<double>&, const Vec<double>&);

}  // namespace arq
