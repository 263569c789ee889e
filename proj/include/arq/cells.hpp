#pragma once

#include <string>
#include <vector>

#include "arq/linalg.hpp"

namespace arq {

/// Readout applied to the post-attention vector y: RMS is the primary
/// Q-readout (nonnegative), the others are the ablation alternatives.
enum class GoodnessKind { RMS, Mean, MS, Var };

/// Where the action enters the cell: Input appends a one-hot to the
/// attention branch's input (one readout pass per action candidate);
/// Output keeps the input action-free and reads all action values from a
/// single pass.
enum class ConditioningMode { Input, Output };

/// AD reads Q directly from y; ARQ compresses a d-dimensional y into one
/// Q-value through the goodness readout.
enum class CellKind { AD, ARQ };

const char* to_string(GoodnessKind k);
const char* to_string(ConditioningMode m);
const char* to_string(CellKind k);

struct CellConfig {
  int obs_dim = 0;
  int below_dim = 0;
  int above_dim = 0;  // 0 for the top layer
  int n_actions = 1;
  int hidden_dim = 1;   // d_h
  int readout_dim = 1;  // d (ARQ only; AD readout width is fixed by the mode)
  CellKind kind = CellKind::ARQ;
  GoodnessKind goodness = GoodnessKind::RMS;
  ConditioningMode conditioning = ConditioningMode::Input;

  int input_dim() const { return obs_dim + below_dim + above_dim; }
  int attn_input_dim() const { return input_dim() + (conditioning == ConditioningMode::Input ? n_actions : 0); }

  /// Rows of W_att2 (and of the per-sample attention matrix W):
  ///   AD+Output: n_actions   AD+Input: 1
  ///   ARQ+Input: d           ARQ+Output: n_actions*d (y split per action)
  int attn_rows() const;

  void validate() const;  // throws std::invalid_argument on inconsistency
};

template <class R>
struct CellParams {
  Matrix<R> W_h;     // hidden_dim x input_dim
  Matrix<R> W_att1;  // hidden_dim x attn_input_dim
  Matrix<R> W_att2;  // attn_rows x attn_input_dim

  static CellParams init(const CellConfig& cfg, SeededRng& rng);
  size_t param_count() const { return W_h.size() + W_att1.size() + W_att2.size(); }
};

/// Everything backward needs; one instance per (cell, sample).  For Input
/// conditioning there is one branch per evaluated action candidate; Output
/// conditioning has a single branch covering all actions.
template <class R>
struct CellActivations {
  Vec<R> X;    // input as seen by W_h (no action one-hot)
  Vec<R> pre;  // W_h X, before ReLU
  Vec<R> h;    // layernorm(relu(pre))
  R inv_std_h = R(0);

  struct Branch {
    int action = -1;  // -1 under Output conditioning
    Vec<R> Z1;        // hidden_dim
    Vec<R> Z2;        // attn_rows
    Matrix<R> T;      // tanh of outer(Z2, Z1)
    Matrix<R> N;      // per-row layernorm of T
    Vec<R> row_inv_std;
    Vec<R> y;  // N h
  };
  std::vector<Branch> branches;
  Vec<R> q;  // n_actions; entries only for evaluated actions
};

template <class R>
struct CellGrads {
  Matrix<R> W_h;
  Matrix<R> W_att1;
  Matrix<R> W_att2;

  static CellGrads zeros(const CellConfig& cfg);
  void zero();
};

template <class R>
R goodness(const R* y, int n, GoodnessKind kind);

template <class R>
R goodness(const Vec<R>& y, GoodnessKind kind) {
  return goodness(y.data(), static_cast<int>(y.size()), kind);
}

/// gy[i] += dq * d goodness(y)/d y[i].  RMS at zero variance contributes a
/// zero subgradient.
template <class R>
void goodness_grad_accum(const R* y, int n, GoodnessKind kind, R dq, R* gy);

/// Single pass under Output conditioning.  q has one entry per action:
/// directly y for AD, per-group goodness for ARQ.
template <class R>
CellActivations<R> forward_ad(const CellParams<R>& params, const CellConfig& cfg, const Vec<R>& X);

/// Per-action passes under Input conditioning over the given candidates
/// (empty = all actions).  h is computed once and shared (action-agnostic);
/// each candidate gets its own attention branch.
template <class R>
CellActivations<R> forward_arq(const CellParams<R>& params, const CellConfig& cfg, const Vec<R>& X,
                               const std::vector<int>& actions = {});

/// Dispatch on cfg.conditioning.
template <class R>
CellActivations<R> cell_forward(const CellParams<R>& params, const CellConfig& cfg, const Vec<R>& X,
                                const std::vector<int>& actions = {});

/// Only the action-agnostic hidden chain h = layernorm(relu(W_h X)); no
/// attention branches, empty q.  Used when acting takes a random action and
/// only the temporal state needs updating.
template <class R>
CellActivations<R> cell_hidden(const CellParams<R>& params, const CellConfig& cfg, const Vec<R>& X);

/// Exact analytic gradient of sum_a dLdQ[a] * q[a] with respect to this
/// cell's three matrices only; X (and the action one-hots) are constants.
/// Accumulates into grads.
template <class R>
void backward_accum(const CellParams<R>& params, const CellConfig& cfg, const CellActivations<R>& acts,
                    const Vec<R>& dLdQ, CellGrads<R>& grads);

template <class R>
CellGrads<R> backward(const CellParams<R>& params, const CellConfig& cfg, const CellActivations<R>& acts,
                      const Vec<R>& dLdQ);

struct GradCheckReport {
  bool pass = false;
  double max_rel_err = 0.0;
  std::string worst_param;  // e.g. "W_att1[3][7]"
  int checked = 0;
};

/// Central finite differences (h = 1e-4) vs the analytic backward on a
/// randomly initialized cell, in 64-bit.  Pass iff max relative error < 1e-4.
GradCheckReport grad_check(const CellConfig& cfg, std::uint64_t seed);

/// Negative-control variant: adds `corruption` to one analytic gradient
/// entry before comparing, to prove the checker can fail.
GradCheckReport grad_check_corrupted(const CellConfig& cfg, std::uint64_t seed, double corruption);

extern template struct CellParams<float>;
extern template struct CellParams<double>;
extern template struct CellActivations<float>;
extern template struct CellActivations<double>;
extern template struct CellGrads<float>;
extern template struct CellGrads<double>;

extern template float goodness<float>(const float*, int, GoodnessKind);
extern template double goodness<double>(const double*, int, GoodnessKind);
extern template void goodness_grad_accum<float>(const float*, int, GoodnessKind, float, float*);
extern template void goodness_grad_accum<double>(const double*, int, GoodnessKind, double, double*);
extern template CellActivations<float> forward_ad<float>(const CellParams<float>&, const CellConfig&, const Vec<float>&);
extern template CellActivations<double> forward_ad<double>(const CellParams<double>&, const CellConfig&, const Vec<double>&);
extern template CellActivations<float> forward_arq<float>(const CellParams<float>&, const CellConfig&, const Vec<float>&, const std::vector<int>&);
extern template CellActivations<double> forward_arq<double>(const CellParams<double>&, const CellConfig&, const Vec<double>&, const std::vector<int>&);
extern template CellActivations<float> cell_forward<float>(const CellParams<float>&, const CellConfig&, const Vec<float>&, const std::vector<int>&);
extern template CellActivations<double> cell_forward<double>(const CellParams<double>&, const CellConfig&, const Vec<double>&, const std::vector<int>&);
extern template CellActivations<float> cell_hidden<float>(const CellParams<float>&, const CellConfig&, const Vec<float>&);
extern template CellActivations<double> cell_hidden<double>(const CellParams<double>&, const CellConfig&, const Vec<double>&);
extern template void backward_accum<float>(const CellParams<float>&, const CellConfig&, const CellActivations<float>&, const Vec<float>&, CellGrads<float>&);
extern template void backward_accum<double>(const CellParams<double>&, const CellConfig&, const CellActivations<double>&, const Vec<double>&, CellGrads<double>&);
extern template CellGrads<float> backward<float>(const CellParams<float>&, const CellConfig&, const CellActivations<float>&, const Vec<float>&);
extern template CellGrads<double> backward<double>(const CellParams<double>&, const CellConfig&, const CellActivations<double>&, const Vec<double>&);

}  // namespace arq
