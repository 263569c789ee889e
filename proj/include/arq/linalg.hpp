#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace arq {

template <class R>
using Vec = std::vector<R>;

/// Dense row-major matrix.  All heavy math runs through the kernels in
/// arq::la so that floating-point evaluation order is fixed in one
/// translation unit (bit-reproducible across runs and thread counts).
template <class R>
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<R> data;  // row-major, rows*cols

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), R(0)) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative shape");
  }

  R* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
  const R* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }
  R& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  const R& at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
  size_t size() const { return data.size(); }
  void zero() { std::fill(data.begin(), data.end(), R(0)); }
};

/// Deterministic PCG32 (XSH-RR 64/32) generator.  Chosen over std::mt19937
/// because its output stream is fully specified by this file alone: identical
/// seeds give identical streams on every platform, which the replay and
/// fixture tests depend on.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0) { reseed(seed, stream); }

  void reseed(std::uint64_t seed, std::uint64_t stream = 0) {
    state_ = 0u;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  std::uint64_t next_u64() {
    std::uint64_t hi = next_u32();
    std::uint64_t lo = next_u32();
    return (hi << 32) | lo;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).  Multiply-shift; the bias for n well below
  /// 2^32 is far smaller than any statistic the tests resolve.
  std::uint32_t bounded(std::uint32_t n) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(next_u32()) * n) >> 32);
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 1;
};

namespace la {

[[noreturn]] void shape_error(const std::string& op, const std::string& detail);

/// Fixed-order multi-accumulator dot product.  The lane/group structure is
/// part of the contract: results are identical for identical inputs no matter
/// where the call happens (acting, replay, serial or parallel training).
template <class R>
R dot(const R* a, const R* b, int n);

/// out = m * x  (x has m.cols elements, out has m.rows).
template <class R>
void matvec(const Matrix<R>& m, const R* x, int xn, R* out);

template <class R>
Vec<R> matvec(const Matrix<R>& m, const Vec<R>& x);

/// out[j] += sum_i m[i][j] * v[i]  (transpose matvec, accumulating).
/// Row-ascending accumulation order, fixed.
template <class R>
void matvec_transpose_accum(const Matrix<R>& m, const R* v, int vn, R* out);

/// y[k] += a * x[k]
template <class R>
void axpy(R a, const R* x, R* y, int n);

/// m += u * v^T  (u has m.rows elements, v has m.cols).
template <class R>
void outer_accum(const R* u, int un, const R* v, int vn, Matrix<R>& m);

/// u * v^T as a fresh matrix.
template <class R>
Matrix<R> outer(const Vec<R>& u, const Vec<R>& v);

template <class R>
void relu(const R* x, R* out, int n);

/// Subgradient at 0 is 0: out[k] = x[k] > 0 ? 1 : 0.
template <class R>
void relu_grad(const R* x, R* out, int n);

/// Elementwise hyperbolic tangent.  double: std::tanh.  float: a clamped
/// rational approximation (max abs error ~ 4e-7) whose arithmetic
/// auto-vectorizes; the same function is used on every code path so float
/// results stay bit-identical between acting and replay.
template <class R>
void tanh_act(const R* x, R* out, int n);
template <>
void tanh_act<float>(const float* x, float* out, int n);
template <>
void tanh_act<double>(const double* x, double* out, int n);

/// Derivative paired with tanh_act: 1 - t^2 where t = tanh_act(x).
template <class R>
void tanh_grad_from_output(const R* t, R* out, int n);

inline constexpr double kLayerNormEps = 1e-5;

/// out = (v - mean) / sqrt(var + 1e-5), population variance, no affine terms.
/// Returns 1 / sqrt(var + eps).  Requires n >= 2.
template <class R>
R layernorm(const R* v, int n, R* out);

template <class R>
Vec<R> layernorm(const Vec<R>& v);

/// Gradient of layernorm: given normalized output nhat, the saved inv_std and
/// upstream dout, writes dv. dv = inv_std * (dout - mean(dout) - nhat * mean(dout .* nhat)).
template <class R>
void layernorm_backward(const R* nhat, R inv_std, const R* dout, int n, R* dv);

/// Fill with i.i.d. uniform values in [-sqrt(1/cols), sqrt(1/cols)),
/// row-major draw order.
template <class R>
void init_weights(Matrix<R>& m, SeededRng& rng);

/// True if every entry is finite.
template <class R>
bool all_finite(const R* x, size_t n);

extern template float dot<float>(const float*, const float*, int);
extern template double dot<double>(const double*, const double*, int);
extern template void matvec<float>(const Matrix<float>&, const float*, int, float*);
extern template void matvec<double>(const Matrix<double>&, const double*, int, double*);
extern template Vec<float> matvec<float>(const Matrix<float>&, const Vec<float>&);
extern template Vec<double> matvec<double>(const Matrix<double>&, const Vec<double>&);
extern template void matvec_transpose_accum<float>(const Matrix<float>&, const float*, int, float*);
extern template void matvec_transpose_accum<double>(const Matrix<double>&, const double*, int, double*);
extern template void axpy<float>(float, const float*, float*, int);
extern template void axpy<double>(double, const double*, double*, int);
extern template void outer_accum<float>(const float*, int, const float*, int, Matrix<float>&);
extern template void outer_accum<double>(const double*, int, const double*, int, Matrix<double>&);
extern template Matrix<float> outer<float>(const Vec<float>&, const Vec<float>&);
extern template Matrix<double> outer<double>(const Vec<double>&, const Vec<double>&);
extern template void relu<float>(const float*, float*, int);
extern template void relu<double>(const double*, double*, int);
extern template void relu_grad<float>(const float*, float*, int);
extern template void relu_grad<double>(const double*, double*, int);
extern template void tanh_grad_from_output<float>(const float*, float*, int);
extern template void tanh_grad_from_output<double>(const double*, double*, int);
extern template float layernorm<float>(const float*, int, float*);
extern template double layernorm<double>(const double*, int, double*);
extern template Vec<float> layernorm<float>(const Vec<float>&);
extern template Vec<double> layernorm<double>(const Vec<double>&);
extern template void layernorm_backward<float>(const float*, float, const float*, int, float*);
extern template void layernorm_backward<double>(const double*, double, const double*, int, double*);
extern template void init_weights<float>(Matrix<float>&, SeededRng&);
extern template void init_weights<double>(Matrix<double>&, SeededRng&);
extern template bool all_finite<float>(const float*, size_t);
extern template bool all_finite<double>(const double*, size_t);

}  // namespace la
}  // namespace arq
