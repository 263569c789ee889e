#include "arq/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace arq::la {

void shape_error(const std::string& op, const std::string& detail) {
  throw std::invalid_argument(op + ": shape mismatch (" + detail + ")");
}

namespace {

// Clamped rational approximation of tanh for float (numerator odd, denominator
// even, so odd symmetry is exact).  Max abs error vs the true tanh is ~4e-7;
// beyond |x| ~ 7.9 float tanh is saturated anyway.  Plain arithmetic only, so
// the compiler vectorizes the elementwise loops that call it.
inline float fast_tanhf(float x) {
  constexpr float kClamp = 7.90531110763549805f;
  constexpr float kTiny = 4e-4f;
  float cx = x < -kClamp ? -kClamp : (x > kClamp ? kClamp : x);
  float x2 = cx * cx;
  float p = -2.76076847742355e-16f;
  p = p * x2 + 2.00018790482477e-13f;
  p = p * x2 + -8.60467152213735e-11f;
  p = p * x2 + 5.12229709037114e-08f;
  p = p * x2 + 1.48572235717979e-05f;
  p = p * x2 + 6.37261928875436e-04f;
  p = p * x2 + 4.89352455891786e-03f;
  p = p * cx;
  float q = 1.19825839466702e-06f;
  q = q * x2 + 1.18534705686654e-04f;
  q = q * x2 + 2.26843463243900e-03f;
  q = q * x2 + 4.89352518554385e-03f;
  float r = p / q;
  return (cx > -kTiny && cx < kTiny) ? cx : r;
}

}  // namespace

template <class R>
R dot(const R* a, const R* b, int n) {
  constexpr int L = 16;  // lanes per accumulator group
  constexpr int G = 4;   // independent groups (hides FMA latency)
  R acc[G][L] = {};
  int k = 0;
  for (; k + G * L <= n; k += G * L) {
    for (int g = 0; g < G; ++g) {
      const R* pa = a + k + g * L;
      const R* pb = b + k + g * L;
      for (int j = 0; j < L; ++j) acc[g][j] += pa[j] * pb[j];
    }
  }
  for (; k + L <= n; k += L) {
    for (int j = 0; j < L; ++j) acc[0][j] += a[k + j] * b[k + j];
  }
  R tail = R(0);
  for (; k < n; ++k) tail += a[k] * b[k];
  for (int g = 1; g < G; ++g)
    for (int j = 0; j < L; ++j) acc[0][j] += acc[g][j];
  for (int w = L / 2; w > 0; w /= 2)
    for (int j = 0; j < w; ++j) acc[0][j] += acc[0][j + w];
  return acc[0][0] + tail;
}

template <class R>
void matvec(const Matrix<R>& m, const R* x, int xn, R* out) {
  if (xn != m.cols) shape_error("matvec", std::to_string(m.rows) + "x" + std::to_string(m.cols) + " * vec" + std::to_string(xn));
  for (int i = 0; i < m.rows; ++i) out[i] = dot(m.row(i), x, m.cols);
}

template <class R>
Vec<R> matvec(const Matrix<R>& m, const Vec<R>& x) {
  Vec<R> out(m.rows);
  matvec(m, x.data(), static_cast<int>(x.size()), out.data());
  return out;
}

template <class R>
void matvec_transpose_accum(const Matrix<R>& m, const R* v, int vn, R* out) {
  if (vn != m.rows) shape_error("matvec_transpose_accum", std::to_string(m.rows) + "x" + std::to_string(m.cols) + "^T * vec" + std::to_string(vn));
  for (int i = 0; i < m.rows; ++i) axpy(v[i], m.row(i), out, m.cols);
}

template <class R>
void axpy(R a, const R* x, R* y, int n) {
  for (int k = 0; k < n; ++k) y[k] += a * x[k];
}

template <class R>
void outer_accum(const R* u, int un, const R* v, int vn, Matrix<R>& m) {
  if (un != m.rows || vn != m.cols) shape_error("outer_accum", std::to_string(un) + " x " + std::to_string(vn) + " into " + std::to_string(m.rows) + "x" + std::to_string(m.cols));
  for (int i = 0; i < un; ++i) axpy(u[i], v, m.row(i), vn);
}

template <class R>
Matrix<R> outer(const Vec<R>& u, const Vec<R>& v) {
  Matrix<R> m(static_cast<int>(u.size()), static_cast<int>(v.size()));
  outer_accum(u.data(), m.rows, v.data(), m.cols, m);
  return m;
}

template <class R>
void relu(const R* x, R* out, int n) {
  for (int k = 0; k < n; ++k) out[k] = x[k] > R(0) ? x[k] : R(0);
}

template <class R>
void relu_grad(const R* x, R* out, int n) {
  for (int k = 0; k < n; ++k) out[k] = x[k] > R(0) ? R(1) : R(0);
}

template <>
void tanh_act<float>(const float* x, float* out, int n) {
  for (int k = 0; k < n; ++k) out[k] = fast_tanhf(x[k]);
}

template <>
void tanh_act<double>(const double* x, double* out, int n) {
  for (int k = 0; k < n; ++k) out[k] = std::tanh(x[k]);
}

template <class R>
void tanh_grad_from_output(const R* t, R* out, int n) {
  for (int k = 0; k < n; ++k) out[k] = R(1) - t[k] * t[k];
}

template <class R>
R layernorm(const R* v, int n, R* out) {
  if (n < 2) throw std::invalid_argument("layernorm: need at least 2 elements, got " + std::to_string(n));
  R mean = R(0);
  for (int k = 0; k < n; ++k) mean += v[k];
  mean /= R(n);
  R var = R(0);
  for (int k = 0; k < n; ++k) {
    R d = v[k] - mean;
    var += d * d;
  }
  var /= R(n);
  R inv_std = R(1) / std::sqrt(var + R(kLayerNormEps));
  for (int k = 0; k < n; ++k) out[k] = (v[k] - mean) * inv_std;
  return inv_std;
}

template <class R>
Vec<R> layernorm(const Vec<R>& v) {
  Vec<R> out(v.size());
  layernorm(v.data(), static_cast<int>(v.size()), out.data());
  return out;
}

template <class R>
void layernorm_backward(const R* nhat, R inv_std, const R* dout, int n, R* dv) {
  R mean_d = R(0), mean_dn = R(0);
  for (int k = 0; k < n; ++k) {
    mean_d += dout[k];
    mean_dn += dout[k] * nhat[k];
  }
  mean_d /= R(n);
  mean_dn /= R(n);
  for (int k = 0; k < n; ++k) dv[k] = inv_std * (dout[k] - mean_d - nhat[k] * mean_dn);
}

template <class R>
void init_weights(Matrix<R>& m, SeededRng& rng) {
  if (m.cols < 1) throw std::invalid_argument("init_weights: matrix has no columns");
  double bound = std::sqrt(1.0 / static_cast<double>(m.cols));
  for (size_t k = 0; k < m.data.size(); ++k) {
    m.data[k] = static_cast<R>((2.0 * rng.next_double() - 1.0) * bound);
  }
}

template <class R>
bool all_finite(const R* x, size_t n) {
  for (size_t k = 0; k < n; ++k)
    if (!std::isfinite(x[k])) return false;
  return true;
}

template float dot<float>(const float*, const float*, int);
template double dot<double>(const double*, const double*, int);
template void matvec<float>(const Matrix<float>&, const float*, int, float*);
template void matvec<double>(const Matrix<double>&, const double*, int, double*);
template Vec<float> matvec<float>(const Matrix<float>&, const Vec<float>&);
template Vec<double> matvec<double>(const Matrix<double>&, const Vec<double>&);
template void matvec_transpose_accum<float>(const Matrix<float>&, const float*, int, float*);
template void matvec_transpose_accum<double>(const Matrix<double>&, const double*, int, double*);
template void axpy<float>(float, const float*, float*, int);
template void axpy<double>(double, const double*, double*, int);
template void outer_accum<float>(const float*, int, const float*, int, Matrix<float>&);
template void outer_accum<double>(const double*, int, const double*, int, Matrix<double>&);
template Matrix<float> outer<float>(const Vec<float>&, const Vec<float>&);
template Matrix<double> outer<double>(const Vec<double>&, const Vec<double>&);
template void relu<float>(const float*, float*, int);
template void relu<double>(const double*, double*, int);
template void relu_grad<float>(const float*, float*, int);
template void relu_grad<double>(const double*, double*, int);
template void tanh_grad_from_output<float>(const float*, float*, int);
template void tanh_grad_from_output<double>(const double*, double*, int);
template float layernorm<float>(const float*, int, float*);
template double layernorm<double>(const double*, int, double*);
template Vec<float> layernorm<float>(const Vec<float>&);
template Vec<double> layernorm<double>(const Vec<double>&);
template void layernorm_backward<float>(const float*, float, const float*, int, float*);
template void layernorm_backward<double>(const double*, double, const double*, int, double*);
template void init_weights<float>(Matrix<float>&, SeededRng&);
template void init_weights<double>(Matrix<double>&, SeededRng&);
template bool all_finite<float>(const float*, size_t);
template bool all_finite<double>(const double*, size_t);

}  // namespace arq::la
