#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "arq/linalg.hpp"
#include "arq/parallel.hpp"

using arq::Matrix;
using arq::SeededRng;
using arq::Vec;
namespace la = arq::la;

namespace {

// Naive reference reduction, plain left-to-right in long double.
template <class R>
long double naive_dot(const R* a, const R* b, int n) {
  long double s = 0.0L;
  for (int k = 0; k < n; ++k) s += static_cast<long double>(a[k]) * static_cast<long double>(b[k]);
  return s;
}

double rel_err(double a, double b, double floor = 1e-12) {
  double denom = std::max({std::fabs(a), std::fabs(b), floor});
  return std::fabs(a - b) / denom;
}

}  // namespace

TEST_CASE("pcg32 reference stream, seed 42 stream 54") {
  // Golden values from the canonical pcg32 demo output.
  SeededRng rng(42, 54);
  CHECK(rng.next_u32() == 0xa15c02b7u);
  CHECK(rng.next_u32() == 0x7b47f409u);
  CHECK(rng.next_u32() == 0xba1d3330u);
  CHECK(rng.next_u32() == 0x83d2f293u);
  CHECK(rng.next_u32() == 0xbfa4784bu);
  CHECK(rng.next_u32() == 0xcbed606eu);
}

TEST_CASE("rng determinism and ranges") {
  SeededRng a(123, 7), b(123, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u32() == b.next_u32());

  SeededRng c(123, 8);
  bool all_same = true;
  SeededRng a2(123, 7);
  for (int i = 0; i < 16; ++i) all_same = all_same && (a2.next_u32() == c.next_u32());
  CHECK_FALSE(all_same);

  SeededRng r(5);
  for (int i = 0; i < 10000; ++i) {
    double d = r.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
  }
  for (int i = 0; i < 10000; ++i) {
    auto v = r.bounded(6);
    CHECK(v < 6u);
  }
  for (int i = 0; i < 1000; ++i) {
    double u = r.uniform(-2.5, 1.5);
    CHECK(u >= -2.5);
    CHECK(u < 1.5);
  }
}

TEST_CASE("bounded covers all residues") {
  SeededRng r(11);
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 60000; ++i) counts[r.bounded(6)]++;
  for (int k = 0; k < 6; ++k) {
    // ~N(10000, sqrt(10000*5/6)); 5 sigma ~ 456.
    CHECK(counts[k] > 10000 - 456);
    CHECK(counts[k] < 10000 + 456);
  }
}

TEST_CASE("dot matches naive reduction") {
  SeededRng rng(2024);
  for (int n : {0, 1, 2, 15, 16, 17, 63, 64, 65, 128, 129, 400, 1000}) {
    Vec<double> a(n), b(n);
    for (int k = 0; k < n; ++k) {
      a[k] = rng.uniform(-1.0, 1.0);
      b[k] = rng.uniform(-1.0, 1.0);
    }
    double got = la::dot(a.data(), b.data(), n);
    double want = static_cast<double>(naive_dot(a.data(), b.data(), n));
    CHECK(rel_err(got, want) < 1e-13);

    Vec<float> af(n), bf(n);
    for (int k = 0; k < n; ++k) {
      af[k] = static_cast<float>(a[k]);
      bf[k] = static_cast<float>(b[k]);
    }
    float gotf = la::dot(af.data(), bf.data(), n);
    double wantf = static_cast<double>(naive_dot(af.data(), bf.data(), n));
    CHECK(rel_err(gotf, wantf, 1e-5) < 1e-4);
  }
}

TEST_CASE("matvec and transpose matvec match naive loops") {
  SeededRng rng(99);
  Matrix<double> m(7, 13);
  la::init_weights(m, rng);
  Vec<double> x(13), v(7);
  for (auto& e : x) e = rng.uniform(-2.0, 2.0);
  for (auto& e : v) e = rng.uniform(-2.0, 2.0);

  Vec<double> y = la::matvec(m, x);
  REQUIRE(y.size() == 7);
  for (int i = 0; i < 7; ++i) {
    long double s = 0;
    for (int j = 0; j < 13; ++j) s += m.at(i, j) * x[j];
    CHECK(rel_err(y[i], static_cast<double>(s)) < 1e-13);
  }

  Vec<double> t(13, 0.25);
  la::matvec_transpose_accum(m, v.data(), 7, t.data());
  for (int j = 0; j < 13; ++j) {
    long double s = 0.25L;
    for (int i = 0; i < 7; ++i) s += m.at(i, j) * v[i];
    CHECK(rel_err(t[j], static_cast<double>(s)) < 1e-13);
  }

  CHECK_THROWS_AS(la::matvec(m, x.data(), 12, y.data()), std::invalid_argument);
  CHECK_THROWS_AS(la::matvec_transpose_accum(m, v.data(), 6, t.data()), std::invalid_argument);
}

TEST_CASE("outer product") {
  Vec<double> u{1.0, -2.0, 3.0};
  Vec<double> v{0.5, 4.0};
  Matrix<double> m = la::outer(u, v);
  REQUIRE(m.rows == 3);
  REQUIRE(m.cols == 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) CHECK(m.at(i, j) == doctest::Approx(u[i] * v[j]).epsilon(1e-15));

  Matrix<double> acc(3, 2);
  la::outer_accum(u.data(), 3, v.data(), 2, acc);
  la::outer_accum(u.data(), 3, v.data(), 2, acc);
  CHECK(acc.at(2, 1) == doctest::Approx(2.0 * 3.0 * 4.0));
  CHECK_THROWS_AS(la::outer_accum(u.data(), 2, v.data(), 2, acc), std::invalid_argument);
}

TEST_CASE("relu and relu_grad on edge inputs") {
  double denorm = std::numeric_limits<double>::denorm_min();
  Vec<double> x{-3.0, -0.0, 0.0, denorm, -denorm, 1e300, -1e300, 0.5};
  Vec<double> y(x.size()), g(x.size());
  la::relu(x.data(), y.data(), static_cast<int>(x.size()));
  la::relu_grad(x.data(), g.data(), static_cast<int>(x.size()));
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 0.0);
  CHECK(y[3] == denorm);
  CHECK(y[4] == 0.0);
  CHECK(y[5] == 1e300);
  CHECK(y[6] == 0.0);
  CHECK(y[7] == 0.5);
  // Subgradient at exactly 0 is 0.
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
  CHECK(g[2] == 0.0);
  CHECK(g[3] == 1.0);
  CHECK(g[4] == 0.0);
  CHECK(g[5] == 1.0);
  CHECK(g[7] == 1.0);
}

TEST_CASE("tanh double equals std::tanh; float approx is tight") {
  // Dense grid plus special points.
  std::vector<double> pts;
  for (double x = -10.0; x <= 10.0; x += 0.001) pts.push_back(x);
  const size_t grid_end = pts.size();
  pts.push_back(0.0);
  pts.push_back(-0.0);
  pts.push_back(1e-300);
  pts.push_back(static_cast<double>(std::numeric_limits<float>::denorm_min()));
  pts.push_back(50.0);
  pts.push_back(-50.0);

  double max_err_f = 0.0;
  float prev = -2.0f;
  for (size_t pi = 0; pi < pts.size(); ++pi) {
    double x = pts[pi];
    double yd;
    la::tanh_act(&x, &yd, 1);
    CHECK(yd == std::tanh(x));

    float xf = static_cast<float>(x);
    float yf;
    la::tanh_act(&xf, &yf, 1);
    max_err_f = std::max(max_err_f, std::fabs(static_cast<double>(yf) - std::tanh(static_cast<double>(xf))));

    float mxf = -xf;
    float myf;
    la::tanh_act(&mxf, &myf, 1);
    CHECK(myf == -yf);  // exact odd symmetry

    if (pi < grid_end) {
      // Monotone up to float rounding noise (last-ulp wiggle near saturation).
      CHECK(yf >= prev - 3e-7f);
      prev = yf;
    }
  }
  CHECK(max_err_f < 5e-7);

  float nz = -0.0f, out;
  la::tanh_act(&nz, &out, 1);
  CHECK(std::signbit(out));
}

TEST_CASE("tanh_grad matches central finite differences in 64-bit") {
  SeededRng rng(31);
  for (int i = 0; i < 10; ++i) {
    double x = rng.uniform(-3.0, 3.0);
    double t, g;
    la::tanh_act(&x, &t, 1);
    la::tanh_grad_from_output(&t, &g, 1);
    double h = 1e-4;
    double xp = x + h, xm = x - h, tp, tm;
    la::tanh_act(&xp, &tp, 1);
    la::tanh_act(&xm, &tm, 1);
    double fd = (tp - tm) / (2 * h);
    CHECK(std::fabs(g - fd) < 1e-8);
  }
}

TEST_CASE("layernorm forward properties") {
  SeededRng rng(8);
  Vec<double> v(32);
  for (auto& e : v) e = rng.uniform(-5.0, 5.0);
  Vec<double> out = la::layernorm(v);

  double mean = std::accumulate(out.begin(), out.end(), 0.0) / out.size();
  CHECK(std::fabs(mean) < 1e-12);
  double var = 0;
  for (double e : out) var += (e - mean) * (e - mean);
  var /= out.size();
  // Variance slightly below 1 because of the eps inside the sqrt.
  CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(var < 1.0);

  Vec<double> c(16, 3.25);
  Vec<double> cz = la::layernorm(c);
  for (double e : cz) CHECK(e == 0.0);

  Vec<double> one(1, 2.0), tmp(1);
  CHECK_THROWS_AS(la::layernorm(one.data(), 1, tmp.data()), std::invalid_argument);
}

TEST_CASE("layernorm scale behaviour near eps") {
  // For sigma^2 >> eps the output is scale-invariant; the eps keeps tiny
  // vectors from blowing up.
  Vec<double> v{1.0, 2.0, 3.0, 4.0};
  Vec<double> scaled{10.0, 20.0, 30.0, 40.0};
  Vec<double> a = la::layernorm(v);
  Vec<double> b = la::layernorm(scaled);
  for (size_t k = 0; k < v.size(); ++k) CHECK(rel_err(a[k], b[k], 1e-9) < 1e-4);

  Vec<double> tiny{1e-6, -1e-6, 2e-6, -2e-6};
  Vec<double> t = la::layernorm(tiny);
  for (double e : t) CHECK(std::fabs(e) < 1.0);  // eps dominates, outputs stay small
}

TEST_CASE("layernorm_backward matches finite differences") {
  SeededRng rng(77);
  const int n = 16;
  Vec<double> v(n), dout(n);
  for (auto& e : v) e = rng.uniform(-2.0, 2.0);
  for (auto& e : dout) e = rng.uniform(-1.0, 1.0);

  Vec<double> nhat(n);
  double inv_std = la::layernorm(v.data(), n, nhat.data());
  Vec<double> dv(n);
  la::layernorm_backward(nhat.data(), inv_std, dout.data(), n, dv.data());

  const double h = 1e-4;
  for (int k = 0; k < n; ++k) {
    Vec<double> vp = v, vm = v, op(n), om(n);
    vp[k] += h;
    vm[k] -= h;
    la::layernorm(vp.data(), n, op.data());
    la::layernorm(vm.data(), n, om.data());
    double lp = 0, lm = 0;
    for (int j = 0; j < n; ++j) {
      lp += dout[j] * op[j];
      lm += dout[j] * om[j];
    }
    double fd = (lp - lm) / (2 * h);
    CHECK(rel_err(dv[k], fd, 1e-9) < 1e-6);
  }
}

TEST_CASE("init_weights bounds, stats, determinism") {
  const int rows = 500, cols = 200;
  double bound = std::sqrt(1.0 / cols);

  SeededRng r1(7), r2(7), r3(8);
  Matrix<double> m1(rows, cols), m2(rows, cols), m3(rows, cols);
  la::init_weights(m1, r1);
  la::init_weights(m2, r2);
  la::init_weights(m3, r3);

  double mean = 0;
  for (double e : m1.data) {
    CHECK(std::fabs(e) <= bound);
    mean += e;
  }
  const double n = static_cast<double>(m1.size());
  mean /= n;
  // Uniform(-b, b) has sd b/sqrt(3); mean of n draws has sd b/sqrt(3n).
  double three_sigma = 3.0 * bound / std::sqrt(3.0 * n);
  CHECK(std::fabs(mean) < three_sigma);

  CHECK(m1.data == m2.data);
  CHECK(m1.data != m3.data);
}

TEST_CASE("all_finite flags nan and inf") {
  Vec<double> ok{1.0, -2.0, 0.0};
  CHECK(la::all_finite(ok.data(), ok.size()));
  Vec<double> bad1{1.0, std::numeric_limits<double>::quiet_NaN()};
  Vec<double> bad2{std::numeric_limits<double>::infinity(), 0.0};
  CHECK_FALSE(la::all_finite(bad1.data(), bad1.size()));
  CHECK_FALSE(la::all_finite(bad2.data(), bad2.size()));
}

TEST_CASE("parallel_for partitions exactly and matches serial") {
  struct Guard {
    ~Guard() { arq::set_worker_threads(1); }
  } guard;

  for (int nt : {1, 2, 3, 4, 7}) {
    arq::set_worker_threads(nt);
    const int n = 101;
    std::vector<int> hits(n, 0);
    arq::parallel_for(n, [&](int b, int e) {
      for (int i = b; i < e; ++i) hits[i]++;
    });
    for (int i = 0; i < n; ++i) CHECK(hits[i] == 1);
  }

  arq::set_worker_threads(4);
  const int n = 64;
  std::vector<double> out_par(n), out_ser(n);
  auto work = [](int i) {
    double s = 0;
    for (int k = 1; k <= 50; ++k) s += std::sin(i * 0.1 + k);
    return s;
  };
  arq::parallel_for(n, [&](int b, int e) {
    for (int i = b; i < e; ++i) out_par[i] = work(i);
  });
  arq::set_worker_threads(1);
  arq::parallel_for(n, [&](int b, int e) {
    for (int i = b; i < e; ++i) out_ser[i] = work(i);
  });
  CHECK(out_par == out_ser);

  arq::parallel_for(0, [&](int, int) { CHECK(false); });
  CHECK_THROWS_AS(arq::set_worker_threads(0), std::invalid_argument);
}
