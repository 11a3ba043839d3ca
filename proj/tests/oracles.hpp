#pragma once

// Independent reference computations used only by the test suites. Nothing
// here goes through the separable transforms or grid operator under test.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "lpinr/spectral.hpp"

namespace lpinr::oracle {

/// (1/M^d) sum_m f(m/M) exp(-2 pi i k.m/M) by a plain multi-index loop.
inline std::complex<double> brute_coeff(const std::function<double(std::span<const double>)>& f, int M, int d,
                                        const Freq& k) {
  std::complex<double> acc = 0.0;
  const std::size_t n = ipow(M, d);
  std::vector<double> x(d);
  for (std::size_t idx = 0; idx < n; ++idx) {
    std::size_t rem = idx;
    double phase = 0.0;
    for (int j = d - 1; j >= 0; --j) {
      const int m = static_cast<int>(rem % M);
      rem /= M;
      x[j] = static_cast<double>(m) / M;
      phase += static_cast<double>(k[j]) * m / M;
    }
    acc += f(x) * std::polar(1.0, -kTwoPi * phase);
  }
  return acc / static_cast<double>(n);
}

/// Same for an explicit sample vector in row-major order.
inline std::complex<double> brute_coeff(std::span<const double> samples, int M, int d, const Freq& k) {
  std::complex<double> acc = 0.0;
  for (std::size_t idx = 0; idx < samples.size(); ++idx) {
    std::size_t rem = idx;
    double phase = 0.0;
    for (int j = d - 1; j >= 0; --j) {
      const int m = static_cast<int>(rem % M);
      rem /= M;
      phase += static_cast<double>(k[j]) * m / M;
    }
    acc += samples[idx] * std::polar(1.0, -kTwoPi * phase);
  }
  return acc / static_cast<double>(samples.size());
}

/// Complex coefficient of the trig polynomial with feature weights w at
/// half-space index j (cos block then sin block), written out by hand.
inline std::complex<double> trig_coeff(const Vec& w, std::size_t p, std::size_t j, bool negative) {
  const double re = w[static_cast<Eigen::Index>(1 + j)] / std::sqrt(2.0);
  const double im = w[static_cast<Eigen::Index>(1 + p + j)] / std::sqrt(2.0);
  return negative ? std::complex<double>(re, im) : std::complex<double>(re, -im);
}

/// Classical half-wave rectified cosine series coefficient c_k of max(cos 2 pi x, 0).
inline double half_wave_coeff(int k) {
  k = std::abs(k);
  if (k == 0) return 1.0 / kPi;
  if (k == 1) return 0.25;
  if (k % 2 == 1) return 0.0;
  const int n = k / 2;
  return (n % 2 == 1 ? 1.0 : -1.0) / (kPi * (4.0 * n * n - 1.0));
}

/// Central finite difference of a scalar function along coordinate i.
inline double central_difference(const std::function<double(const Vec&)>& f, Vec x, Eigen::Index i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double fp = f(x);
  x[i] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

/// Fraction of M equispaced points where f > 0 (1-D).
inline double positive_measure(const std::function<double(double)>& f, int M) {
  int count = 0;
  for (int m = 0; m < M; ++m)
    if (f((m + 0.5) / M) > 0) ++count;
  return static_cast<double>(count) / M;
}

/// Power series for J1 summed in long double with a fixed 50 terms.
inline double bessel_j1_series(double x) {
  long double h = 0.5L * x;
  long double term = h;
  long double sum = term;
  for (int m = 1; m < 50; ++m) {
    term *= -h * h / (static_cast<long double>(m) * (m + 1));
    sum += term;
  }
  return static_cast<double>(sum);
}

inline Vec random_unit(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v.normalized();
}

}  // namespace lpinr::oracle
