#include <doctest.h>

#include <random>
#include <sstream>

#include "lpinr/spectral.hpp"
#include "oracles.hpp"

using namespace lpinr;

TEST_CASE("full_box sizes and ordering") {
  const auto b1 = FrequencySet::full_box(2, 1);
  REQUIRE(b1.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(b1[i][0] == i - 2);

  const auto b0 = FrequencySet::full_box(0, 3);
  REQUIRE(b0.size() == 1);
  CHECK(b0[0] == Freq{0, 0, 0});

  const auto b2 = FrequencySet::full_box(2, 2);
  CHECK(b2.size() == 25);
  CHECK(b2[0] == Freq{-2, -2});
  CHECK(b2[1] == Freq{-2, -1});
  CHECK(b2[24] == Freq{2, 2});
  for (std::size_t i = 0; i < b2.size(); ++i) {
    CHECK(b2.index_of(b2[i]) == i);
    if (i > 0) CHECK(b2[i - 1] < b2[i]);
  }
}

TEST_CASE("half-space representatives") {
  for (int d = 1; d <= 3; ++d)
    for (int K = 0; K <= 3; ++K) {
      const auto h = FrequencySet::half_space(K, d);
      const std::size_t full = ipow(2 * K + 1, d);
      REQUIRE(h.size() == (full - 1) / 2);
      for (const auto& k : h.freqs()) {
        int first = 0;
        for (int kj : k)
          if (kj != 0) {
            first = kj;
            break;
          }
        CHECK(first > 0);
        Freq neg = k;
        for (auto& kj : neg) kj = -kj;
        CHECK_FALSE(h.contains(neg));
      }
    }
}

TEST_CASE("dilation and nesting") {
  const auto b = FrequencySet::full_box(2, 2);
  CHECK(b.dilate(3) == FrequencySet::full_box(6, 2));
  const auto big = FrequencySet::full_box(6, 2);
  for (const auto& k : b.freqs()) CHECK(big.contains(k));
  CHECK_THROWS_AS(FrequencySet::half_space(2, 1).dilate(2), std::invalid_argument);
}

TEST_CASE("feature map dimensions") {
  auto fm = build_feature_map(2, 1);
  CHECK(fm.num_freqs() == 2);
  CHECK(fm.output_dim() == 5);
  CHECK(fm.freqs()[0] == Freq{1});
  CHECK(fm.freqs()[1] == Freq{2});
  CHECK(build_feature_map(0, 1).output_dim() == 1);
  auto fm2 = build_feature_map(1, 2);
  CHECK(fm2.num_freqs() == 4);
  CHECK(fm2.output_dim() == 9);
}

TEST_CASE("eval_gamma values") {
  const auto fm = build_feature_map(2, 1);
  const double x0 = 0.0;
  const Vec g = eval_gamma(fm, std::span<const double>(&x0, 1));
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(kSqrt2));
  CHECK(g[2] == doctest::Approx(kSqrt2));
  CHECK(g[3] == doctest::Approx(0.0));
  CHECK(g[4] == doctest::Approx(0.0));

  const auto fm1 = build_feature_map(1, 1);
  const double xq = 0.25;
  const Vec gq = eval_gamma(fm1, std::span<const double>(&xq, 1));
  CHECK(gq[0] == doctest::Approx(1.0));
  CHECK(std::abs(gq[1]) < 1e-15);
  CHECK(gq[2] == doctest::Approx(kSqrt2));
}

TEST_CASE("gamma has constant norm and is periodic") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int d = 1; d <= 2; ++d) {
    const auto fm = build_feature_map(3, d);
    const double D = static_cast<double>(fm.output_dim());
    for (int t = 0; t < 100; ++t) {
      std::vector<double> x(d);
      for (auto& xi : x) xi = u(rng);
      const Vec g = fm.eval(x);
      CHECK(std::abs(g.squaredNorm() - D) < 1e-12);
      std::vector<double> xs = x;
      xs[0] += 1.0;
      CHECK((fm.eval(xs) - g).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("trig polynomial matches w . gamma") {
  std::mt19937_64 rng(11);
  const auto fm = build_feature_map(2, 2);
  Vec w = Vec::Random(static_cast<Eigen::Index>(fm.output_dim()));
  const TrigPoly tp(fm, w);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t p = fm.num_freqs();
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x{u(rng), u(rng)};
    double direct = w[0];
    for (std::size_t j = 0; j < p; ++j) {
      const double ph = kTwoPi * (fm.freqs()[j][0] * x[0] + fm.freqs()[j][1] * x[1]);
      direct += kSqrt2 * (w[1 + j] * std::cos(ph) + w[1 + p + j] * std::sin(ph));
    }
    CHECK(tp(x) == doctest::Approx(direct).epsilon(1e-13));
  }
}

TEST_CASE("grid_samples") {
  const auto one = grid_samples([](std::span<const double>) { return 1.0; }, 4, 1);
  CHECK(one == std::vector<double>{1, 1, 1, 1});
  const auto c = grid_samples([](std::span<const double> x) { return std::cos(kTwoPi * x[0]); }, 4, 1);
  CHECK(c[0] == doctest::Approx(1.0));
  CHECK(std::abs(c[1]) < 1e-15);
  CHECK(c[2] == doctest::Approx(-1.0));
  CHECK(std::abs(c[3]) < 1e-15);

  const auto fm = build_feature_map(2, 1);
  const TrigPoly tp(fm, Vec::Random(5));
  const auto s = grid_samples([&](std::span<const double> x) { return tp(x); }, 8, 1);
  for (int m = 0; m < 8; ++m) CHECK(s[m] == doctest::Approx(tp.eval_scalar(m / 8.0)).epsilon(1e-15));
}

TEST_CASE("dft_coeffs on constants and cosines") {
  const auto box = FrequencySet::full_box(2, 1);
  const std::vector<double> ones(16, 1.0);
  const auto c1 = dft_coeffs(ones, 16, box);
  for (std::size_t i = 0; i < box.size(); ++i)
    CHECK(std::abs(c1.vals[i] - (box[i][0] == 0 ? cplx(1.0) : cplx(0.0))) < 1e-14);

  const auto s = grid_samples([](std::span<const double> x) { return kSqrt2 * std::cos(kTwoPi * x[0]); }, 16, 1);
  const auto c2 = dft_coeffs(s, 16, box);
  for (std::size_t i = 0; i < box.size(); ++i) {
    const double expect = std::abs(box[i][0]) == 1 ? kSqrt2 / 2 : 0.0;
    CHECK(std::abs(c2.vals[i] - cplx(expect)) < 1e-14);
  }
}

TEST_CASE("dft_coeffs is exact on band-limited polynomials") {
  std::mt19937_64 rng(3);
  for (int d = 1; d <= 2; ++d) {
    const auto fm = build_feature_map(2, d);
    const std::size_t p = fm.num_freqs();
    for (int M : {16, 15, 6}) {
      for (int trial = 0; trial < 5; ++trial) {
        const TrigPoly tp(fm, Vec::Random(static_cast<Eigen::Index>(fm.output_dim())));
        const auto s = grid_samples([&](std::span<const double> x) { return tp(x); }, M, d);
        const auto box = FrequencySet::full_box(2, d);
        const auto c = dft_coeffs(s, M, box);
        CHECK(c.hermitian_error() < 1e-13);
        const auto half = FrequencySet::half_space(2, d);
        CHECK(std::abs(c.at(Freq(d, 0)) - cplx(tp.w[0])) < 1e-13);
        for (std::size_t j = 0; j < p; ++j) {
          Freq neg = half[j];
          for (auto& kj : neg) kj = -kj;
          CHECK(std::abs(c.at(half[j]) - oracle::trig_coeff(tp.w, p, j, false)) < 1e-13);
          CHECK(std::abs(c.at(neg) - oracle::trig_coeff(tp.w, p, j, true)) < 1e-13);
        }
      }
    }
  }
}

TEST_CASE("FFT and direct DFT agree and match the brute-force sum") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int d = 1; d <= 2; ++d) {
    const int M = d == 1 ? 64 : 16;
    std::vector<double> s(ipow(M, d));
    for (auto& v : s) v = u(rng);
    const auto box = FrequencySet::full_box(5, d);
    const auto a = dft_coeffs_fft(s, M, box);
    const auto b = dft_coeffs_direct(s, M, box);
    CHECK((a.vals - b.vals).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(a.hermitian_error() < 1e-13);
    for (std::size_t i = 0; i < box.size(); i += 7)
      CHECK(std::abs(a.vals[i] - oracle::brute_coeff(s, M, d, box[i])) < 1e-12);
  }
}

TEST_CASE("dft_coeffs rejects grids that alias the target band") {
  const std::vector<double> s(8, 0.0);
  CHECK_THROWS_AS(dft_coeffs(s, 8, FrequencySet::full_box(4, 1)), std::invalid_argument);
  CHECK_NOTHROW(dft_coeffs(s, 8, FrequencySet::full_box(3, 1)));
}

TEST_CASE("measurement CSV layout") {
  const auto fm = build_feature_map(1, 2);
  const TrigPoly tp(fm, Vec::LinSpaced(9, -1.0, 1.0));
  const Measurements m = tp.coefficients();
  std::stringstream ss;
  m.write_csv(ss);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "k1,k2,re,im");
  std::string first;
  std::getline(ss, first);
  CHECK(first.rfind("-1,-1,", 0) == 0);
  ss.seekg(0);
  const Measurements back = Measurements::read_csv(ss);
  CHECK(back.set == m.set);
  CHECK((back.vals - m.vals).cwiseAbs().maxCoeff() == 0.0);
}
