#pragma once

// Finite-difference check of the penalized and augmented objectives, shared by
// the unit tests and the acceptance runner.

#include <memory>
#include <random>

#include "lpinr/training.hpp"
#include "oracles.hpp"

namespace lpinr::oracle {

struct GradCheck {
  double rel_err = 0.0;  // ||g - fd||_inf / ||fd||_inf over checked coordinates
  int checked_units = 0;
  int skipped_units = 0;
};

/// True when some grid sample of w . gamma lies within tol of zero.
inline bool kink_adjacent(const GridOperator& op, const Vec& w, double tol) {
  Mat W(w.size(), 1);
  W.col(0) = w;
  return op.unit_values(W).cwiseAbs().minCoeff() < tol;
}

/// One random (theta, y) instance; augmented selects the AL data term.
inline GradCheck check_gradient(int d, RegKind kind, bool augmented, std::uint64_t seed, double h = 1e-5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const int K0 = d == 1 ? 2 : 1;
  const int K = 3 * K0;
  const int M = d == 1 ? 64 : 16;
  const FeatureMap fm(K0, d);
  const auto op = std::make_shared<const GridOperator>(fm, K, M);
  const int width = 4;
  const auto D = static_cast<Eigen::Index>(fm.output_dim());

  InrParams theta = InrParams::zeros(fm, width);
  for (int i = 0; i < width; ++i) {
    theta.a[i] = nd(rng);
    theta.w.col(i) = random_unit(rng, D) * (0.5 + std::abs(nd(rng)));
  }
  Vec yb(op->band_size());
  for (Eigen::Index i = 0; i < yb.size(); ++i) yb[i] = 0.3 * nd(rng);
  const Measurements y = op->to_measurements(yb);

  const InrObjective obj(op, y, kind);
  DataTerm data = least_squares_term();
  if (augmented) {
    Vec nu(op->band_size());
    for (Eigen::Index i = 0; i < nu.size(); ++i) nu[i] = nd(rng);
    data = augmented_term(nu, 2.5);
  }
  const double lambda = augmented ? 1.0 : 0.1;

  Gradient g;
  obj.evaluate(theta, data, lambda, &g);
  const Vec flat = pack(g);
  const Vec t0 = pack(theta);
  auto f = [&](const Vec& t) { return obj.evaluate(unpack(t, fm, width), data, lambda, nullptr).value; };

  GradCheck out;
  double num = 0.0, den = 0.0;
  // A step of h in one weight moves tau by at most sqrt2 h, so any grid
  // sample closer to zero than that may cross the kink during differencing.
  const double margin = std::max(1e-7, 2.0 * h);
  for (int i = 0; i < width; ++i) {
    if (kink_adjacent(*op, theta.w.col(i), margin)) {
      ++out.skipped_units;
      continue;
    }
    ++out.checked_units;
    std::vector<Eigen::Index> idx{i};
    for (Eigen::Index j = 0; j < D; ++j) idx.push_back(width + i * D + j);
    for (Eigen::Index c : idx) {
      const double fd = central_difference(f, t0, c, h);
      num = std::max(num, std::abs(flat[c] - fd));
      den = std::max(den, std::abs(fd));
    }
  }
  out.rel_err = den > 0 ? num / den : num;
  return out;
}

}  // namespace lpinr::oracle
