#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>

#include "lpinr/spectral.hpp"

namespace lpinr {

/// Positively homogeneous weight on hidden-unit input weights.
using Weighting = std::function<double(const Vec&)>;

/// Width-W shallow INR f(x) = sum_i a_i max(w_i . gamma(x), 0).
///
/// Unit i is the pair (a[i], w.col(i)); w has feature-dimension rows.
struct InrParams {
  FeatureMap fm;
  Vec a;
  Mat w;

  InrParams() = default;
  InrParams(FeatureMap f, Vec outer, Mat inner);
  static InrParams zeros(const FeatureMap& fm, int width);

  int width() const { return static_cast<int>(a.size()); }
  std::size_t feature_dim() const { return fm.output_dim(); }

  double operator()(std::span<const double> x) const;
  double eval_scalar(double x) const { return (*this)(std::span<const double>(&x, 1)); }
  Field as_field() const;

  /// True when every unit with nonzero outer weight has unit-norm w.
  bool is_normalized(double tol = 1e-12) const;

  void write(std::ostream& os) const;
  static InrParams read(std::istream& is);
};

double eval_inr(const InrParams& params, std::span<const double> x);

/// (a, w) -> (a |w|, w / |w|). Units with w = 0 become (0, 0).
InrParams normalize_to_sphere(const InrParams& params);

/// Per-unit rescaling so that |a_i'| = eta(w_i') while f is unchanged. The
/// weight-decay value of the result equals sum_i |a_i| eta(w_i) of the input.
/// Throws std::domain_error for a unit with a != 0 and eta(w) = 0.
InrParams rebalance(const InrParams& params, const Weighting& eta);

/// 1/2 sum_i (a_i^2 + eta(w_i)^2).
double weight_decay(const InrParams& params, const Weighting& eta);

/// sum_i |a_i| eta(w_i).
double weighted_l1(const InrParams& params, const Weighting& eta);

/// True when w . gamma(x) <= 0 on a fine grid, i.e. the rectified unit vanishes.
bool unit_vanishes(const FeatureMap& fm, const Vec& w);

/// Random teacher: w uniform on the sphere (redrawn while eta(w) <= 1e-8 or
/// the unit vanishes), a = s u with s uniform on {-1, +1} and u uniform on
/// [0.5, 1.5]. Throws std::runtime_error after 1000 redraws of one unit.
InrParams random_teacher(int width, const FeatureMap& fm, std::uint64_t seed, const Weighting& eta);

/// Student start: w uniform on the sphere, a ~ Normal(0, sigma^2).
InrParams random_student(int width, const FeatureMap& fm, std::uint64_t seed, double sigma = 0.01);

Weighting euclidean_weighting();

}  // namespace lpinr
