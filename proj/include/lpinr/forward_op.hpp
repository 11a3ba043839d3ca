#pragma once

#include <utility>
#include <vector>

#include "lpinr/model.hpp"

namespace lpinr {

enum class Backend { Grid, Analytic1d };

struct ForwardConfig {
  FrequencySet omega = FrequencySet::full_box(0, 1);
  Backend backend = Backend::Grid;
  int M = 4096;

  static ForwardConfig grid(int K, int d, int M);
  static ForwardConfig analytic(int K);

  /// Throws std::invalid_argument when the config cannot represent fm's units.
  void validate(const FeatureMap& fm) const;
};

/// Default oversampling grid per dimension: 4096 in 1-D, 512 in 2-D.
int default_grid_size(int d);

/// Precomputed grid backend for one (feature map, Omega, M) triple.
///
/// Grid functions are stored as (M^d x batch) row-major matrices, one column
/// per unit. Band-limited functions are stored by their coefficients in the
/// tensor-product real basis {1, sqrt2 cos(2 pi j x), sqrt2 sin(2 pi j x)},
/// which is orthonormal under the grid mean for M > 2K. Coefficients in this
/// basis have the same Euclidean norm and real inner products as the complex
/// Fourier coefficients they represent.
class GridOperator {
 public:
  GridOperator(const FeatureMap& fm, int K, int M);
  GridOperator(const FeatureMap& fm, const ForwardConfig& cfg);

  const FeatureMap& feature_map() const { return fm_; }
  int dim() const { return fm_.dim(); }
  int radius() const { return K_; }
  int grid() const { return M_; }
  Eigen::Index grid_size() const { return N_; }
  Eigen::Index band_size() const { return nK_; }
  const FrequencySet& omega() const { return omega_; }

  /// tau_i = w_i . gamma on the grid for each column of W (feature dim x batch).
  RowMat unit_values(const Mat& W) const;
  /// Grid mean of gamma_j times each grid column: (feature dim x batch).
  Mat project_features(const RowMat& G) const;

  /// Grid functions -> real band coefficients on Omega (band size x batch).
  RowMat analyze(const RowMat& G) const;
  /// Real band coefficients -> grid values.
  RowMat synthesize(const RowMat& C) const;

  /// Band coefficients of [w_i . gamma]_+ for every column.
  RowMat unit_spectra(const Mat& W) const;

  Measurements to_measurements(const Vec& band) const;
  Vec to_band(const Measurements& y) const;

  /// ||F_Omega [w . gamma]_+||_2
  double modified_eta(const Vec& w) const;

 private:
  FeatureMap fm_;
  int K_;
  int M_;
  FrequencySet omega_;
  Eigen::Index N_;
  Eigen::Index nK_;
  Mat basis0_;       // M x (2 K0 + 1)
  Mat basis0_t_;     // transpose / M
  Mat basisK_;       // M x (2 K + 1)
  Mat basisK_t_;     // transpose / M
  Mat features_;     // (2 K0 + 1)^d x D, gamma in the real band basis
  CMat to_complex_;  // (2K+1) x (2K+1) real band -> complex, per axis
};

/// Maximal open subintervals of [0, 1] on which tau > 0. A lobe that wraps
/// through x = 0 is returned as two pieces [0, b) and (a, 1].
struct PositiveIntervals {
  std::vector<std::pair<double, double>> intervals;
  /// Sample points where |tau| < 1e-13 without a sign change.
  std::vector<double> tangential;

  double measure() const;
};

PositiveIntervals find_positive_intervals(const TrigPoly& tp, int min_samples = 4096);

/// Fourier coefficients on Omega of x -> max(w . gamma(x), 0).
Measurements unit_coeffs(const Vec& w, const FeatureMap& fm, const ForwardConfig& cfg);
Measurements unit_coeffs_analytic(const Vec& w, const FeatureMap& fm, const FrequencySet& omega);

/// F_Omega f_theta = sum_i a_i unit_coeffs(w_i).
Measurements inr_coeffs(const InrParams& params, const ForwardConfig& cfg);

/// sum_{k in Omega} y_k e^{2 pi i k.x} on the M^d grid. Rejects non-Hermitian y.
std::vector<double> zero_fill_synthesis(const Measurements& y, int M);

}  // namespace lpinr
