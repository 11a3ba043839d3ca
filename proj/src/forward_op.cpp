#include "lpinr/forward_op.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lpinr {

ForwardConfig ForwardConfig::grid(int K, int d, int M) {
  return {FrequencySet::full_box(K, d), Backend::Grid, M};
}

ForwardConfig ForwardConfig::analytic(int K) {
  return {FrequencySet::full_box(K, 1), Backend::Analytic1d, 0};
}

void ForwardConfig::validate(const FeatureMap& fm) const {
  if (omega.kind() != SetKind::FullBox) throw std::invalid_argument("Omega must be a full box");
  if (omega.dim() != fm.dim()) throw std::invalid_argument("Omega and feature map dimensions differ");
  if (backend == Backend::Analytic1d) {
    if (fm.dim() != 1) throw std::invalid_argument("analytic backend supports d = 1 only");
    return;
  }
  if (M <= 2 * omega.radius() || M <= 2 * fm.max_freq())
    throw std::invalid_argument("grid size M=" + std::to_string(M) + " must exceed 2K=" +
                                std::to_string(2 * omega.radius()) + " and 2K0=" + std::to_string(2 * fm.max_freq()));
}

int default_grid_size(int d) { return d == 1 ? 4096 : 512; }

namespace {

// Real trig basis of degree K sampled at m / M.
Mat real_basis(int K, int M) {
  Mat B(M, 2 * K + 1);
  for (int m = 0; m < M; ++m) {
    B(m, 0) = 1.0;
    for (int j = 1; j <= K; ++j) {
      const long r = (static_cast<long>(j) * m) % M;
      const double ang = kTwoPi * static_cast<double>(r) / M;
      B(m, 2 * j - 1) = kSqrt2 * std::cos(ang);
      B(m, 2 * j) = kSqrt2 * std::sin(ang);
    }
  }
  return B;
}

// Per-axis unitary map from real basis coefficients to complex coefficients
// ordered k = -K..K.
CMat real_to_complex(int K) {
  CMat U = CMat::Zero(2 * K + 1, 2 * K + 1);
  const double s = 1.0 / kSqrt2;
  U(K, 0) = 1.0;
  for (int j = 1; j <= K; ++j) {
    U(K + j, 2 * j - 1) = s;
    U(K - j, 2 * j - 1) = s;
    U(K + j, 2 * j) = cplx(0.0, -s);
    U(K - j, 2 * j) = cplx(0.0, s);
  }
  return U;
}

Vec complex_to_band(const CMat& U, const CVec& c, int d) {
  RowMatrix<cplx> X(c.size(), 1);
  X.col(0) = c;
  const CMat Uh = U.adjoint();
  return apply_separable<cplx>(Uh, X, d).col(0).real();
}

}  // namespace

GridOperator::GridOperator(const FeatureMap& fm, int K, int M) : GridOperator(fm, ForwardConfig::grid(K, fm.dim(), M)) {}

GridOperator::GridOperator(const FeatureMap& fm, const ForwardConfig& cfg)
    : fm_(fm), K_(cfg.omega.radius()), M_(cfg.M), omega_(cfg.omega) {
  if (cfg.backend != Backend::Grid) throw std::invalid_argument("GridOperator needs a grid backend config");
  cfg.validate(fm);
  const int d = fm.dim();
  const int K0 = fm.max_freq();
  N_ = static_cast<Eigen::Index>(ipow(M_, d));
  nK_ = static_cast<Eigen::Index>(ipow(2 * K_ + 1, d));
  basis0_ = real_basis(K0, M_);
  basis0_t_ = basis0_.transpose() / static_cast<double>(M_);
  basisK_ = real_basis(K_, M_);
  basisK_t_ = basisK_.transpose() / static_cast<double>(M_);
  to_complex_ = real_to_complex(K_);

  const CMat U0 = real_to_complex(K0);
  const auto D = static_cast<Eigen::Index>(fm.output_dim());
  features_.resize(static_cast<Eigen::Index>(ipow(2 * K0 + 1, d)), D);
  for (Eigen::Index j = 0; j < D; ++j) {
    Vec e = Vec::Zero(D);
    e[j] = 1.0;
    features_.col(j) = complex_to_band(U0, TrigPoly(fm, e).coefficients().vals, d);
  }
}

RowMat GridOperator::unit_values(const Mat& W) const {
  const RowMat band = features_ * W;
  return apply_separable<double>(basis0_, band, dim());
}

Mat GridOperator::project_features(const RowMat& G) const {
  const RowMat band = apply_separable<double>(basis0_t_, G, dim());
  return features_.transpose() * band;
}

RowMat GridOperator::analyze(const RowMat& G) const { return apply_separable<double>(basisK_t_, G, dim()); }

RowMat GridOperator::synthesize(const RowMat& C) const { return apply_separable<double>(basisK_, C, dim()); }

RowMat GridOperator::unit_spectra(const Mat& W) const {
  RowMat tau = unit_values(W);
  tau = tau.cwiseMax(0.0);
  return analyze(tau);
}

Measurements GridOperator::to_measurements(const Vec& band) const {
  RowMatrix<cplx> X(band.size(), 1);
  X.col(0) = band.cast<cplx>();
  return {omega_, apply_separable<cplx>(to_complex_, X, dim()).col(0)};
}

Vec GridOperator::to_band(const Measurements& y) const {
  if (!(y.set == omega_)) throw std::invalid_argument("measurements are not on this operator's Omega");
  return complex_to_band(to_complex_, y.vals, dim());
}

double GridOperator::modified_eta(const Vec& w) const {
  Mat W = w;
  return unit_spectra(W).col(0).norm();
}

double PositiveIntervals::measure() const {
  double s = 0.0;
  for (const auto& [lo, hi] : intervals) s += hi - lo;
  return s;
}

PositiveIntervals find_positive_intervals(const TrigPoly& tp, int min_samples) {
  if (tp.fm.dim() != 1) throw std::invalid_argument("find_positive_intervals: d must be 1");
  const int n = std::max({min_samples, 4096, 64 * tp.fm.max_freq()});
  std::vector<double> vals(n);
  for (int i = 0; i < n; ++i) vals[i] = tp.eval_scalar(static_cast<double>(i) / n);

  PositiveIntervals out;
  for (int i = 0; i < n; ++i) {
    const double prev = vals[(i + n - 1) % n];
    const double next = vals[(i + 1) % n];
    if (std::abs(vals[i]) < 1e-13 && (prev > 0) == (next > 0)) out.tangential.push_back(static_cast<double>(i) / n);
  }

  // Sign changes of the indicator tau > 0, located by bisection.
  struct Crossing {
    double x;
    bool rising;
  };
  std::vector<Crossing> cross;
  for (int i = 0; i < n; ++i) {
    const bool p0 = vals[i] > 0;
    const bool p1 = vals[(i + 1) % n] > 0;
    if (p0 == p1) continue;
    double lo = static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((tp.eval_scalar(mid) > 0) == p0)
        lo = mid;
      else
        hi = mid;
    }
    if (hi - lo > 1e-14) throw std::runtime_error("find_positive_intervals: bisection did not bracket a root");
    double x = 0.5 * (lo + hi);
    if (x >= 1.0) x -= 1.0;
    cross.push_back({x, !p0});
  }

  if (cross.empty()) {
    if (vals[0] > 0) out.intervals.emplace_back(0.0, 1.0);
    return out;
  }
  std::sort(cross.begin(), cross.end(), [](const Crossing& l, const Crossing& r) { return l.x < r.x; });
  // Walk the circle: each rising crossing opens an interval closed by the next falling one.
  const std::size_t c = cross.size();
  for (std::size_t i = 0; i < c; ++i) {
    if (!cross[i].rising) continue;
    const double lo = cross[i].x;
    const double hi = cross[(i + 1) % c].x;
    if (hi > lo) {
      out.intervals.emplace_back(lo, hi);
    } else {
      out.intervals.emplace_back(lo, 1.0);
      if (hi > 0.0) out.intervals.emplace_back(0.0, hi);
    }
  }
  std::sort(out.intervals.begin(), out.intervals.end());
  return out;
}

Measurements unit_coeffs_analytic(const Vec& w, const FeatureMap& fm, const FrequencySet& omega) {
  if (fm.dim() != 1 || omega.dim() != 1) throw std::invalid_argument("analytic backend supports d = 1 only");
  const TrigPoly tp(fm, w);
  const PositiveIntervals pos = find_positive_intervals(tp);
  const Measurements c = tp.coefficients();
  const int K0 = fm.max_freq();
  const int K = omega.radius();
  Measurements out = Measurements::zeros(omega);
  for (int k = -K; k <= K; ++k) {
    cplx acc = 0.0;
    for (int j = -K0; j <= K0; ++j) {
      const cplx cj = c.vals[j + K0];
      if (cj == 0.0) continue;
      const int nfreq = j - k;
      for (const auto& [lo, hi] : pos.intervals) {
        if (nfreq == 0) {
          acc += cj * (hi - lo);
        } else {
          const double om = kTwoPi * nfreq;
          const cplx e_hi(std::cos(om * hi), std::sin(om * hi));
          const cplx e_lo(std::cos(om * lo), std::sin(om * lo));
          acc += cj * (e_hi - e_lo) / cplx(0.0, om);
        }
      }
    }
    out.vals[k + K] = acc;
  }
  return out;
}

Measurements unit_coeffs(const Vec& w, const FeatureMap& fm, const ForwardConfig& cfg) {
  cfg.validate(fm);
  if (cfg.backend == Backend::Analytic1d) return unit_coeffs_analytic(w, fm, cfg.omega);
  const GridOperator op(fm, cfg);
  Mat W = w;
  return op.to_measurements(op.unit_spectra(W).col(0));
}

Measurements inr_coeffs(const InrParams& params, const ForwardConfig& cfg) {
  cfg.validate(params.fm);
  if (cfg.backend == Backend::Analytic1d) {
    Measurements out = Measurements::zeros(cfg.omega);
    for (int i = 0; i < params.width(); ++i) {
      if (params.a[i] == 0.0) continue;
      out.vals += params.a[i] * unit_coeffs_analytic(params.w.col(i), params.fm, cfg.omega).vals;
    }
    return out;
  }
  const GridOperator op(params.fm, cfg);
  const RowMat spectra = op.unit_spectra(params.w);
  return op.to_measurements(spectra * params.a);
}

std::vector<double> zero_fill_synthesis(const Measurements& y, int M) {
  const int K = y.set.radius();
  const int d = y.set.dim();
  if (M <= 2 * K) throw std::invalid_argument("zero-fill grid must exceed 2K");
  const double scale = std::max(1.0, y.vals.cwiseAbs().maxCoeff());
  if (y.hermitian_error() > 1e-10 * scale) throw std::invalid_argument("zero_fill_synthesis: input is not Hermitian");
  CMat S(M, 2 * K + 1);
  for (int m = 0; m < M; ++m)
    for (int k = -K; k <= K; ++k) {
      const long r = ((static_cast<long>(k) * m) % M + M) % M;
      const double ang = kTwoPi * static_cast<double>(r) / M;
      S(m, k + K) = cplx(std::cos(ang), std::sin(ang));
    }
  RowMatrix<cplx> X(y.vals.size(), 1);
  X.col(0) = y.vals;
  const RowMatrix<cplx> img = apply_separable<cplx>(S, X, d);
  std::vector<double> out(static_cast<std::size_t>(img.rows()));
  for (Eigen::Index i = 0; i < img.rows(); ++i) {
    if (std::abs(img(i, 0).imag()) > 1e-10 * scale * static_cast<double>(y.vals.size()))
      throw std::runtime_error("zero_fill_synthesis: imaginary residue too large");
    out[static_cast<std::size_t>(i)] = img(i, 0).real();
  }
  return out;
}

}  // namespace lpinr
