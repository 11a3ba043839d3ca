#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lpinr/training.hpp"

namespace lpinr {

/// mu = sum_i a_i delta_{w_i} with every w_i on the unit sphere and eta(w_i) > 0.
struct AtomicMeasure {
  FeatureMap fm;
  Vec a;
  Mat w;

  AtomicMeasure() = default;
  AtomicMeasure(FeatureMap f, Vec amps, Mat dirs);
  static AtomicMeasure from_params(const InrParams& p);

  std::size_t size() const { return static_cast<std::size_t>(a.size()); }
  bool empty() const { return a.size() == 0; }
  /// Throws std::invalid_argument unless every atom lies in U_eta.
  void validate(const Weighting& eta, double tol = 1e-12) const;
};

/// sum_i |a_i| eta(w_i)
double tv_norm(const AtomicMeasure& mu, const Weighting& eta);

/// K_Omega mu = sum_i a_i F_Omega [w_i . gamma]_+
Measurements apply_K(const AtomicMeasure& mu, const ForwardConfig& cfg);

/// Sampled check of the semi-infinite constraint |<q, v(w)>| <= eta(w).
struct FeasibilityReport {
  struct Entry {
    long index = -1;  // sample index; refined entries keep their seed sample's index
    double ratio = 0.0;
    Vec w;
    bool refined = false;
  };

  double max_ratio = 0.0;
  Vec argmax;
  std::size_t n_samples = 0;
  std::size_t n_skipped = 0;
  std::vector<Entry> top;
  std::vector<Entry> near_equality;

  bool feasible(double slack = 1e-8) const { return max_ratio <= 1.0 + slack; }
  void write_csv(std::ostream& os) const;
  void write_summary(std::ostream& os) const;
};

struct DualCertificate {
  Measurements q;
  RegKind reg = RegKind::ModifiedWd;
  FeasibilityReport report;
};

/// q = sign v(w0) / ||v(w0)|| with v(w) = F_Omega [w . gamma]_+ on the operator's grid.
/// Requires eta(w0) > 0, and K >= 3 K0 unless require_sampling is false (the
/// vector is then only a candidate and may fail verification).
DualCertificate certificate_width1_modified(const Vec& w0, int sign, const GridOperator& op,
                                            bool require_sampling = true);

struct VerifyOptions {
  std::size_t n_samples = 100000;
  int refine_steps = 200;
  double step = 1e-2;
  int refine_count = 10;
  double near_tol = 1e-6;
  std::uint64_t seed = 0;
  std::size_t batch = 4096;
};

/// Samples directions uniformly on the sphere, computes |<q, v(w)>| / eta(w)
/// (skipping eta < 1e-10) and refines the largest ratios by projected gradient ascent.
FeasibilityReport verify_certificate(const Measurements& q, RegKind reg, const GridOperator& op,
                                     const VerifyOptions& opts = {});

/// tv_norm(mu) - Re<q, y>. Throws std::invalid_argument when K mu != y or the
/// report shows a violated dual constraint.
double duality_gap_estimate(const AtomicMeasure& mu, const DualCertificate& cert, const Measurements& y,
                            const Regularizer& reg, const ForwardConfig& cfg);

}  // namespace lpinr
