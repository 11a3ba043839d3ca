#include "lpinr/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace lpinr {

AtomicMeasure::AtomicMeasure(FeatureMap f, Vec amps, Mat dirs) : fm(std::move(f)), a(std::move(amps)), w(std::move(dirs)) {
  if (w.cols() != a.size()) throw std::invalid_argument("atom amplitude/direction counts differ");
  if (a.size() > 0 && static_cast<std::size_t>(w.rows()) != fm.output_dim())
    throw std::invalid_argument("atom direction length must equal feature dimension");
}

AtomicMeasure AtomicMeasure::from_params(const InrParams& p) {
  const InrParams n = normalize_to_sphere(p);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n.a.size(); ++i)
    if (n.a[i] != 0.0) keep.push_back(i);
  Vec a(static_cast<Eigen::Index>(keep.size()));
  Mat w(n.w.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    a[static_cast<Eigen::Index>(j)] = n.a[keep[j]];
    w.col(static_cast<Eigen::Index>(j)) = n.w.col(keep[j]);
  }
  return {n.fm, a, w};
}

void AtomicMeasure::validate(const Weighting& eta, double tol) const {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(w.col(i).norm() - 1.0) > tol) throw std::invalid_argument("atom " + std::to_string(i) + " is not unit norm");
    if (!(eta(w.col(i)) > 0.0)) throw std::invalid_argument("atom " + std::to_string(i) + " has zero weight eta");
  }
}

double tv_norm(const AtomicMeasure& mu, const Weighting& eta) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < mu.a.size(); ++i) s += std::abs(mu.a[i]) * eta(mu.w.col(i));
  return s;
}

Measurements apply_K(const AtomicMeasure& mu, const ForwardConfig& cfg) {
  if (mu.empty()) return Measurements::zeros(cfg.omega);
  return inr_coeffs(InrParams(mu.fm, mu.a, mu.w), cfg);
}

void FeasibilityReport::write_csv(std::ostream& os) const {
  os << "sample_index,ratio,refined";
  const Eigen::Index D = argmax.size();
  for (Eigen::Index j = 0; j < D; ++j) os << ",w" << j;
  os << '\n' << std::setprecision(17);
  for (const auto& e : top) {
    os << e.index << ',' << e.ratio << ',' << (e.refined ? 1 : 0);
    for (Eigen::Index j = 0; j < e.w.size(); ++j) os << ',' << e.w[j];
    os << '\n';
  }
}

void FeasibilityReport::write_summary(std::ostream& os) const {
  os << std::setprecision(17);
  os << "n_samples=" << n_samples << '\n';
  os << "n_skipped=" << n_skipped << '\n';
  os << "max_ratio=" << max_ratio << '\n';
  os << "feasible=" << (feasible() ? "true" : "false") << '\n';
  os << "near_equality_count=" << near_equality.size() << '\n';
  os << "argmax=";
  for (Eigen::Index j = 0; j < argmax.size(); ++j) os << (j ? "," : "") << argmax[j];
  os << '\n';
}

DualCertificate certificate_width1_modified(const Vec& w0, int sign, const GridOperator& op, bool require_sampling) {
  const FeatureMap& fm = op.feature_map();
  if (require_sampling && op.radius() < 3 * fm.max_freq())
    throw std::invalid_argument("width-1 certificate needs K >= 3 K0 (K=" + std::to_string(op.radius()) +
                                ", K0=" + std::to_string(fm.max_freq()) + ")");
  if (sign != 1 && sign != -1) throw std::invalid_argument("certificate sign must be +1 or -1");
  Mat W = w0;
  const Vec v = op.unit_spectra(W).col(0);
  const double eta = v.norm();
  if (!(eta > 0.0)) throw std::invalid_argument("eta(w0) = 0: the unit vanishes");
  DualCertificate cert;
  cert.q = op.to_measurements(static_cast<double>(sign) * v / eta);
  cert.reg = RegKind::ModifiedWd;
  return cert;
}

namespace {

struct RatioEval {
  double ratio = 0.0;
  double numerator = 0.0;  // signed <q, v(w)>
  double eta = 0.0;
};

// Ratios for a batch of directions (columns of W).
std::vector<RatioEval> batch_ratios(const Vec& qband, RegKind reg, const GridOperator& op, const Mat& W) {
  const RowMat V = op.unit_spectra(W);
  const Vec num = V.transpose() * qband;
  std::vector<RatioEval> out(static_cast<std::size_t>(W.cols()));
  for (Eigen::Index i = 0; i < W.cols(); ++i) {
    const double eta = reg == RegKind::ModifiedWd ? V.col(i).norm() : W.col(i).norm();
    out[static_cast<std::size_t>(i)] = {eta < 1e-10 ? -1.0 : std::abs(num[i]) / eta, num[i], eta};
  }
  return out;
}

// Gradient of |<q, v(w)>| / eta(w) with respect to w.
Vec ratio_gradient(const Vec& qband, RegKind reg, const GridOperator& op, const Vec& w, const RatioEval& r) {
  Mat W = w;
  const RowMat tau = op.unit_values(W);
  const auto active = (tau.array() > 0.0);
  RowMat qb = qband;
  RowMat back = op.synthesize(qb);
  back = active.select(back, 0.0);
  const Vec dnum = op.project_features(back).col(0);
  Vec deta;
  if (reg == RegKind::ModifiedWd) {
    RowMat relu = tau.cwiseMax(0.0);
    RowMat v = op.analyze(relu);
    RowMat vb = op.synthesize(v);
    vb = active.select(vb, 0.0);
    deta = op.project_features(vb).col(0) / r.eta;
  } else {
    deta = w / w.norm();
  }
  const double s = r.numerator >= 0 ? 1.0 : -1.0;
  return s * dnum / r.eta - std::abs(r.numerator) * deta / (r.eta * r.eta);
}

}  // namespace

FeasibilityReport verify_certificate(const Measurements& q, RegKind reg, const GridOperator& op,
                                     const VerifyOptions& opts) {
  const Vec qband = op.to_band(q);
  const auto D = static_cast<Eigen::Index>(op.feature_map().output_dim());
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  FeasibilityReport rep;
  rep.n_samples = opts.n_samples;
  rep.argmax = Vec::Zero(D);
  const std::size_t keep = static_cast<std::size_t>(std::max(opts.refine_count, 0));
  std::vector<FeasibilityReport::Entry> best;  // kept sorted descending by ratio
  auto offer = [&](FeasibilityReport::Entry e) {
    if (e.ratio > 1.0 - opts.near_tol) rep.near_equality.push_back(e);
    if (keep == 0) return;
    if (best.size() == keep && e.ratio <= best.back().ratio) return;
    auto pos = std::upper_bound(best.begin(), best.end(), e.ratio,
                                [](double r, const FeasibilityReport::Entry& x) { return r > x.ratio; });
    best.insert(pos, std::move(e));
    if (best.size() > keep) best.pop_back();
  };

  double max_ratio = 0.0;
  Vec argmax = Vec::Zero(D);
  for (std::size_t start = 0; start < opts.n_samples; start += opts.batch) {
    const std::size_t n = std::min(opts.batch, opts.n_samples - start);
    Mat W(D, static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < W.cols(); ++i) {
      for (Eigen::Index j = 0; j < D; ++j) W(j, i) = normal(rng);
      W.col(i).normalize();
    }
    const auto ratios = batch_ratios(qband, reg, op, W);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = ratios[i];
      if (r.ratio < 0) {
        ++rep.n_skipped;
        continue;
      }
      const Eigen::Index col = static_cast<Eigen::Index>(i);
      if (r.ratio > max_ratio) {
        max_ratio = r.ratio;
        argmax = W.col(col);
      }
      offer({static_cast<long>(start + i), r.ratio, W.col(col), false});
    }
  }

  // Projected gradient ascent on the sphere from the best samples.
  std::vector<FeasibilityReport::Entry> refined;
  for (const auto& seed : best) {
    Vec w = seed.w;
    Mat W = w;
    RatioEval cur = batch_ratios(qband, reg, op, W)[0];
    Vec best_w = w;
    double best_ratio = cur.ratio;
    for (int step = 0; step < opts.refine_steps && cur.ratio >= 0; ++step) {
      Vec g = ratio_gradient(qband, reg, op, w, cur);
      g -= g.dot(w) * w;
      if (g.norm() == 0.0) break;
      w = (w + opts.step * g).normalized();
      W = w;
      cur = batch_ratios(qband, reg, op, W)[0];
      if (cur.ratio > best_ratio) {
        best_ratio = cur.ratio;
        best_w = w;
      }
    }
    refined.push_back({seed.index, best_ratio, best_w, true});
  }
  rep.top = best;
  for (auto& e : refined) {
    if (e.ratio > max_ratio) {
      max_ratio = e.ratio;
      argmax = e.w;
    }
    if (e.ratio > 1.0 - opts.near_tol) rep.near_equality.push_back(e);
    rep.top.push_back(std::move(e));
  }
  rep.max_ratio = max_ratio;
  rep.argmax = argmax;
  return rep;
}

double duality_gap_estimate(const AtomicMeasure& mu, const DualCertificate& cert, const Measurements& y,
                            const Regularizer& reg, const ForwardConfig& cfg) {
  const Measurements Kmu = apply_K(mu, cfg);
  const double scale = std::max(1.0, y.norm());
  const double violation = (Kmu.vals - y.vals).norm();
  if (violation > 1e-9 * scale)
    throw std::invalid_argument("primal infeasible: ||K mu - y|| = " + std::to_string(violation));
  if (!cert.report.feasible())
    throw std::invalid_argument("dual infeasible: max ratio " + std::to_string(cert.report.max_ratio) + " exceeds 1");
  return tv_norm(mu, reg.weighting()) - real_inner(cert.q, y);
}

}  // namespace lpinr
