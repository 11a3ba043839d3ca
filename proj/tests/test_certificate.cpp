#include <doctest.h>

#include <sstream>

#include "lpinr/certificate.hpp"
#include "oracles.hpp"

using namespace lpinr;

namespace {

struct Setup {
  FeatureMap fm{2, 1};
  ForwardConfig cfg = ForwardConfig::grid(6, 1, 1024);
  std::shared_ptr<const GridOperator> op = std::make_shared<const GridOperator>(fm, cfg);
};

}  // namespace

TEST_CASE("atomic measures") {
  Setup s;
  const Weighting eta = Regularizer::modified(s.op).weighting();
  const InrParams t = random_teacher(2, s.fm, 8, eta);
  const AtomicMeasure mu = AtomicMeasure::from_params(t);
  CHECK(mu.size() == 2);
  CHECK_NOTHROW(mu.validate(eta));
  CHECK(tv_norm(mu, eta) == doctest::Approx(weighted_l1(t, eta)));
  CHECK((apply_K(mu, s.cfg).vals - inr_coeffs(t, s.cfg).vals).cwiseAbs().maxCoeff() < 1e-14);

  const AtomicMeasure empty(s.fm, Vec(0), Mat(5, 0));
  CHECK(apply_K(empty, s.cfg).vals.isZero());
  CHECK(tv_norm(empty, eta) == 0.0);

  AtomicMeasure off = mu;
  off.w.col(0) *= 2.0;
  CHECK_THROWS_AS(off.validate(eta), std::invalid_argument);
}

TEST_CASE("width-1 certificate is dual feasible with zero gap") {
  Setup s;
  const Regularizer reg = Regularizer::modified(s.op);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const InrParams t = random_teacher(1, s.fm, 500 + seed, reg.weighting());
    const int sign = t.a[0] > 0 ? 1 : -1;
    DualCertificate cert = certificate_width1_modified(t.w.col(0), sign, *s.op);
    // equality at the teacher direction
    const Measurements v = unit_coeffs(t.w.col(0), s.fm, s.cfg);
    CHECK(sign * real_inner(cert.q, v) == doctest::Approx(reg.eta(t.w.col(0))).epsilon(1e-12));

    VerifyOptions opts;
    opts.n_samples = 5000;
    opts.refine_steps = 50;
    opts.seed = seed;
    cert.report = verify_certificate(cert.q, RegKind::ModifiedWd, *s.op, opts);
    CHECK(cert.report.n_samples == 5000);
    CHECK(cert.report.feasible());
    CHECK(cert.report.max_ratio > 0.99);

    const Measurements y = inr_coeffs(t, s.cfg);
    const double gap = duality_gap_estimate(AtomicMeasure::from_params(t), cert, y, reg, s.cfg);
    CHECK(std::abs(gap) <= 1e-8);

    Measurements wrong = y;
    wrong.vals *= 1.01;
    CHECK_THROWS_AS(duality_gap_estimate(AtomicMeasure::from_params(t), cert, wrong, reg, s.cfg),
                    std::invalid_argument);
  }
}

TEST_CASE("an inflated certificate is reported infeasible") {
  Setup s;
  const Regularizer reg = Regularizer::modified(s.op);
  const InrParams t = random_teacher(1, s.fm, 77, reg.weighting());
  DualCertificate cert = certificate_width1_modified(t.w.col(0), 1, *s.op);
  cert.q.vals *= 1.5;
  VerifyOptions opts;
  opts.n_samples = 2000;
  opts.refine_steps = 20;
  cert.report = verify_certificate(cert.q, RegKind::ModifiedWd, *s.op, opts);
  CHECK_FALSE(cert.report.feasible());
  CHECK(cert.report.max_ratio > 1.4);
  CHECK_FALSE(cert.report.top.empty());
  CHECK_THROWS_AS(duality_gap_estimate(AtomicMeasure::from_params(t), cert, inr_coeffs(t, s.cfg), reg, s.cfg),
                  std::invalid_argument);

  std::ostringstream csv, summary;
  cert.report.write_csv(csv);
  cert.report.write_summary(summary);
  CHECK(!csv.str().empty());
  CHECK(summary.str().find("max_ratio") != std::string::npos);
}

TEST_CASE("certificate construction needs K >= 3 K0") {
  const FeatureMap fm(2, 1);
  const GridOperator op(fm, 5, 256);
  const Vec w = Vec::Unit(5, 1);
  CHECK_THROWS_AS(certificate_width1_modified(w, 1, op), std::invalid_argument);
  const GridOperator ok(fm, 6, 256);
  CHECK_THROWS_AS(certificate_width1_modified(-Vec::Unit(5, 0), 1, ok), std::invalid_argument);
}

TEST_CASE("verification is deterministic per seed") {
  Setup s;
  const DualCertificate cert = certificate_width1_modified(Vec::Unit(5, 1), 1, *s.op);
  VerifyOptions opts;
  opts.n_samples = 1000;
  opts.refine_steps = 10;
  opts.seed = 4;
  const auto a = verify_certificate(cert.q, RegKind::ModifiedWd, *s.op, opts);
  const auto b = verify_certificate(cert.q, RegKind::ModifiedWd, *s.op, opts);
  CHECK(a.max_ratio == b.max_ratio);
  CHECK(a.argmax == b.argmax);
}
