#include <doctest.h>

#include <sstream>

#include "gradcheck.hpp"
#include "lpinr/training.hpp"

using namespace lpinr;

TEST_CASE("gradients match central differences") {
  for (int d = 1; d <= 2; ++d)
    for (RegKind kind : {RegKind::StandardWd, RegKind::ModifiedWd})
      for (bool augmented : {false, true})
        for (std::uint64_t s = 0; s < 3; ++s) {
          CAPTURE(d);
          CAPTURE(to_string(kind));
          CAPTURE(augmented);
          const auto r = oracle::check_gradient(d, kind, augmented, 1000 * d + 10 * s + augmented);
          CHECK(r.checked_units > 0);
          CHECK(r.rel_err < 1e-5);
        }
}

TEST_CASE("objective pieces") {
  const FeatureMap fm(2, 1);
  const auto cfg = ForwardConfig::grid(6, 1, 256);
  const auto op = std::make_shared<const GridOperator>(fm, cfg);
  const InrParams t = random_teacher(2, fm, 5, euclidean_weighting());
  const Measurements y = inr_coeffs(t, cfg);

  const InrObjective ls(op, y, RegKind::StandardWd);
  const auto e = ls.evaluate(t, least_squares_term(), 0.5, nullptr);
  CHECK(e.data < 1e-28);
  CHECK(e.reg == doctest::Approx(reg_value(t, Regularizer::standard())));
  CHECK(e.value == doctest::Approx(0.5 * e.reg));
  CHECK(e.image.size() == 256);
  for (int m = 0; m < 256; m += 17) CHECK(e.image[m] == doctest::Approx(t.eval_scalar(m / 256.0)).epsilon(1e-12));

  const InrObjective mod(op, y, RegKind::ModifiedWd);
  const auto em = mod.evaluate(t, least_squares_term(), 1.0, nullptr);
  CHECK(em.reg == doctest::Approx(reg_value(t, Regularizer::modified(op))));

  InrParams off = t;
  off.a[0] += 0.1;
  const auto eo = ls.evaluate(off, least_squares_term(), 0.0, nullptr);
  const Measurements f = inr_coeffs(off, cfg);
  CHECK(eo.data == doctest::Approx(0.5 * (f.vals - y.vals).squaredNorm()).epsilon(1e-12));
  CHECK(eo.residual.norm() == doctest::Approx((f.vals - y.vals).norm()).epsilon(1e-12));

  const auto [v, g] = loss_and_grad(off, y, Regularizer::standard(), 0.0, cfg);
  CHECK(v == doctest::Approx(eo.value));
  CHECK(g.a.size() == 2);
}

TEST_CASE("pack and unpack") {
  const FeatureMap fm(1, 2);
  InrParams p = InrParams::zeros(fm, 3);
  p.a << 1, 2, 3;
  p.w.setRandom();
  const Vec t = pack(p);
  CHECK(t.size() == 3 + 9 * 3);
  CHECK(t[3] == p.w(0, 0));
  CHECK(t[4] == p.w(1, 0));
  const InrParams q = unpack(t, fm, 3);
  CHECK(q.a == p.a);
  CHECK(q.w == p.w);
  CHECK_THROWS(unpack(t.head(5), fm, 3));
}

TEST_CASE("Adam minimizes a convex quadratic") {
  const Vec target = Vec::LinSpaced(4, -1.5, 1.5);
  TrainConfig cfg;
  cfg.inner_iters = 4000;
  cfg.lr = 1e-2;
  const StepObjective f = [&](const Vec& x, Vec& g) {
    g = x - target;
    return StepResult{0.5 * g.squaredNorm(), std::nullopt};
  };
  const FitReport r = adam_fit(Vec::Zero(4), f, cfg);
  CHECK((r.theta - target).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(r.iterations == 4000);
  CHECK(r.loss.size() == 4000);
  CHECK(r.loss.back() < r.loss.front());

  // first step has magnitude lr in every coordinate (bias correction)
  TrainConfig one = cfg;
  one.inner_iters = 1;
  const FitReport r1 = adam_fit(Vec::Zero(4), f, one);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(std::abs(r1.theta[i]) == doctest::Approx(1e-2).epsilon(1e-6));

  const StepObjective bad = [](const Vec&, Vec& g) {
    g = Vec::Zero(1);
    return StepResult{std::nan(""), std::nullopt};
  };
  CHECK_THROWS_AS(adam_fit(Vec::Zero(1), bad, cfg), std::runtime_error);
}

TEST_CASE("learning-rate schedule") {
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.lr_schedule = {{100, 5e-4}, {200, 1e-4}};
  CHECK(cfg.lr_at(0) == 1e-3);
  CHECK(cfg.lr_at(99) == 1e-3);
  CHECK(cfg.lr_at(100) == 5e-4);
  CHECK(cfg.lr_at(500) == 1e-4);
}

TEST_CASE("config parsing") {
  std::istringstream is("# comment\ninner_iters = 300\nlr=0.01\nal.max_outer=4\nal.rho0 = 2\nseed=7\n");
  const TrainConfig c = TrainConfig::parse(is);
  CHECK(c.inner_iters == 300);
  CHECK(c.lr == 0.01);
  CHECK(c.al.max_outer == 4);
  CHECK(c.al.rho0 == 2.0);
  CHECK(c.seed == 7);

  std::istringstream unknown("inner_iter=3\n");
  try {
    TrainConfig::parse(unknown);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("inner_iter") != std::string::npos);
  }

  std::ostringstream os;
  c.write(os);
  std::istringstream back(os.str());
  const TrainConfig c2 = TrainConfig::parse(back);
  CHECK(c2.inner_iters == c.inner_iters);
  CHECK(c2.lr == c.lr);
  CHECK(c2.al.rho_growth == c.al.rho_growth);

  TrainConfig neg;
  neg.lr = -1;
  CHECK_THROWS(neg.validate());
}

TEST_CASE("AL drives the constraint down and is deterministic") {
  const FeatureMap fm(2, 1);
  const auto cfg = ForwardConfig::grid(6, 1, 256);
  const InrParams teacher = random_teacher(1, fm, 3, euclidean_weighting());
  const Measurements y = inr_coeffs(teacher, cfg);
  const InrParams s0 = random_student(10, fm, 4);
  TrainConfig tc;
  tc.inner_iters = 300;
  tc.al.max_outer = 4;
  const FitReport a = al_solve(s0, y, Regularizer::standard(), cfg, tc);
  const FitReport b = al_solve(s0, y, Regularizer::standard(), cfg, tc);
  CHECK(a.theta == b.theta);
  CHECK(a.loss == b.loss);
  CHECK(a.outer_iterations == 4);
  CHECK(a.constraint.size() == 4);
  CHECK(a.constraint.back() < 0.5 * y.norm());
  std::ostringstream os;
  a.write_trace_csv(os);
  CHECK(os.str().rfind("iter,loss,constraint_norm,mse\n", 0) == 0);
}

TEST_CASE("AL stops at once from a feasible zero-regularizer start") {
  const FeatureMap fm(2, 1);
  const auto cfg = ForwardConfig::grid(6, 1, 256);
  const Measurements y = Measurements::zeros(cfg.omega);
  const InrParams zero = InrParams::zeros(fm, 3);
  TrainConfig tc;
  const FitReport r = al_solve(zero, y, Regularizer::standard(), cfg, tc);
  CHECK(r.iterations == 0);
  CHECK(r.params.a.isZero());
}

TEST_CASE("default penalized fit ends below its starting loss") {
  const FeatureMap fm(2, 1);
  const auto op = std::make_shared<const GridOperator>(fm, 6, 256);
  TrainConfig tc;
  tc.lambda = 1e-3;
  for (std::uint64_t s = 0; s < 10; ++s) {
    CAPTURE(s);
    const InrParams teacher = random_teacher(2, fm, 100 + s, euclidean_weighting());
    const Measurements y = op->to_measurements(op->unit_spectra(teacher.w) * teacher.a);
    for (RegKind kind : {RegKind::StandardWd, RegKind::ModifiedWd}) {
      const InrObjective obj(op, y, kind);
      const InrParams s0 = random_student(100, fm, 200 + s);
      const double before = obj.evaluate(s0, least_squares_term(), tc.lambda, nullptr).value;
      const FitReport r = fit_penalized(s0, obj, tc);
      CHECK(obj.evaluate(r.params, least_squares_term(), tc.lambda, nullptr).value <= before);
    }
  }
}
