#include "lpinr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace lpinr {

Profile parse_profile(const std::string& s) {
  if (s == "desk") return Profile::Desk;
  if (s == "paper") return Profile::Paper;
  throw std::invalid_argument("unknown profile '" + s + "' (expected desk or paper)");
}

std::string to_string(Profile p) { return p == Profile::Desk ? "desk" : "paper"; }

std::uint64_t trial_seed(std::uint64_t master, int K, int W, int trial) {
  std::uint64_t s = mix_seed(master, static_cast<std::uint64_t>(K));
  s = mix_seed(s, static_cast<std::uint64_t>(W));
  return mix_seed(s, static_cast<std::uint64_t>(trial));
}

void parallel_for(int n, int workers, const std::function<void(int)>& job) {
  if (n <= 0) return;
  workers = std::clamp(workers, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex fail_mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(fail_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join_doubles(const std::vector<double>& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::vector<RegKind> parse_regs(const std::string& s) {
  std::vector<RegKind> out;
  for (const auto& part : split(s, ',')) out.push_back(parse_reg_kind(trim(part)));
  if (out.empty()) throw std::invalid_argument("empty regularizer list");
  return out;
}

std::string join_regs(const std::vector<RegKind>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + to_string(v[i]);
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Regularizer make_regularizer(RegKind kind, const std::shared_ptr<const GridOperator>& op) {
  return kind == RegKind::ModifiedWd ? Regularizer::modified(op) : Regularizer::standard();
}

// f_theta on the operator grid, computed the same way as during training.
Vec grid_image(const GridOperator& op, const InrParams& p) {
  return op.unit_values(p.w).cwiseMax(0.0) * p.a;
}

}  // namespace

// ---------------------------------------------------------------------------

RecoveryConfig RecoveryConfig::defaults(Profile p) {
  RecoveryConfig c;
  c.train.stop_mse = c.threshold;
  // A small rho lets the regularizer shrink the student to zero before the
  // data term engages; a growing rho then freezes the slow alignment of
  // near-parallel units. Fixed rho = 100 with a late lr drop avoids both.
  if (p == Profile::Desk) {
    c.Ks = {2, 4, 6, 8, 10, 12};
    c.Ws = {1, 2};
    c.trials = 5;
    c.grid = 1024;
    c.train.inner_iters = 2000;
    c.train.al.max_outer = 20;
    c.train.al.rho0 = 100.0;
    c.train.al.rho_growth = 1.0;
    c.train.lr_schedule = {{1500, 1e-4}};
  } else {
    for (int K = 2; K <= 30; K += 2) c.Ks.push_back(K);
    c.Ws = {1, 2, 3, 4, 5};
    c.trials = 10;
    c.grid = 4096;
    c.train.inner_iters = 5000;
    c.train.al.max_outer = 60;
    c.train.al.rho0 = 100.0;
    c.train.al.rho_growth = 1.0;
    c.train.lr_schedule = {{3750, 1e-4}};
  }
  return c;
}

void RecoveryConfig::apply(const KeyValueConfig& kv) {
  const std::string s = "exact_recovery.";
  d = kv.get_int(s + "d", d);
  K0 = kv.get_int(s + "K0", K0);
  Ks = kv.get_int_list(s + "K", Ks);
  Ws = kv.get_int_list(s + "W", Ws);
  trials = kv.get_int(s + "trials", trials);
  if (kv.has(s + "reg")) reg = parse_reg_kind(kv.get_string(s + "reg", ""));
  student_width = kv.get_int(s + "student_width", student_width);
  student_sigma = kv.get_double(s + "student_sigma", student_sigma);
  threshold = kv.get_double(s + "threshold", threshold);
  grid = kv.get_int(s + "grid", grid);
  seed = static_cast<std::uint64_t>(kv.get_int64(s + "seed", static_cast<long long>(seed)));
  workers = kv.get_int(s + "workers", workers);
  train = TrainConfig::from_config(kv, "train.", train);
  if (d < 1 || d > 2) throw std::invalid_argument("exact_recovery.d must be 1 or 2");
  if (trials < 0) throw std::invalid_argument("exact_recovery.trials must be >= 0");
  if (student_width < 1) throw std::invalid_argument("exact_recovery.student_width must be >= 1");
  for (int W : Ws)
    if (W < 1) throw std::invalid_argument("exact_recovery.W entries must be >= 1");
  for (int K : Ks)
    if (K < 0 || grid <= 2 * K) throw std::invalid_argument("exact_recovery.K entries must satisfy 0 <= K < grid/2");
}

void RecoveryConfig::write(std::ostream& os) const {
  os << std::setprecision(17);
  os << "[exact_recovery]\n";
  os << "d=" << d << "\nK0=" << K0 << "\nK=" << join_ints(Ks) << "\nW=" << join_ints(Ws) << "\ntrials=" << trials
     << "\nreg=" << to_string(reg) << "\nstudent_width=" << student_width << "\nstudent_sigma=" << student_sigma
     << "\nthreshold=" << threshold << "\ngrid=" << grid << "\nseed=" << seed << "\nworkers=" << workers << "\n";
  os << "[train]\n";
  train.write(os);
}

RecoveryTrial run_recovery_trial(const RecoveryConfig& cfg, int K, int W, int trial) {
  const auto t0 = std::chrono::steady_clock::now();
  RecoveryTrial out;
  out.K = K;
  out.W = W;
  out.trial = trial;
  out.seed = trial_seed(cfg.seed, K, W, trial);

  const FeatureMap fm(cfg.K0, cfg.d);
  const auto op = std::make_shared<const GridOperator>(fm, ForwardConfig::grid(K, cfg.d, cfg.grid));
  const Regularizer reg = make_regularizer(cfg.reg, op);
  // Teachers are drawn against the modified weighting so that both
  // regularizers see the same ground truth for a given seed.
  const Regularizer mod = Regularizer::modified(op);
  const InrParams teacher = random_teacher(W, fm, mix_seed(out.seed, 1), mod.weighting());
  const Vec truth = grid_image(*op, teacher);
  const Measurements y = op->to_measurements(op->unit_spectra(teacher.w) * teacher.a);

  const InrObjective objective(op, y, reg.kind());
  const InrParams student = random_student(cfg.student_width, fm, mix_seed(out.seed, 2), cfg.student_sigma);
  TrainConfig tc = cfg.train;
  tc.seed = out.seed;
  try {
    const FitReport rep = al_solve(student, objective, tc, truth);
    out.best_mse = rep.best_mse;
    out.best_iter = rep.best_iter;
    out.iterations = rep.iterations;
    out.outer_iterations = rep.outer_iterations;
    out.constraint = rep.constraint.empty() ? y.norm() : rep.constraint.back();
    out.diverged = rep.diverged;
    out.message = rep.message;
  } catch (const std::exception& e) {
    out.best_mse = std::numeric_limits<double>::infinity();
    out.message = e.what();
  }
  out.success = out.best_mse < cfg.threshold;
  out.seconds = seconds_since(t0);
  return out;
}

std::vector<RecoveryTrial> run_exact_recovery(const RecoveryConfig& cfg,
                                              const std::function<void(const RecoveryTrial&)>& progress) {
  struct Cell {
    int K, W, trial;
  };
  std::vector<Cell> cells;
  for (int K : cfg.Ks)
    for (int W : cfg.Ws)
      for (int t = 0; t < cfg.trials; ++t) cells.push_back({K, W, t});
  std::vector<RecoveryTrial> out(cells.size());
  std::mutex mu;
  parallel_for(static_cast<int>(cells.size()), cfg.workers, [&](int i) {
    out[i] = run_recovery_trial(cfg, cells[i].K, cells[i].W, cells[i].trial);
    if (progress) {
      std::lock_guard lock(mu);
      progress(out[i]);
    }
  });
  return out;
}

void write_trials_csv(std::ostream& os, const std::vector<RecoveryTrial>& trials) {
  os << "K,W,trial,seed,success,best_mse,best_iter,iterations,outer_iterations,constraint,diverged,seconds,message\n";
  os << std::setprecision(10);
  for (const auto& t : trials) {
    std::string msg = t.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    os << t.K << ',' << t.W << ',' << t.trial << ',' << t.seed << ',' << (t.success ? 1 : 0) << ',' << t.best_mse << ','
       << t.best_iter << ',' << t.iterations << ',' << t.outer_iterations << ',' << t.constraint << ','
       << (t.diverged ? 1 : 0) << ',' << t.seconds << ',' << msg << '\n';
  }
}

void write_recovery_table_csv(std::ostream& os, const RecoveryConfig& cfg, const std::vector<RecoveryTrial>& trials) {
  os << "K,W,trials,successes,probability\n";
  for (int K : cfg.Ks)
    for (int W : cfg.Ws) {
      int n = 0, s = 0;
      for (const auto& t : trials)
        if (t.K == K && t.W == W) {
          ++n;
          s += t.success;
        }
      os << K << ',' << W << ',' << n << ',' << s << ',';
      if (n > 0) os << static_cast<double>(s) / n;
      os << '\n';
    }
}

// ---------------------------------------------------------------------------

PhantomConfig PhantomConfig::defaults(Profile p) {
  PhantomConfig c;
  if (p == Profile::Desk) {
    c.K = 16;
    c.K0 = 6;
    c.width = 64;
    c.n_dots = 8;
    c.grid = 64;
    c.lambdas = {0.0, 1e-5, 1e-4, 1e-3};
    c.train.inner_iters = 10000;
    c.train.lr_schedule = {{8000, 1e-4}};
  } else {
    c.K = 32;
    c.K0 = 8;
    c.width = 64;
    c.n_dots = 50;
    c.grid = 512;
    c.lambdas = {0.0, 1e-6, 1e-5, 1e-4, 1e-3};
    c.train.inner_iters = 50000;
    c.train.lr_schedule = {{40000, 1e-4}};
  }
  return c;
}

void PhantomConfig::apply(const KeyValueConfig& kv) {
  const std::string s = "phantom.";
  phantom = kv.get_string(s + "phantom", phantom);
  K = kv.get_int(s + "K", K);
  K0 = kv.get_int(s + "K0", K0);
  width = kv.get_int(s + "width", width);
  n_dots = kv.get_int(s + "n_dots", n_dots);
  if (kv.has(s + "reg")) regs = parse_regs(kv.get_string(s + "reg", ""));
  lambdas = kv.get_double_list(s + "lambda", lambdas);
  grid = kv.get_int(s + "grid", grid);
  image_grid = kv.get_int(s + "image_grid", image_grid);
  student_sigma = kv.get_double(s + "student_sigma", student_sigma);
  seed = static_cast<std::uint64_t>(kv.get_int64(s + "seed", static_cast<long long>(seed)));
  workers = kv.get_int(s + "workers", workers);
  train = TrainConfig::from_config(kv, "train.", train);
  if (phantom != "dot" && phantom != "disc") throw std::invalid_argument("phantom.phantom must be dot or disc");
  if (lambdas.empty()) throw std::invalid_argument("phantom.lambda must list at least one value");
  for (double l : lambdas)
    if (!(l >= 0.0)) throw std::invalid_argument("phantom.lambda entries must be >= 0");
  if (width < 1) throw std::invalid_argument("phantom.width must be >= 1");
  ForwardConfig::grid(K, 2, grid).validate(FeatureMap(K0, 2));
  if (image_grid <= 2 * K) throw std::invalid_argument("phantom.image_grid must exceed 2K");
}

void PhantomConfig::write(std::ostream& os) const {
  os << std::setprecision(17);
  os << "[phantom]\n";
  os << "phantom=" << phantom << "\nK=" << K << "\nK0=" << K0 << "\nwidth=" << width << "\nn_dots=" << n_dots
     << "\nreg=" << join_regs(regs) << "\nlambda=" << join_doubles(lambdas) << "\ngrid=" << grid
     << "\nimage_grid=" << image_grid << "\nstudent_sigma=" << student_sigma << "\nseed=" << seed
     << "\nworkers=" << workers << "\n";
  os << "[train]\n";
  train.write(os);
}

Phantom PhantomConfig::make_phantom() const {
  if (phantom == "disc") return disc_phantom();
  return dot_phantom(n_dots, K0, mix_seed(seed, 1));
}

const PhantomRun& PhantomResult::best_for(RegKind reg) const {
  for (std::size_t i : best)
    if (runs[i].reg == reg) return runs[i];
  throw std::out_of_range("no run for regularizer " + to_string(reg));
}

PhantomResult run_phantom(const PhantomConfig& cfg, const std::function<void(const PhantomRun&)>& progress) {
  const Phantom ph = cfg.make_phantom();
  const FeatureMap fm(cfg.K0, 2);
  const auto fcfg = ForwardConfig::grid(cfg.K, 2, cfg.grid);
  const auto op = std::make_shared<const GridOperator>(fm, fcfg);
  const Measurements y = phantom_coeffs(ph, fcfg.omega, fcfg);

  // Evaluation happens on a separate, finer image grid.
  const GridOperator eval_op(fm, cfg.K, cfg.image_grid);
  const std::vector<double> truth = grid_samples(ph.as_field(), cfg.image_grid, 2);

  PhantomResult res;
  res.zero_fill_mse = image_mse(truth, zero_fill_synthesis(y, cfg.image_grid), cfg.image_grid).mse;

  const InrParams student = random_student(cfg.width, fm, mix_seed(cfg.seed, 2), cfg.student_sigma);
  struct Job {
    RegKind reg;
    double lambda;
  };
  std::vector<Job> jobs;
  for (RegKind r : cfg.regs)
    for (double l : cfg.lambdas) jobs.push_back({r, l});
  res.runs.resize(jobs.size());
  std::mutex mu;
  parallel_for(static_cast<int>(jobs.size()), cfg.workers, [&](int i) {
    const auto t0 = std::chrono::steady_clock::now();
    const InrObjective objective(op, y, jobs[i].reg);
    TrainConfig tc = cfg.train;
    tc.lambda = jobs[i].lambda;
    const FitReport rep = fit_penalized(student, objective, tc);
    PhantomRun run;
    run.reg = jobs[i].reg;
    run.lambda = jobs[i].lambda;
    run.params = rep.params;
    run.final_loss = rep.loss.empty() ? 0.0 : rep.loss.back();
    const Vec img = grid_image(eval_op, rep.params);
    const Metrics m = image_mse(truth, std::span<const double>(img.data(), static_cast<std::size_t>(img.size())),
                                cfg.image_grid);
    run.mse = m.mse;
    run.max_abs_err = m.max_abs_err;
    run.seconds = seconds_since(t0);
    res.runs[i] = std::move(run);
    if (progress) {
      std::lock_guard lock(mu);
      progress(res.runs[i]);
    }
  });
  for (RegKind r : cfg.regs) {
    std::size_t best = res.runs.size();
    for (std::size_t i = 0; i < res.runs.size(); ++i)
      if (res.runs[i].reg == r && (best == res.runs.size() || res.runs[i].mse < res.runs[best].mse)) best = i;
    res.best.push_back(best);
  }
  return res;
}

void write_phantom_metrics_csv(std::ostream& os, const PhantomResult& res) {
  os << "method,lambda,mse,max_abs_err,final_loss,seconds,best\n" << std::setprecision(10);
  os << "zero_fill,," << res.zero_fill_mse << ",,,,\n";
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const auto& r = res.runs[i];
    const bool best = std::find(res.best.begin(), res.best.end(), i) != res.best.end();
    os << to_string(r.reg) << ',' << r.lambda << ',' << r.mse << ',' << r.max_abs_err << ',' << r.final_loss << ','
       << r.seconds << ',' << (best ? 1 : 0) << '\n';
  }
}

void render_phantom_images(const PhantomConfig& cfg, const PhantomResult& res, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const int M = cfg.image_grid;
  const Phantom ph = cfg.make_phantom();
  const std::vector<double> truth = grid_samples(ph.as_field(), M, 2);
  const auto fcfg = ForwardConfig::grid(cfg.K, 2, cfg.grid);
  const Measurements y = phantom_coeffs(ph, fcfg.omega, fcfg);

  auto write_pair = [&](const std::string& name, const std::vector<double>& img) {
    render_image(img, M, 2, (fs::path(dir) / name).string());
    std::vector<double> diff(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) diff[i] = std::abs(img[i] - truth[i]);
    render_image(diff, M, 2, (fs::path(dir) / (name + "_abs_err")).string());
  };
  render_image(truth, M, 2, (fs::path(dir) / "ground_truth").string());
  write_pair("zero_fill", zero_fill_synthesis(y, M));
  const GridOperator eval_op(FeatureMap(cfg.K0, 2), cfg.K, M);
  for (std::size_t i : res.best) {
    const Vec img = grid_image(eval_op, res.runs[i].params);
    write_pair("inr_" + to_string(res.runs[i].reg), std::vector<double>(img.data(), img.data() + img.size()));
  }
}

// ---------------------------------------------------------------------------

CertifyConfig CertifyConfig::defaults(Profile p) {
  CertifyConfig c;
  c.grid = p == Profile::Desk ? 1024 : 4096;
  c.teachers = p == Profile::Desk ? 1 : 20;
  return c;
}

void CertifyConfig::apply(const KeyValueConfig& kv) {
  const std::string s = "certify.";
  d = kv.get_int(s + "d", d);
  K0 = kv.get_int(s + "K0", K0);
  K = kv.get_int(s + "K", K);
  grid = kv.get_int(s + "grid", grid);
  teachers = kv.get_int(s + "teachers", teachers);
  verify.n_samples = static_cast<std::size_t>(kv.get_int64(s + "samples", static_cast<long long>(verify.n_samples)));
  verify.refine_steps = kv.get_int(s + "refine_steps", verify.refine_steps);
  verify.refine_count = kv.get_int(s + "refine_count", verify.refine_count);
  verify.step = kv.get_double(s + "step", verify.step);
  verify.near_tol = kv.get_double(s + "near_tol", verify.near_tol);
  seed = static_cast<std::uint64_t>(kv.get_int64(s + "seed", static_cast<long long>(seed)));
  workers = kv.get_int(s + "workers", workers);
  if (d < 1 || d > 2) throw std::invalid_argument("certify.d must be 1 or 2");
  if (teachers < 0) throw std::invalid_argument("certify.teachers must be >= 0");
  ForwardConfig::grid(K, d, grid).validate(FeatureMap(K0, d));
}

void CertifyConfig::write(std::ostream& os) const {
  os << std::setprecision(17);
  os << "[certify]\n";
  os << "d=" << d << "\nK0=" << K0 << "\nK=" << K << "\ngrid=" << grid << "\nteachers=" << teachers
     << "\nsamples=" << verify.n_samples << "\nrefine_steps=" << verify.refine_steps
     << "\nrefine_count=" << verify.refine_count << "\nstep=" << verify.step << "\nnear_tol=" << verify.near_tol
     << "\nseed=" << seed << "\nworkers=" << workers << "\n";
}

CertifyOutcome run_certify_one(const CertifyConfig& cfg, int index) {
  CertifyOutcome out;
  out.index = index;
  out.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(index));
  const FeatureMap fm(cfg.K0, cfg.d);
  const auto fcfg = ForwardConfig::grid(cfg.K, cfg.d, cfg.grid);
  const auto op = std::make_shared<const GridOperator>(fm, fcfg);
  const Regularizer reg = Regularizer::modified(op);
  const InrParams teacher = random_teacher(1, fm, mix_seed(out.seed, 1), reg.weighting());
  out.amplitude = teacher.a[0];
  out.direction = teacher.w.col(0);

  DualCertificate cert =
      certificate_width1_modified(out.direction, out.amplitude > 0 ? 1 : -1, *op, /*require_sampling=*/false);
  VerifyOptions vo = cfg.verify;
  vo.seed = mix_seed(out.seed, 2);
  cert.report = verify_certificate(cert.q, RegKind::ModifiedWd, *op, vo);
  out.report = cert.report;
  if (cfg.K < 3 * cfg.K0) out.note = "K < 3 K0: sampling condition not met; report is informational";

  const Measurements y = op->to_measurements(op->unit_spectra(teacher.w) * teacher.a);
  try {
    out.gap = duality_gap_estimate(AtomicMeasure::from_params(teacher), cert, y, reg, fcfg);
    out.gap_ok = true;
  } catch (const std::exception& e) {
    out.gap_ok = false;
    out.gap = std::numeric_limits<double>::quiet_NaN();
    out.note += (out.note.empty() ? "" : "; ") + std::string(e.what());
  }
  return out;
}

std::vector<CertifyOutcome> run_certify(const CertifyConfig& cfg,
                                       const std::function<void(const CertifyOutcome&)>& progress) {
  std::vector<CertifyOutcome> out(static_cast<std::size_t>(std::max(cfg.teachers, 0)));
  std::mutex mu;
  parallel_for(cfg.teachers, cfg.workers, [&](int i) {
    out[i] = run_certify_one(cfg, i);
    if (progress) {
      std::lock_guard lock(mu);
      progress(out[i]);
    }
  });
  return out;
}

void write_certify_csv(std::ostream& os, const std::vector<CertifyOutcome>& outcomes) {
  os << "index,seed,amplitude,max_ratio,n_samples,n_skipped,near_equality,gap,certified,note\n"
     << std::setprecision(12);
  for (const auto& o : outcomes) {
    std::string note = o.note;
    std::replace(note.begin(), note.end(), ',', ';');
    os << o.index << ',' << o.seed << ',' << o.amplitude << ',' << o.report.max_ratio << ',' << o.report.n_samples
       << ',' << o.report.n_skipped << ',' << o.report.near_equality.size() << ',' << o.gap << ','
       << (o.certified() ? 1 : 0) << ',' << note << '\n';
  }
}

}  // namespace lpinr
