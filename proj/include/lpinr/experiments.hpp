#pragma once

// Experiment drivers behind the command-line harness: exact-recovery tables,
// phantom reconstructions and certificate reports.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lpinr/certificate.hpp"
#include "lpinr/phantoms.hpp"
#include "lpinr/training.hpp"

namespace lpinr {

enum class Profile { Desk, Paper };

Profile parse_profile(const std::string& s);
std::string to_string(Profile p);

/// hash(master, K, W, trial)
std::uint64_t trial_seed(std::uint64_t master, int K, int W, int trial);

/// Runs job(i) for i in [0, n) on up to `workers` threads. Each job writes
/// only its own slot, so results do not depend on the worker count.
void parallel_for(int n, int workers, const std::function<void(int)>& job);

// ---------------------------------------------------------------------------

struct RecoveryConfig {
  int d = 1;
  int K0 = 2;
  std::vector<int> Ks;
  std::vector<int> Ws;
  int trials = 10;
  RegKind reg = RegKind::ModifiedWd;
  int student_width = 100;
  double student_sigma = 0.01;
  double threshold = 1e-9;
  /// Training grid per dimension; measurements and image MSE use the same grid.
  int grid = 4096;
  TrainConfig train;
  std::uint64_t seed = 0;
  int workers = 1;

  static RecoveryConfig defaults(Profile p);
  /// Reads [exact_recovery] and [train] keys over the current values.
  void apply(const KeyValueConfig& kv);
  /// Loadable snapshot of every field.
  void write(std::ostream& os) const;
};

struct RecoveryTrial {
  int K = 0;
  int W = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  bool success = false;
  double best_mse = 0.0;
  int best_iter = -1;
  int iterations = 0;
  int outer_iterations = 0;
  double constraint = 0.0;
  bool diverged = false;
  double seconds = 0.0;
  std::string message;
};

RecoveryTrial run_recovery_trial(const RecoveryConfig& cfg, int K, int W, int trial);
/// Every (K, W, trial) cell in K-major order.
std::vector<RecoveryTrial> run_exact_recovery(const RecoveryConfig& cfg,
                                              const std::function<void(const RecoveryTrial&)>& progress = {});

void write_trials_csv(std::ostream& os, const std::vector<RecoveryTrial>& trials);
/// K,W,trials,successes,probability
void write_recovery_table_csv(std::ostream& os, const RecoveryConfig& cfg, const std::vector<RecoveryTrial>& trials);

// ---------------------------------------------------------------------------

struct PhantomConfig {
  std::string phantom = "dot";  // dot | disc
  int K = 16;
  int K0 = 6;
  int width = 64;
  int n_dots = 8;
  std::vector<RegKind> regs{RegKind::ModifiedWd, RegKind::StandardWd};
  std::vector<double> lambdas{0.0, 1e-4, 1e-3};
  /// Training grid per dimension.
  int grid = 512;
  /// Grid on which image MSE is measured and images are rendered.
  int image_grid = 256;
  TrainConfig train;
  double student_sigma = 0.01;
  std::uint64_t seed = 0;
  int workers = 1;

  static PhantomConfig defaults(Profile p);
  /// Reads [phantom] and [train] keys.
  void apply(const KeyValueConfig& kv);
  void write(std::ostream& os) const;

  Phantom make_phantom() const;
};

struct PhantomRun {
  RegKind reg = RegKind::ModifiedWd;
  double lambda = 0.0;
  double mse = 0.0;
  double max_abs_err = 0.0;
  double final_loss = 0.0;
  double seconds = 0.0;
  InrParams params;
};

struct PhantomResult {
  double zero_fill_mse = 0.0;
  std::vector<PhantomRun> runs;
  /// Index into runs of the lowest-MSE lambda for regs[i].
  std::vector<std::size_t> best;

  const PhantomRun& best_for(RegKind reg) const;
};

PhantomResult run_phantom(const PhantomConfig& cfg, const std::function<void(const PhantomRun&)>& progress = {});

/// reg,lambda,mse,max_abs_err,final_loss,seconds,best plus a zero-fill row.
void write_phantom_metrics_csv(std::ostream& os, const PhantomResult& res);
/// Ground truth, zero-fill, best INR per regularizer and their absolute errors.
void render_phantom_images(const PhantomConfig& cfg, const PhantomResult& res, const std::string& dir);

// ---------------------------------------------------------------------------

struct CertifyConfig {
  int d = 1;
  int K0 = 2;
  int K = 6;
  int grid = 4096;
  int teachers = 1;
  VerifyOptions verify;
  std::uint64_t seed = 0;
  int workers = 1;

  static CertifyConfig defaults(Profile p);
  /// Reads [certify] keys.
  void apply(const KeyValueConfig& kv);
  void write(std::ostream& os) const;
};

struct CertifyOutcome {
  int index = 0;
  std::uint64_t seed = 0;
  double amplitude = 0.0;
  Vec direction;
  FeasibilityReport report;
  bool gap_ok = false;
  double gap = 0.0;
  std::string note;

  bool certified(double slack = 1e-8) const { return report.feasible(slack) && gap_ok && std::abs(gap) <= slack; }
};

CertifyOutcome run_certify_one(const CertifyConfig& cfg, int index);
std::vector<CertifyOutcome> run_certify(const CertifyConfig& cfg,
                                       const std::function<void(const CertifyOutcome&)>& progress = {});

void write_certify_csv(std::ostream& os, const std::vector<CertifyOutcome>& outcomes);

}  // namespace lpinr
