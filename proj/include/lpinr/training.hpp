#pragma once

#include <functional>
#include <limits>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lpinr/config.hpp"
#include "lpinr/forward_op.hpp"

namespace lpinr {

enum class RegKind { StandardWd, ModifiedWd };

std::string to_string(RegKind kind);
RegKind parse_reg_kind(const std::string& s);

/// Weight-decay family R(theta) = 1/2 sum_i (a_i^2 + eta(w_i)^2).
///
/// Standard: eta(w) = ||w||_2. Modified: eta(w) = ||F_Omega [w . gamma]_+||_2
/// evaluated with the grid operator the regularizer was built with.
class Regularizer {
 public:
  static Regularizer standard();
  static Regularizer modified(std::shared_ptr<const GridOperator> op);

  RegKind kind() const { return kind_; }
  double eta(const Vec& w) const;
  Weighting weighting() const;
  const GridOperator* op() const { return op_.get(); }

 private:
  RegKind kind_ = RegKind::StandardWd;
  std::shared_ptr<const GridOperator> op_;
};

double reg_value(const InrParams& theta, const Regularizer& reg);

/// Gradient of a scalar objective with respect to (a, w).
struct Gradient {
  Vec a;
  Mat w;
};

/// Flat parameter layout [a_0..a_{W-1}, w column-major].
Vec pack(const InrParams& p);
InrParams unpack(const Vec& theta, const FeatureMap& fm, int width);
Vec pack(const Gradient& g);

/// Data term as a function of the band residual c = F f - y: returns its
/// value and writes dValue/dc into weight.
using DataTerm = std::function<double(const Vec& residual, Vec& weight)>;

DataTerm least_squares_term();
/// Re<nu, c> + rho/2 ||c||^2 in band coordinates.
DataTerm augmented_term(Vec nu, double rho);

/// Grid-backend objective data(F f_theta - y) + reg_weight * R(theta) with
/// hand-derived gradients. Inactive units (tau <= 0) contribute no gradient.
class InrObjective {
 public:
  InrObjective(std::shared_ptr<const GridOperator> op, const Measurements& y, RegKind reg);

  struct Evaluation {
    double value = 0.0;
    double data = 0.0;
    double reg = 0.0;
    /// Band residual F f - y.
    Vec residual;
    /// f_theta on the operator grid.
    Vec image;
  };

  Evaluation evaluate(const InrParams& theta, const DataTerm& data, double reg_weight, Gradient* grad) const;

  const GridOperator& op() const { return *op_; }
  std::shared_ptr<const GridOperator> op_ptr() const { return op_; }
  const Vec& target() const { return y_; }
  RegKind reg_kind() const { return reg_; }

 private:
  std::shared_ptr<const GridOperator> op_;
  Vec y_;
  RegKind reg_;
};

/// 1/2 ||F_Omega f_theta - y||^2 + lambda R(theta) and its gradient (grid backend).
std::pair<double, Gradient> loss_and_grad(const InrParams& theta, const Measurements& y, const Regularizer& reg,
                                          double lambda, const ForwardConfig& cfg);

struct AlConfig {
  int max_outer = 60;
  double rho0 = 1.0;
  double rho_growth = 2.0;
  double tol = 1e-10;
};

struct TrainConfig {
  int inner_iters = 5000;
  double lr = 1e-3;
  /// (iteration, lr) milestones within one Adam run, applied in order.
  std::vector<std::pair<int, double>> lr_schedule;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lambda = 0.0;
  AlConfig al;
  std::uint64_t seed = 0;
  /// Stop as soon as the monitored image MSE falls below this value (0 = never).
  double stop_mse = 0.0;

  double lr_at(int iter) const;
  void validate() const;

  /// key=value lines; '#' comments; unknown keys rejected by name.
  static TrainConfig parse(std::istream& is);
  /// Reads keys "<prefix>inner_iters", "<prefix>al.max_outer", ... over defaults.
  static TrainConfig from_config(const KeyValueConfig& kv, const std::string& prefix, TrainConfig defaults);
  /// Every field as key=value lines, prefixed.
  void write(std::ostream& os, const std::string& prefix = "") const;
};

struct FitReport {
  InrParams params;
  /// Final parameters in the flat layout.
  Vec theta;
  std::vector<double> loss;
  std::vector<double> mse;
  std::vector<double> constraint;
  double best_mse = std::numeric_limits<double>::infinity();
  int best_iter = -1;
  int iterations = 0;
  int outer_iterations = 0;
  bool diverged = false;
  bool stopped_early = false;
  std::string message;
  double wall_seconds = 0.0;

  /// iter,loss,constraint_norm,mse rows; constraint_norm is filled at the
  /// last inner step of each outer iteration and empty elsewhere.
  void write_trace_csv(std::ostream& os) const;
};

/// Objective for adam_fit: returns value, fills gradient, optionally reports an image MSE.
struct StepResult {
  double value = 0.0;
  std::optional<double> mse;
};
using StepObjective = std::function<StepResult(const Vec& theta, Vec& grad)>;

/// Adam (beta1, beta2, eps from config) for config.inner_iters steps.
/// Throws std::runtime_error on a non-finite objective value.
FitReport adam_fit(const Vec& theta0, const StepObjective& objective, const TrainConfig& config,
                   int iter_offset = 0);

/// Penalized least squares fit of a width-W INR with Adam.
FitReport fit_penalized(const InrParams& theta0, const InrObjective& objective, const TrainConfig& config,
                        const std::optional<Vec>& reference = std::nullopt);

/// min R(theta) s.t. F_Omega f_theta = y by the augmented Lagrangian method.
/// reference, when given, is the true image on the operator grid; its MSE is tracked.
FitReport al_solve(const InrParams& theta0, const InrObjective& objective, const TrainConfig& config,
                   const std::optional<Vec>& reference = std::nullopt);

FitReport al_solve(const InrParams& theta0, const Measurements& y, const Regularizer& reg, const ForwardConfig& cfg,
                   const TrainConfig& config);

}  // namespace lpinr
