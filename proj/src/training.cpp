#include "lpinr/training.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace lpinr {

std::string to_string(RegKind kind) { return kind == RegKind::StandardWd ? "standard" : "modified"; }

RegKind parse_reg_kind(const std::string& s) {
  if (s == "standard" || s == "std" || s == "standard-wd") return RegKind::StandardWd;
  if (s == "modified" || s == "mod" || s == "modified-wd") return RegKind::ModifiedWd;
  throw std::invalid_argument("unknown regularizer '" + s + "' (expected standard or modified)");
}

Regularizer Regularizer::standard() { return {}; }

Regularizer Regularizer::modified(std::shared_ptr<const GridOperator> op) {
  if (!op) throw std::invalid_argument("modified weight decay needs a grid operator");
  Regularizer r;
  r.kind_ = RegKind::ModifiedWd;
  r.op_ = std::move(op);
  return r;
}

double Regularizer::eta(const Vec& w) const {
  if (kind_ == RegKind::StandardWd) return w.norm();
  return op_->modified_eta(w);
}

Weighting Regularizer::weighting() const {
  return [self = *this](const Vec& w) { return self.eta(w); };
}

double reg_value(const InrParams& theta, const Regularizer& reg) {
  if (reg.kind() == RegKind::StandardWd) return 0.5 * (theta.a.squaredNorm() + theta.w.squaredNorm());
  const RowMat V = reg.op()->unit_spectra(theta.w);
  return 0.5 * (theta.a.squaredNorm() + V.squaredNorm());
}

Vec pack(const InrParams& p) {
  Vec t(p.a.size() + p.w.size());
  t.head(p.a.size()) = p.a;
  t.tail(p.w.size()) = Eigen::Map<const Vec>(p.w.data(), p.w.size());
  return t;
}

Vec pack(const Gradient& g) {
  Vec t(g.a.size() + g.w.size());
  t.head(g.a.size()) = g.a;
  t.tail(g.w.size()) = Eigen::Map<const Vec>(g.w.data(), g.w.size());
  return t;
}

InrParams unpack(const Vec& theta, const FeatureMap& fm, int width) {
  const auto D = static_cast<Eigen::Index>(fm.output_dim());
  if (theta.size() != width * (D + 1)) throw std::invalid_argument("flat parameter length mismatch");
  return {fm, theta.head(width), Eigen::Map<const Mat>(theta.data() + width, D, width)};
}

DataTerm least_squares_term() {
  return [](const Vec& c, Vec& weight) {
    weight = c;
    return 0.5 * c.squaredNorm();
  };
}

DataTerm augmented_term(Vec nu, double rho) {
  return [nu = std::move(nu), rho](const Vec& c, Vec& weight) {
    weight = nu + rho * c;
    return nu.dot(c) + 0.5 * rho * c.squaredNorm();
  };
}

InrObjective::InrObjective(std::shared_ptr<const GridOperator> op, const Measurements& y, RegKind reg)
    : op_(std::move(op)), y_(op_->to_band(y)), reg_(reg) {}

InrObjective::Evaluation InrObjective::evaluate(const InrParams& theta, const DataTerm& data, double reg_weight,
                                                Gradient* grad) const {
  const GridOperator& op = *op_;
  const double inv_n = 1.0 / static_cast<double>(op.grid_size());
  const RowMat tau = op.unit_values(theta.w);
  const RowMat relu = tau.cwiseMax(0.0);

  Evaluation ev;
  ev.image = relu * theta.a;
  RowMat spectra;
  Vec fhat;
  if (reg_ == RegKind::ModifiedWd) {
    spectra = op.analyze(relu);
    fhat = spectra * theta.a;
    ev.reg = 0.5 * (theta.a.squaredNorm() + spectra.squaredNorm());
  } else {
    RowMat img = ev.image;
    fhat = op.analyze(img).col(0);
    ev.reg = 0.5 * (theta.a.squaredNorm() + theta.w.squaredNorm());
  }
  ev.residual = fhat - y_;
  Vec weight;
  ev.data = data(ev.residual, weight);
  ev.value = ev.data + reg_weight * ev.reg;
  if (!grad) return ev;

  RowMat wmat = weight;
  const Vec back = op.synthesize(wmat).col(0);
  grad->a = (relu.transpose() * back) * inv_n + reg_weight * theta.a;

  // Adjoint of the unit map: mask times the back-projected residual per unit.
  RowMat H = back * theta.a.transpose();
  if (reg_ == RegKind::ModifiedWd && reg_weight != 0.0) H += reg_weight * op.synthesize(spectra);
  H = (tau.array() > 0.0).select(H, 0.0);
  grad->w = op.project_features(H);
  if (reg_ == RegKind::StandardWd) grad->w += reg_weight * theta.w;
  return ev;
}

std::pair<double, Gradient> loss_and_grad(const InrParams& theta, const Measurements& y, const Regularizer& reg,
                                          double lambda, const ForwardConfig& cfg) {
  if (cfg.backend != Backend::Grid) throw std::invalid_argument("loss_and_grad needs the grid backend");
  std::shared_ptr<const GridOperator> op;
  if (reg.kind() == RegKind::ModifiedWd && reg.op() && reg.op()->omega() == cfg.omega &&
      reg.op()->grid() == cfg.M && reg.op()->feature_map() == theta.fm) {
    op = std::shared_ptr<const GridOperator>(std::shared_ptr<const GridOperator>{}, reg.op());
  } else {
    op = std::make_shared<GridOperator>(theta.fm, cfg);
  }
  const InrObjective obj(op, y, reg.kind());
  Gradient g;
  const auto ev = obj.evaluate(theta, least_squares_term(), lambda, &g);
  return {ev.value, std::move(g)};
}

double TrainConfig::lr_at(int iter) const {
  double r = lr;
  for (const auto& [at, value] : lr_schedule)
    if (iter >= at) r = value;
  return r;
}

void TrainConfig::validate() const {
  if (inner_iters < 0) throw std::invalid_argument("inner_iters must be non-negative");
  if (!(lr > 0)) throw std::invalid_argument("lr must be positive");
  for (const auto& [at, value] : lr_schedule)
    if (at < 0 || !(value > 0)) throw std::invalid_argument("lr_schedule entries need iter >= 0 and lr > 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw std::invalid_argument("Adam betas must lie in [0, 1)");
  if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
  if (lambda < 0) throw std::invalid_argument("lambda must be non-negative");
  if (al.max_outer < 0) throw std::invalid_argument("al.max_outer must be non-negative");
  if (!(al.rho0 > 0) || !(al.rho_growth >= 1)) throw std::invalid_argument("al.rho0 > 0 and al.rho_growth >= 1 required");
  if (!(al.tol >= 0)) throw std::invalid_argument("al.tol must be non-negative");
  if (stop_mse < 0) throw std::invalid_argument("stop_mse must be non-negative");
}

namespace {

std::vector<std::pair<int, double>> parse_schedule(const std::string& key, const std::string& s) {
  std::vector<std::pair<int, double>> out;
  if (trim(s).empty()) return out;
  for (const auto& item : split(s, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) throw std::invalid_argument("config key '" + key + "': expected iter:lr items");
    out.emplace_back(std::stoi(parts[0]), std::stod(parts[1]));
  }
  return out;
}

}  // namespace

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv, const std::string& prefix, TrainConfig c) {
  c.inner_iters = kv.get_int(prefix + "inner_iters", c.inner_iters);
  c.lr = kv.get_double(prefix + "lr", c.lr);
  if (kv.has(prefix + "lr_schedule"))
    c.lr_schedule = parse_schedule(prefix + "lr_schedule", kv.get_string(prefix + "lr_schedule", ""));
  c.beta1 = kv.get_double(prefix + "beta1", c.beta1);
  c.beta2 = kv.get_double(prefix + "beta2", c.beta2);
  c.eps = kv.get_double(prefix + "eps", c.eps);
  c.lambda = kv.get_double(prefix + "lambda", c.lambda);
  c.al.max_outer = kv.get_int(prefix + "al.max_outer", c.al.max_outer);
  c.al.rho0 = kv.get_double(prefix + "al.rho0", c.al.rho0);
  c.al.rho_growth = kv.get_double(prefix + "al.rho_growth", c.al.rho_growth);
  c.al.tol = kv.get_double(prefix + "al.tol", c.al.tol);
  c.seed = static_cast<std::uint64_t>(kv.get_int64(prefix + "seed", static_cast<long long>(c.seed)));
  c.stop_mse = kv.get_double(prefix + "stop_mse", c.stop_mse);
  c.validate();
  return c;
}

TrainConfig TrainConfig::parse(std::istream& is) {
  const KeyValueConfig kv = KeyValueConfig::parse(is);
  TrainConfig c = from_config(kv, "", TrainConfig{});
  kv.reject_unused();
  return c;
}

void TrainConfig::write(std::ostream& os, const std::string& prefix) const {
  os << std::setprecision(17);
  os << prefix << "inner_iters=" << inner_iters << '\n';
  os << prefix << "lr=" << lr << '\n';
  os << prefix << "lr_schedule=";
  for (std::size_t i = 0; i < lr_schedule.size(); ++i)
    os << (i ? "," : "") << lr_schedule[i].first << ':' << lr_schedule[i].second;
  os << '\n';
  os << prefix << "beta1=" << beta1 << '\n';
  os << prefix << "beta2=" << beta2 << '\n';
  os << prefix << "eps=" << eps << '\n';
  os << prefix << "lambda=" << lambda << '\n';
  os << prefix << "al.max_outer=" << al.max_outer << '\n';
  os << prefix << "al.rho0=" << al.rho0 << '\n';
  os << prefix << "al.rho_growth=" << al.rho_growth << '\n';
  os << prefix << "al.tol=" << al.tol << '\n';
  os << prefix << "seed=" << seed << '\n';
  os << prefix << "stop_mse=" << stop_mse << '\n';
}

void FitReport::write_trace_csv(std::ostream& os) const {
  os << "iter,loss,constraint_norm,mse\n" << std::setprecision(10);
  // Outer iteration j ends at inner step (j + 1) * n / outer - 1.
  const std::size_t n = loss.size();
  std::vector<std::size_t> ends;
  if (!constraint.empty() && n > 0) {
    const std::size_t per = n / constraint.size();
    for (std::size_t j = 0; j < constraint.size(); ++j) ends.push_back(per ? (j + 1) * per - 1 : 0);
  }
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    os << i << ',' << loss[i] << ',';
    if (next < ends.size() && ends[next] == i) os << constraint[next++];
    os << ',';
    if (i < mse.size()) os << mse[i];
    os << '\n';
  }
}

FitReport adam_fit(const Vec& theta0, const StepObjective& objective, const TrainConfig& config, int iter_offset) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  FitReport rep;
  Vec theta = theta0;
  Vec m = Vec::Zero(theta.size());
  Vec v = Vec::Zero(theta.size());
  Vec g(theta.size());
  double b1t = 1.0;
  double b2t = 1.0;
  rep.loss.reserve(static_cast<std::size_t>(config.inner_iters));
  for (int it = 0; it < config.inner_iters; ++it) {
    const StepResult r = objective(theta, g);
    if (!std::isfinite(r.value) || !g.allFinite()) {
      std::ostringstream msg;
      msg << "adam_fit: non-finite objective at iteration " << it + iter_offset << " (value " << r.value << ")";
      throw std::runtime_error(msg.str());
    }
    rep.loss.push_back(r.value);
    if (r.mse) {
      rep.mse.push_back(*r.mse);
      if (*r.mse < rep.best_mse) {
        rep.best_mse = *r.mse;
        rep.best_iter = it + iter_offset;
      }
      if (config.stop_mse > 0 && *r.mse < config.stop_mse) {
        rep.stopped_early = true;
        ++rep.iterations;
        break;
      }
    }
    const double lr = config.lr_at(it);
    b1t *= config.beta1;
    b2t *= config.beta2;
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseAbs2();
    const double step = lr * std::sqrt(1.0 - b2t) / (1.0 - b1t);
    theta.array() -= step * m.array() / (v.array().sqrt() + config.eps * std::sqrt(1.0 - b2t));
    ++rep.iterations;
  }
  rep.theta = std::move(theta);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

namespace {

std::optional<double> image_mse(const Vec& image, const std::optional<Vec>& reference) {
  if (!reference) return std::nullopt;
  return (image - *reference).squaredNorm() / static_cast<double>(image.size());
}

}  // namespace

FitReport fit_penalized(const InrParams& theta0, const InrObjective& objective, const TrainConfig& config,
                        const std::optional<Vec>& reference) {
  const FeatureMap& fm = theta0.fm;
  const int width = theta0.width();
  const DataTerm ls = least_squares_term();
  Gradient gr;
  const StepObjective step = [&](const Vec& theta, Vec& grad) {
    const InrParams p = unpack(theta, fm, width);
    const auto ev = objective.evaluate(p, ls, config.lambda, &gr);
    grad = pack(gr);
    return StepResult{ev.value, image_mse(ev.image, reference)};
  };
  FitReport rep = adam_fit(pack(theta0), step, config);
  rep.params = unpack(rep.theta, fm, width);
  const auto final_ev = objective.evaluate(rep.params, ls, config.lambda, nullptr);
  rep.constraint.push_back(final_ev.residual.norm());
  if (auto mse = image_mse(final_ev.image, reference); mse && *mse < rep.best_mse) {
    rep.best_mse = *mse;
    rep.best_iter = rep.iterations;
  }
  return rep;
}

FitReport al_solve(const InrParams& theta0, const InrObjective& objective, const TrainConfig& config,
                   const std::optional<Vec>& reference) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const FeatureMap& fm = theta0.fm;
  const int width = theta0.width();

  FitReport rep;
  rep.params = theta0;
  rep.theta = pack(theta0);

  const auto ev0 = objective.evaluate(theta0, least_squares_term(), 1.0, nullptr);
  if (auto mse = image_mse(ev0.image, reference)) {
    rep.best_mse = *mse;
    rep.best_iter = 0;
  }
  // Feasible with zero penalty: already the global minimum.
  if (ev0.residual.norm() <= config.al.tol && ev0.reg == 0.0) {
    rep.constraint.push_back(ev0.residual.norm());
    rep.message = "initial point is feasible with zero regularizer";
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
  }

  Vec nu = Vec::Zero(objective.target().size());
  double rho = config.al.rho0;
  double prev_c = ev0.residual.norm();
  Gradient gr;
  for (int outer = 0; outer < config.al.max_outer; ++outer) {
    const DataTerm term = augmented_term(nu, rho);
    const StepObjective step = [&](const Vec& theta, Vec& grad) {
      const InrParams p = unpack(theta, fm, width);
      const auto ev = objective.evaluate(p, term, 1.0, &gr);
      grad = pack(gr);
      return StepResult{ev.value, image_mse(ev.image, reference)};
    };
    FitReport inner = adam_fit(rep.theta, step, config, rep.iterations);
    rep.iterations += inner.iterations;
    rep.loss.insert(rep.loss.end(), inner.loss.begin(), inner.loss.end());
    rep.mse.insert(rep.mse.end(), inner.mse.begin(), inner.mse.end());
    if (inner.best_mse < rep.best_mse) {
      rep.best_mse = inner.best_mse;
      rep.best_iter = inner.best_iter;
    }
    rep.theta = std::move(inner.theta);
    ++rep.outer_iterations;

    const InrParams p = unpack(rep.theta, fm, width);
    const auto ev = objective.evaluate(p, least_squares_term(), 1.0, nullptr);
    const double cn = ev.residual.norm();
    rep.constraint.push_back(cn);
    if (!std::isfinite(cn)) {
      rep.diverged = true;
      rep.message = "constraint norm became non-finite";
      break;
    }
    if (inner.stopped_early) {
      rep.stopped_early = true;
      rep.message = "image MSE below stop threshold";
      break;
    }
    if (cn < config.al.tol) {
      rep.message = "constraint tolerance reached";
      break;
    }
    const std::size_t nc = rep.constraint.size();
    if (nc > 5 && cn > 10.0 * rep.constraint[nc - 6]) {
      rep.diverged = true;
      rep.message = "constraint norm grew more than 10x over 5 outer iterations";
      break;
    }
    nu += rho * ev.residual;
    if (cn > 0.25 * prev_c) rho *= config.al.rho_growth;
    prev_c = cn;
  }
  rep.params = unpack(rep.theta, fm, width);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

FitReport al_solve(const InrParams& theta0, const Measurements& y, const Regularizer& reg, const ForwardConfig& cfg,
                   const TrainConfig& config) {
  auto op = std::make_shared<GridOperator>(theta0.fm, cfg);
  const InrObjective obj(op, y, reg.kind());
  return al_solve(theta0, obj, config);
}

}  // namespace lpinr
