#include "lpinr/model.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lpinr {

InrParams::InrParams(FeatureMap f, Vec outer, Mat inner) : fm(std::move(f)), a(std::move(outer)), w(std::move(inner)) {
  if (a.size() < 1) throw std::invalid_argument("INR width must be at least 1");
  if (w.cols() != a.size()) throw std::invalid_argument("outer/inner unit counts differ");
  if (static_cast<std::size_t>(w.rows()) != fm.output_dim())
    throw std::invalid_argument("inner weight length must equal feature dimension");
}

InrParams InrParams::zeros(const FeatureMap& fm, int width) {
  return {fm, Vec::Zero(width), Mat::Zero(static_cast<Eigen::Index>(fm.output_dim()), width)};
}

double InrParams::operator()(std::span<const double> x) const {
  const Vec g = fm.eval(x);
  const Vec pre = w.transpose() * g;
  double f = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (pre[i] > 0.0) f += a[i] * pre[i];
  return f;
}

Field InrParams::as_field() const {
  return [p = *this](std::span<const double> x) { return p(x); };
}

bool InrParams::is_normalized(double tol) const {
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] != 0.0 && std::abs(w.col(i).norm() - 1.0) > tol) return false;
  return true;
}

void InrParams::write(std::ostream& os) const {
  os << "d,K0,W\n" << fm.dim() << ',' << fm.max_freq() << ',' << width() << '\n';
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    os << a[i];
    for (Eigen::Index j = 0; j < w.rows(); ++j) os << ',' << w(j, i);
    os << '\n';
  }
}

InrParams InrParams::read(std::istream& is) {
  std::string line;
  std::getline(is, line);
  if (line != "d,K0,W") throw std::runtime_error("INR record: bad header '" + line + "'");
  int d = 0, K0 = 0, W = 0;
  char c1 = 0, c2 = 0;
  if (!std::getline(is, line)) throw std::runtime_error("INR record: missing shape line");
  std::stringstream ss(line);
  ss >> d >> c1 >> K0 >> c2 >> W;
  if (!ss || c1 != ',' || c2 != ',') throw std::runtime_error("INR record: malformed shape line");
  InrParams p = zeros(FeatureMap(K0, d), W);
  for (int i = 0; i < W; ++i) {
    if (!std::getline(is, line)) throw std::runtime_error("INR record: truncated unit rows");
    std::stringstream rs(line);
    std::string cell;
    std::getline(rs, cell, ',');
    p.a[i] = std::stod(cell);
    for (Eigen::Index j = 0; j < p.w.rows(); ++j) {
      if (!std::getline(rs, cell, ',')) throw std::runtime_error("INR record: short unit row");
      p.w(j, i) = std::stod(cell);
    }
  }
  return p;
}

double eval_inr(const InrParams& params, std::span<const double> x) { return params(x); }

InrParams normalize_to_sphere(const InrParams& params) {
  InrParams out = params;
  for (Eigen::Index i = 0; i < out.a.size(); ++i) {
    const double n = out.w.col(i).norm();
    if (n == 0.0) {
      out.a[i] = 0.0;
      continue;
    }
    out.a[i] *= n;
    out.w.col(i) /= n;
  }
  return out;
}

InrParams rebalance(const InrParams& params, const Weighting& eta) {
  InrParams out = params;
  for (Eigen::Index i = 0; i < out.a.size(); ++i) {
    const double ai = out.a[i];
    if (ai == 0.0) {
      out.w.col(i).setZero();
      continue;
    }
    const double e = eta(out.w.col(i));
    if (!(e > 0.0))
      throw std::domain_error("unit " + std::to_string(i) + " has nonzero outer weight but zero penalty weight");
    const double mag = std::abs(ai);
    out.a[i] = std::copysign(std::sqrt(mag * e), ai);
    out.w.col(i) *= std::sqrt(mag / e);
  }
  return out;
}

double weight_decay(const InrParams& params, const Weighting& eta) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < params.a.size(); ++i) {
    const double e = eta(params.w.col(i));
    r += params.a[i] * params.a[i] + e * e;
  }
  return 0.5 * r;
}

double weighted_l1(const InrParams& params, const Weighting& eta) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < params.a.size(); ++i)
    if (params.a[i] != 0.0) r += std::abs(params.a[i]) * eta(params.w.col(i));
  return r;
}

bool unit_vanishes(const FeatureMap& fm, const Vec& w) {
  const int d = fm.dim();
  // A degree-K0 polynomial cannot hide a positive lobe between samples this dense
  // without the lobe being negligibly small.
  const int M = std::max(64, 16 * fm.max_freq() + 1);
  const int side = d == 1 ? 4 * M : M;
  const std::size_t n = ipow(side, d);
  std::vector<double> x(d);
  for (std::size_t idx = 0; idx < n; ++idx) {
    std::size_t rem = idx;
    for (int j = d - 1; j >= 0; --j) {
      x[j] = static_cast<double>(rem % side) / side;
      rem /= side;
    }
    if (w.dot(fm.eval(x)) > 0.0) return false;
  }
  return true;
}

namespace {

Vec uniform_on_sphere(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  double norm = 0.0;
  do {
    for (Eigen::Index j = 0; j < n; ++j) v[j] = normal(rng);
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

}  // namespace

InrParams random_teacher(int width, const FeatureMap& fm, std::uint64_t seed, const Weighting& eta) {
  if (width < 1) throw std::invalid_argument("teacher width must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  std::bernoulli_distribution coin(0.5);
  InrParams t = InrParams::zeros(fm, width);
  const auto D = static_cast<Eigen::Index>(fm.output_dim());
  for (int i = 0; i < width; ++i) {
    int tries = 0;
    Vec w;
    for (;;) {
      if (++tries > 1000) throw std::runtime_error("random_teacher: weighting function degenerate after 1000 redraws");
      w = uniform_on_sphere(rng, D);
      if (eta(w) > 1e-8 && !unit_vanishes(fm, w)) break;
    }
    t.w.col(i) = w;
    t.a[i] = (coin(rng) ? 1.0 : -1.0) * amp(rng);
  }
  return t;
}

InrParams random_student(int width, const FeatureMap& fm, std::uint64_t seed, double sigma) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  InrParams s = InrParams::zeros(fm, width);
  const auto D = static_cast<Eigen::Index>(fm.output_dim());
  for (int i = 0; i < width; ++i) {
    s.w.col(i) = uniform_on_sphere(rng, D);
    s.a[i] = normal(rng);
  }
  return s;
}

Weighting euclidean_weighting() {
  return [](const Vec& w) { return w.norm(); };
}

}  // namespace lpinr
