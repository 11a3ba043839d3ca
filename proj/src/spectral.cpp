#include "lpinr/spectral.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace lpinr {

FrequencySet::FrequencySet(int K, int d, SetKind kind) : dim_(d), radius_(K), kind_(kind) {
  if (d < 1) throw std::invalid_argument("frequency set dimension must be positive");
  if (K < 0) throw std::invalid_argument("frequency set radius must be non-negative");
  const std::size_t side = 2 * static_cast<std::size_t>(K) + 1;
  const std::size_t total = ipow(side, d);
  const std::size_t first = kind == SetKind::FullBox ? 0 : (total - 1) / 2 + 1;
  freqs_.reserve(total - first);
  for (std::size_t idx = first; idx < total; ++idx) {
    Freq k(d);
    std::size_t rem = idx;
    for (int j = d - 1; j >= 0; --j) {
      k[j] = static_cast<int>(rem % side) - K;
      rem /= side;
    }
    freqs_.push_back(std::move(k));
  }
}

FrequencySet FrequencySet::full_box(int K, int d) { return {K, d, SetKind::FullBox}; }
FrequencySet FrequencySet::half_space(int K, int d) { return {K, d, SetKind::HalfSpace}; }

std::optional<std::size_t> FrequencySet::index_of(const Freq& k) const {
  if (static_cast<int>(k.size()) != dim_) return std::nullopt;
  const std::size_t side = 2 * static_cast<std::size_t>(radius_) + 1;
  std::size_t idx = 0;
  for (int kj : k) {
    if (kj < -radius_ || kj > radius_) return std::nullopt;
    idx = idx * side + static_cast<std::size_t>(kj + radius_);
  }
  if (kind_ == SetKind::FullBox) return idx;
  const std::size_t center = (ipow(side, dim_) - 1) / 2;
  if (idx <= center) return std::nullopt;
  return idx - center - 1;
}

bool FrequencySet::contains(const Freq& k) const { return index_of(k).has_value(); }

FrequencySet FrequencySet::dilate(int n) const {
  if (kind_ != SetKind::FullBox) throw std::invalid_argument("dilation is defined for full boxes only");
  if (n < 0) throw std::invalid_argument("dilation factor must be non-negative");
  return full_box(n * radius_, dim_);
}

FeatureMap::FeatureMap(int K0, int d) : freqs_(FrequencySet::half_space(K0, d)) {}

Vec FeatureMap::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) throw std::invalid_argument("point dimension mismatch");
  const std::size_t p = num_freqs();
  Vec g(2 * p + 1);
  g[0] = 1.0;
  for (std::size_t j = 0; j < p; ++j) {
    const Freq& k = freqs_[j];
    double phase = 0.0;
    for (int c = 0; c < dim(); ++c) {
      // k.x mod 1 keeps the argument small for large x.
      const double t = k[c] * x[c];
      phase += t - std::floor(t);
    }
    const double arg = kTwoPi * phase;
    g[1 + j] = kSqrt2 * std::cos(arg);
    g[1 + p + j] = kSqrt2 * std::sin(arg);
  }
  return g;
}

FeatureMap build_feature_map(int K0, int d) { return FeatureMap(K0, d); }

Vec eval_gamma(const FeatureMap& fm, std::span<const double> x) { return fm.eval(x); }

Measurements::Measurements(FrequencySet s, CVec v) : set(std::move(s)), vals(std::move(v)) {
  if (set.kind() != SetKind::FullBox) throw std::invalid_argument("measurements live on a full box");
  if (static_cast<std::size_t>(vals.size()) != set.size())
    throw std::invalid_argument("measurement vector length does not match frequency set");
}

Measurements Measurements::zeros(const FrequencySet& s) {
  return {s, CVec::Zero(static_cast<Eigen::Index>(s.size()))};
}

const cplx& Measurements::at(const Freq& k) const {
  auto idx = set.index_of(k);
  if (!idx) throw std::out_of_range("frequency outside measurement set");
  return vals[static_cast<Eigen::Index>(*idx)];
}

double Measurements::hermitian_error() const {
  // Lexicographic order puts -k at the mirrored index.
  const Eigen::Index n = vals.size();
  double err = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) err = std::max(err, std::abs(vals[n - 1 - i] - std::conj(vals[i])));
  return err;
}

Measurements Measurements::resized(int K) const {
  Measurements out = zeros(FrequencySet::full_box(K, set.dim()));
  for (std::size_t i = 0; i < out.set.size(); ++i) {
    if (auto j = set.index_of(out.set[i])) out.vals[static_cast<Eigen::Index>(i)] = vals[static_cast<Eigen::Index>(*j)];
  }
  return out;
}

void Measurements::write_csv(std::ostream& os) const {
  const int d = set.dim();
  for (int j = 0; j < d; ++j) os << 'k' << (j + 1) << ',';
  os << "re,im\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (int j = 0; j < d; ++j) os << set[i][j] << ',';
    const cplx v = vals[static_cast<Eigen::Index>(i)];
    os << v.real() << ',' << v.imag() << '\n';
  }
}

Measurements Measurements::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("measurement CSV: missing header");
  int d = 0;
  {
    std::stringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ','))
      if (!col.empty() && col[0] == 'k') ++d;
  }
  if (d < 1) throw std::runtime_error("measurement CSV: header has no frequency columns");
  std::vector<Freq> ks;
  std::vector<cplx> vs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    Freq k(d);
    for (int j = 0; j < d; ++j) {
      std::getline(ls, cell, ',');
      k[j] = std::stoi(cell);
    }
    double re = 0, im = 0;
    std::getline(ls, cell, ',');
    re = std::stod(cell);
    std::getline(ls, cell, ',');
    im = std::stod(cell);
    ks.push_back(std::move(k));
    vs.emplace_back(re, im);
  }
  int K = 0;
  for (const auto& k : ks)
    for (int kj : k) K = std::max(K, std::abs(kj));
  Measurements out = zeros(FrequencySet::full_box(K, d));
  if (ks.size() != out.set.size()) throw std::runtime_error("measurement CSV: incomplete frequency box");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] != out.set[i]) throw std::runtime_error("measurement CSV: rows not in lexicographic order");
    out.vals[static_cast<Eigen::Index>(i)] = vs[i];
  }
  return out;
}

double real_inner(const Measurements& u, const Measurements& v) {
  if (!(u.set == v.set)) throw std::invalid_argument("inner product of measurements on different sets");
  return u.vals.dot(v.vals).real();
}

TrigPoly::TrigPoly(FeatureMap f, Vec coeffs) : fm(std::move(f)), w(std::move(coeffs)) {
  if (static_cast<std::size_t>(w.size()) != fm.output_dim())
    throw std::invalid_argument("trig polynomial coefficient length must equal feature dimension");
}

double TrigPoly::operator()(std::span<const double> x) const { return w.dot(fm.eval(x)); }

Measurements TrigPoly::coefficients() const {
  const FrequencySet box = FrequencySet::full_box(fm.max_freq(), fm.dim());
  Measurements out = Measurements::zeros(box);
  const std::size_t p = fm.num_freqs();
  const Eigen::Index center = static_cast<Eigen::Index>((box.size() - 1) / 2);
  out.vals[center] = w[0];
  // Half-space index j sits at center + 1 + j, its negative mirrors it.
  for (std::size_t j = 0; j < p; ++j) {
    const cplx c(w[1 + j] / kSqrt2, -w[1 + p + j] / kSqrt2);
    out.vals[center + 1 + static_cast<Eigen::Index>(j)] = c;
    out.vals[center - 1 - static_cast<Eigen::Index>(j)] = std::conj(c);
  }
  return out;
}

std::vector<double> grid_samples(const Field& f, int M, int d) {
  if (M < 1) throw std::invalid_argument("grid size must be positive");
  const std::size_t n = ipow(M, d);
  std::vector<double> out(n);
  std::vector<double> x(d);
  for (std::size_t idx = 0; idx < n; ++idx) {
    std::size_t rem = idx;
    for (int j = d - 1; j >= 0; --j) {
      x[j] = static_cast<double>(rem % M) / M;
      rem /= M;
    }
    out[idx] = f(x);
  }
  return out;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

void check_target(std::span<const double> samples, int M, const FrequencySet& target) {
  if (target.kind() != SetKind::FullBox) throw std::invalid_argument("DFT target must be a full box");
  if (M <= 2 * target.radius())
    throw std::invalid_argument("grid size M=" + std::to_string(M) + " must exceed twice the target radius " +
                                std::to_string(target.radius()));
  if (samples.size() != ipow(M, target.dim())) throw std::invalid_argument("sample count is not M^d");
}

}  // namespace

Measurements dft_coeffs_direct(std::span<const double> samples, int M, const FrequencySet& target) {
  check_target(samples, M, target);
  const int K = target.radius();
  const int d = target.dim();
  CMat E(2 * K + 1, M);
  for (int k = -K; k <= K; ++k)
    for (int m = 0; m < M; ++m) {
      // Reduce k*m mod M before scaling to keep the phase exact.
      const long r = ((static_cast<long>(k) * m) % M + M) % M;
      const double ang = -kTwoPi * static_cast<double>(r) / M;
      E(k + K, m) = cplx(std::cos(ang), std::sin(ang)) / static_cast<double>(M);
    }
  RowMatrix<cplx> X(static_cast<Eigen::Index>(samples.size()), 1);
  for (std::size_t i = 0; i < samples.size(); ++i) X(static_cast<Eigen::Index>(i), 0) = samples[i];
  RowMatrix<cplx> Y = apply_separable<cplx>(E, X, d);
  return {target, Y.col(0)};
}

Measurements dft_coeffs_fft(std::span<const double> samples, int M, const FrequencySet& target) {
  check_target(samples, M, target);
  if (!is_power_of_two(static_cast<std::size_t>(M))) throw std::invalid_argument("FFT path needs a power-of-two M");
  const int d = target.dim();
  std::vector<cplx> buf(samples.begin(), samples.end());
  std::vector<cplx> line(M), spec(M);
  Eigen::FFT<double> fft;
  // Transform each axis in turn; stride walks the row-major layout.
  for (int axis = 0; axis < d; ++axis) {
    const std::size_t stride = ipow(M, d - 1 - axis);
    const std::size_t outer = ipow(M, axis);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t s = 0; s < stride; ++s) {
        const std::size_t base = o * M * stride + s;
        for (int m = 0; m < M; ++m) line[m] = buf[base + m * stride];
        fft.fwd(spec, line);
        for (int m = 0; m < M; ++m) buf[base + m * stride] = spec[m];
      }
  }
  Measurements out = Measurements::zeros(target);
  const double scale = 1.0 / static_cast<double>(samples.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    std::size_t idx = 0;
    for (int j = 0; j < d; ++j) idx = idx * M + static_cast<std::size_t>((target[i][j] + M) % M);
    out.vals[static_cast<Eigen::Index>(i)] = buf[idx] * scale;
  }
  return out;
}

Measurements dft_coeffs(std::span<const double> samples, int M, const FrequencySet& target) {
  if (is_power_of_two(static_cast<std::size_t>(M))) return dft_coeffs_fft(samples, M, target);
  return dft_coeffs_direct(samples, M, target);
}

}  // namespace lpinr
