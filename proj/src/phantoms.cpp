#include "lpinr/phantoms.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <random>
#include <stdexcept>

namespace lpinr {

Phantom Phantom::discs(std::vector<Disc> d) {
  for (const auto& disc : d) {
    if (!(disc.radius > 0.0)) throw std::invalid_argument("disc radius must be positive");
    for (double c : disc.center)
      if (c - disc.radius < 0.0 || c + disc.radius > 1.0) throw std::invalid_argument("disc must lie inside the unit square");
  }
  return {std::move(d)};
}

int Phantom::dim() const {
  if (const auto* p = std::get_if<InrParams>(&shape)) return p->fm.dim();
  return 2;
}

double Phantom::operator()(std::span<const double> x) const {
  if (const auto* p = std::get_if<InrParams>(&shape)) return (*p)(x);
  double v = 0.0;
  // Periodic distance so the image is the periodization of the discs.
  for (const auto& d : std::get<std::vector<Disc>>(shape)) {
    double r2 = 0.0;
    for (int j = 0; j < 2; ++j) {
      double t = x[j] - d.center[j];
      t -= std::round(t);
      r2 += t * t;
    }
    if (r2 < d.radius * d.radius) v += d.amplitude;
  }
  return v;
}

Field Phantom::as_field() const {
  return [p = *this](std::span<const double> x) { return p(x); };
}

double bessel_j1(double x) {
  // J1 is odd; the library routine takes x >= 0 only.
  const double r = std::cyl_bessel_j(1.0, std::abs(x));
  return x < 0 ? -r : r;
}

Measurements phantom_coeffs(const Phantom& ph, const FrequencySet& omega, const ForwardConfig& cfg) {
  if (const auto* p = std::get_if<InrParams>(&ph.shape)) {
    ForwardConfig c = cfg;
    c.omega = omega;
    return inr_coeffs(*p, c);
  }
  if (omega.dim() != 2) throw std::invalid_argument("disc phantoms are two-dimensional");
  Measurements out = Measurements::zeros(omega);
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const Freq& k = omega[i];
    const double kn = std::hypot(static_cast<double>(k[0]), static_cast<double>(k[1]));
    cplx acc = 0.0;
    for (const auto& d : std::get<std::vector<Disc>>(ph.shape)) {
      const double r = d.radius;
      const double mag = kn == 0.0 ? kPi * r * r : r * bessel_j1(kTwoPi * kn * r) / kn;
      const double phase = -kTwoPi * (k[0] * d.center[0] + k[1] * d.center[1]);
      acc += d.amplitude * mag * cplx(std::cos(phase), std::sin(phase));
    }
    out.vals[static_cast<Eigen::Index>(i)] = acc;
  }
  return out;
}

Phantom dot_phantom(int n_dots, int K0, std::uint64_t seed) {
  if (n_dots < 0) throw std::invalid_argument("n_dots must be non-negative");
  if (K0 < 1) throw std::invalid_argument("dot phantom needs K0 >= 1");
  const FeatureMap fm(K0, 2);
  const std::size_t p = fm.num_freqs();
  if (n_dots == 0) return Phantom::teacher(InrParams::zeros(fm, 1));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.15, 0.85);
  std::uniform_real_distribution<double> thresh(0.2, 0.8);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  // Gaussian spectral taper decaying to 1% at the band edge.
  const double alpha = std::log(100.0) / (static_cast<double>(K0) * K0);
  double peak = 0.0;
  for (int k1 = -K0; k1 <= K0; ++k1)
    for (int k2 = -K0; k2 <= K0; ++k2) peak += std::exp(-alpha * (k1 * k1 + k2 * k2));

  InrParams t = InrParams::zeros(fm, n_dots);
  for (int i = 0; i < n_dots; ++i) {
    const double cx = pos(rng);
    const double cy = pos(rng);
    const double th = thresh(rng);
    const double a = amp(rng);
    // tau(x) = sum_k g_k e^{2 pi i k.(x - c)} / peak - th in feature coordinates.
    Vec w(fm.output_dim());
    w[0] = 1.0 / peak - th;
    for (std::size_t j = 0; j < p; ++j) {
      const Freq& k = fm.freqs()[j];
      const double g = 2.0 * std::exp(-alpha * (k[0] * k[0] + k[1] * k[1])) / peak;
      const double ph = kTwoPi * (k[0] * cx + k[1] * cy);
      // g cos(2 pi k.(x - c)) = g cos(ph) cos(2 pi k.x) + g sin(ph) sin(2 pi k.x)
      w[static_cast<Eigen::Index>(1 + j)] = g * std::cos(ph) / kSqrt2;
      w[static_cast<Eigen::Index>(1 + p + j)] = g * std::sin(ph) / kSqrt2;
    }
    const double n = w.norm();
    t.w.col(i) = w / n;
    t.a[i] = a * n;
  }
  return Phantom::teacher(std::move(t));
}

Phantom disc_phantom() {
  return Phantom::discs({
      {{0.5, 0.5}, 0.40, 1.0},
      {{0.5, 0.5}, 0.34, -0.6},
      {{0.38, 0.55}, 0.10, 0.5},
      {{0.63, 0.55}, 0.08, 0.7},
      {{0.50, 0.33}, 0.05, 0.4},
      {{0.45, 0.70}, 0.035, 0.6},
      {{0.58, 0.40}, 0.025, 0.8},
  });
}

Metrics image_mse(std::span<const double> truth, std::span<const double> estimate, int M) {
  if (truth.size() != estimate.size()) throw std::invalid_argument("image sizes differ");
  Metrics m;
  m.grid = M;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = estimate[i] - truth[i];
    m.mse += e * e;
    m.max_abs_err = std::max(m.max_abs_err, std::abs(e));
  }
  if (!truth.empty()) m.mse /= static_cast<double>(truth.size());
  return m;
}

Metrics image_mse(const Field& f_true, const Field& f_est, int M, int d) {
  const auto a = grid_samples(f_true, M, d);
  const auto b = grid_samples(f_est, M, d);
  return image_mse(a, b, M);
}

namespace {

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  return os;
}

void check_written(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace

void render_image(std::span<const double> values, int M, int d, const std::string& stem) {
  if (d < 1 || d > 2) throw std::invalid_argument("render_image supports d = 1 or 2");
  if (values.size() != ipow(M, d)) throw std::invalid_argument("render_image: value count is not M^d");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = values.empty() ? 0.0 : *lo_it;
  const double hi = values.empty() ? 0.0 : *hi_it;

  if (d == 2) {
    const std::string path = stem + ".pgm";
    auto os = open_out(path, true);
    os << "P5\n" << M << ' ' << M << "\n255\n";
    const double span = hi > lo ? hi - lo : 1.0;
    std::vector<unsigned char> px(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      px[i] = static_cast<unsigned char>(std::lround(255.0 * std::clamp((values[i] - lo) / span, 0.0, 1.0)));
    os.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
    check_written(os, path);
    auto side = open_out(path + ".txt", false);
    side << std::setprecision(17) << "min=" << lo << "\nmax=" << hi << '\n';
    check_written(side, path + ".txt");
  } else {
    const std::string path = stem + ".csv";
    auto os = open_out(path, false);
    os << "x,f\n" << std::setprecision(17);
    for (int m = 0; m < M; ++m) os << static_cast<double>(m) / M << ',' << values[static_cast<std::size_t>(m)] << '\n';
    check_written(os, path);
  }

  const std::string raw = stem + ".raw";
  auto rs = open_out(raw, true);
  for (double v : values) {
    const float f = static_cast<float>(v);
    unsigned char b[4];
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xffu);
    rs.write(reinterpret_cast<const char*>(b), 4);
  }
  check_written(rs, raw);
  auto hs = open_out(raw + ".txt", false);
  hs << "d=" << d << "\nM=" << M << "\ndtype=float32\nendian=little\n";
  check_written(hs, raw + ".txt");
}

void render_image(const Field& f, int M, int d, const std::string& stem) {
  const auto v = grid_samples(f, M, d);
  render_image(v, M, d, stem);
}

std::vector<float> read_raw(const std::string& stem, RasterHeader* header) {
  RasterHeader h;
  {
    std::ifstream hs(stem + ".raw.txt");
    if (!hs) throw std::runtime_error("cannot open " + stem + ".raw.txt");
    std::string line;
    while (std::getline(hs, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string k = line.substr(0, eq);
      const std::string v = line.substr(eq + 1);
      if (k == "d") h.d = std::stoi(v);
      if (k == "M") h.M = std::stoi(v);
      if (k == "dtype") h.dtype = v;
    }
  }
  if (h.dtype != "float32") throw std::runtime_error("unsupported raw dtype " + h.dtype);
  std::ifstream rs(stem + ".raw", std::ios::binary);
  if (!rs) throw std::runtime_error("cannot open " + stem + ".raw");
  const std::size_t n = ipow(h.M, h.d);
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char b[4];
    if (!rs.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("truncated raw file " + stem + ".raw");
    std::uint32_t u = 0;
    for (int j = 0; j < 4; ++j) u |= static_cast<std::uint32_t>(b[j]) << (8 * j);
    std::memcpy(&out[i], &u, 4);
  }
  if (header) *header = h;
  return out;
}

}  // namespace lpinr
