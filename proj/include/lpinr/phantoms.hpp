#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "lpinr/forward_op.hpp"

namespace lpinr {

struct Disc {
  std::array<double, 2> center{0.5, 0.5};
  double radius = 0.1;
  double amplitude = 1.0;
};

/// Ground-truth image: either an INR teacher or a sum of disc indicators (d = 2).
struct Phantom {
  std::variant<InrParams, std::vector<Disc>> shape;

  static Phantom teacher(InrParams p) { return {std::move(p)}; }
  static Phantom discs(std::vector<Disc> d);

  int dim() const;
  bool is_teacher() const { return std::holds_alternative<InrParams>(shape); }
  double operator()(std::span<const double> x) const;
  Field as_field() const;
};

/// Order-1 Bessel function of the first kind, any sign of x.
double bessel_j1(double x);

/// Exact Fourier coefficients on omega. Teachers go through inr_coeffs with cfg.
Measurements phantom_coeffs(const Phantom& ph, const FrequencySet& omega, const ForwardConfig& cfg);

/// Width-n_dots 2-D teacher whose units are thresholded Gaussian-like bumps
/// band-limited to K0, each with a positive amplitude.
Phantom dot_phantom(int n_dots, int K0, std::uint64_t seed);

/// A fixed piecewise-constant arrangement of nested and overlapping discs.
Phantom disc_phantom();

struct Metrics {
  double mse = 0.0;
  double max_abs_err = 0.0;
  int grid = 0;
};

Metrics image_mse(const Field& f_true, const Field& f_est, int M, int d);
Metrics image_mse(std::span<const double> truth, std::span<const double> estimate, int M);

struct RasterHeader {
  int d = 2;
  int M = 0;
  std::string dtype = "float32";
};

/// Writes <stem>.pgm (8-bit P5, min-max normalized) with <stem>.pgm.txt holding
/// the normalization, and <stem>.raw (little-endian float32) with <stem>.raw.txt.
/// In 1-D the PGM is replaced by a <stem>.csv curve. Throws std::runtime_error on I/O failure.
void render_image(std::span<const double> values, int M, int d, const std::string& stem);
void render_image(const Field& f, int M, int d, const std::string& stem);

/// Reads back a raw float32 grid written by render_image.
std::vector<float> read_raw(const std::string& stem, RasterHeader* header = nullptr);

}  // namespace lpinr
