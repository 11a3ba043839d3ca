#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpinr/types.hpp"

namespace lpinr {

enum class SetKind { FullBox, HalfSpace };

/// Ordered set of integer frequency d-tuples.
///
/// Tuples are kept in lexicographic order. A full box of radius K holds every
/// k with max|k_j| <= K; the half-space set holds the tuples of the full box
/// that come after the zero tuple, i.e. those whose first nonzero coordinate
/// is positive.
class FrequencySet {
 public:
  static FrequencySet full_box(int K, int d);
  static FrequencySet half_space(int K, int d);

  int dim() const { return dim_; }
  int radius() const { return radius_; }
  SetKind kind() const { return kind_; }
  std::size_t size() const { return freqs_.size(); }
  const std::vector<Freq>& freqs() const { return freqs_; }
  const Freq& operator[](std::size_t i) const { return freqs_[i]; }

  bool contains(const Freq& k) const;
  std::optional<std::size_t> index_of(const Freq& k) const;

  /// n * box(K) = box(n K). Only defined for full boxes.
  FrequencySet dilate(int n) const;

  bool operator==(const FrequencySet& other) const = default;

 private:
  FrequencySet(int K, int d, SetKind kind);

  int dim_ = 1;
  int radius_ = 0;
  SetKind kind_ = SetKind::FullBox;
  std::vector<Freq> freqs_;
};

/// Fourier-features layer x -> [1, sqrt2 cos(2 pi k_j.x) ..., sqrt2 sin(2 pi k_j.x) ...].
class FeatureMap {
 public:
  explicit FeatureMap(int K0 = 0, int d = 1);

  int dim() const { return freqs_.dim(); }
  int max_freq() const { return freqs_.radius(); }
  const FrequencySet& freqs() const { return freqs_; }
  std::size_t num_freqs() const { return freqs_.size(); }
  std::size_t output_dim() const { return 2 * freqs_.size() + 1; }

  Vec eval(std::span<const double> x) const;

  bool operator==(const FeatureMap& other) const = default;

 private:
  FrequencySet freqs_;
};

FeatureMap build_feature_map(int K0, int d);
Vec eval_gamma(const FeatureMap& fm, std::span<const double> x);

/// Complex coefficient vector indexed by a full-box frequency set.
struct Measurements {
  FrequencySet set = FrequencySet::full_box(0, 1);
  CVec vals;

  Measurements() : vals(CVec::Zero(1)) {}
  Measurements(FrequencySet s, CVec v);
  static Measurements zeros(const FrequencySet& s);

  const cplx& at(const Freq& k) const;
  double norm() const { return vals.norm(); }
  /// max_k |vals[-k] - conj(vals[k])|
  double hermitian_error() const;

  /// Restrict or zero-pad onto another full box of the same dimension.
  Measurements resized(int K) const;

  void write_csv(std::ostream& os) const;
  static Measurements read_csv(std::istream& is);
};

/// Real inner product Re<u, v> = Re sum conj(u_k) v_k.
double real_inner(const Measurements& u, const Measurements& v);

/// tau(x) = w0 + sqrt2 sum_j (w1_j cos(2 pi k_j.x) + w2_j sin(2 pi k_j.x)) = w . gamma(x).
struct TrigPoly {
  FeatureMap fm;
  Vec w;

  TrigPoly(FeatureMap f, Vec coeffs);
  double operator()(std::span<const double> x) const;
  double eval_scalar(double x) const {
    return (*this)(std::span<const double>(&x, 1));
  }
  /// Exact Fourier coefficients on the full box of radius K0.
  Measurements coefficients() const;
};

using Field = std::function<double(std::span<const double>)>;

/// Samples f(m / M) for every m in {0..M-1}^d, axis 0 slowest.
std::vector<double> grid_samples(const Field& f, int M, int d);

/// Rectangle-rule coefficients (1/M^d) sum_m f(m/M) e^{-2 pi i k.m/M} on target.
/// Uses an FFT when M is a power of two and separable direct sums
/// otherwise. Throws std::invalid_argument unless M > 2 * target radius.
Measurements dft_coeffs(std::span<const double> samples, int M, const FrequencySet& target);
Measurements dft_coeffs_direct(std::span<const double> samples, int M, const FrequencySet& target);
Measurements dft_coeffs_fft(std::span<const double> samples, int M, const FrequencySet& target);

bool is_power_of_two(std::size_t n);

/// Applies the same 1-D linear map A (m x n) along each of the first d axes of
/// X, whose rows enumerate an n^d tensor (axis 0 slowest) and whose columns are
/// independent batch entries. Returns an (m^d x batch) row-major matrix.
template <class Scalar>
RowMatrix<Scalar> apply_separable(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
    const RowMatrix<Scalar>& X, int d) {
  using Block = Eigen::Map<RowMatrix<Scalar>>;
  using CBlock = Eigen::Map<const RowMatrix<Scalar>>;
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  const Eigen::Index batch = X.cols();
  RowMatrix<Scalar> cur = X;
  for (int axis = 0; axis < d; ++axis) {
    const Eigen::Index outer = static_cast<Eigen::Index>(ipow(m, axis));
    const Eigen::Index inner = static_cast<Eigen::Index>(ipow(n, d - 1 - axis)) * batch;
    RowMatrix<Scalar> next(outer * m * inner / batch, batch);
    for (Eigen::Index o = 0; o < outer; ++o) {
      CBlock src(cur.data() + o * n * inner, n, inner);
      Block dst(next.data() + o * m * inner, m, inner);
      dst.noalias() = A * src;
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace lpinr
