#pragma once

// SL(n,R) core: the Frobenius norm, Borel coordinates b = a(s) n(t), the
// Iwasawa factorization g = k a(s) n(t), and the scalar functions of the
// diagonal exponents used by the volume and sampling code.

#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include "orbitlab/error.hpp"
#include "orbitlab/matrix.hpp"

namespace orbitlab {

inline constexpr int kMaxPairs = kMaxDim * (kMaxDim - 1) / 2;

/// Number of strictly-upper-triangular positions of an n x n matrix.
constexpr int pair_count(int n) noexcept { return n * (n - 1) / 2; }

/// Row-major index of position (i, j), i < j, among the upper-triangular pairs.
constexpr int pair_index(int i, int j, int n) noexcept {
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

namespace detail {

inline double sum_tolerance(std::span<const double> s) {
  double scale = 1.0;
  for (double v : s) scale = std::max(scale, std::abs(v));
  return 1e-12 * scale;
}

inline void check_dim(int n) {
  if (n < 2 || n > kMaxDim) throw std::invalid_argument("dimension must be in [2, 6], got " + std::to_string(n));
}

}  // namespace detail

/// Element of SL(n,R): a real matrix whose determinant is 1 to within 1e-9.
class GroupElement {
 public:
  static constexpr double kDetTolerance = 1e-9;

  explicit GroupElement(const RealMatrix& m) : m_(m) {
    detail::check_dim(m.dim());
    const double det = determinant(m);
    if (!(std::abs(det - 1.0) <= kDetTolerance)) {
      throw std::invalid_argument("matrix is not in SL(n,R): det = " + std::to_string(det));
    }
  }

  static GroupElement identity(int n) { return GroupElement(RealMatrix::identity(n)); }

  int dim() const noexcept { return m_.dim(); }
  const RealMatrix& matrix() const noexcept { return m_; }
  double operator()(int i, int j) const noexcept { return m_(i, j); }

  friend GroupElement operator*(const GroupElement& a, const GroupElement& b) {
    return GroupElement(a.m_ * b.m_);
  }

 private:
  RealMatrix m_;
};

/// Diagonal exponents s (summing to zero) and unipotent coordinates t_ij,
/// i < j, of b = a(s) n(t) in the identity component of the Borel subgroup.
class BorelCoords {
 public:
  BorelCoords() = default;

  BorelCoords(std::span<const double> s, std::span<const double> t) {
    detail::check_dim(static_cast<int>(s.size()));
    n_ = static_cast<int>(s.size());
    if (static_cast<int>(t.size()) != pair_count(n_)) {
      throw std::invalid_argument("t must have n(n-1)/2 entries");
    }
    const double sum = std::accumulate(s.begin(), s.end(), 0.0);
    if (!(std::abs(sum) <= detail::sum_tolerance(s))) {
      throw std::invalid_argument("diagonal exponents must sum to zero, sum = " + std::to_string(sum));
    }
    std::copy(s.begin(), s.end(), s_.begin());
    std::copy(t.begin(), t.end(), t_.begin());
  }

  int dim() const noexcept { return n_; }
  std::span<const double> s() const noexcept { return {s_.data(), static_cast<std::size_t>(n_)}; }
  std::span<const double> t() const noexcept {
    return {t_.data(), static_cast<std::size_t>(pair_count(n_))};
  }
  double s(int i) const noexcept { return s_[i]; }
  double t(int i, int j) const noexcept { return t_[pair_index(i, j, n_)]; }

 private:
  int n_ = 0;
  std::array<double, kMaxDim> s_{};
  std::array<double, kMaxPairs> t_{};
};

/// Result of iwasawa_decompose: g = k a(s) n(t), k in SO(n).
struct IwasawaCoords {
  RealMatrix k;
  BorelCoords b;
};

/// Positive roots alpha_ij(s) = s_i - s_j on the diagonal Lie algebra.
class RootData {
 public:
  explicit RootData(int n) : n_(n) { detail::check_dim(n); }

  int dim() const noexcept { return n_; }
  int count() const noexcept { return pair_count(n_); }

  /// alpha_ij(s); defined for any ordered pair, antisymmetric in (i, j).
  double alpha(std::span<const double> s, int i, int j) const { return s[i] - s[j]; }

 private:
  int n_;
};

/// diag(e^{s_1}, ..., e^{s_n}).
inline RealMatrix a_of_s(std::span<const double> s) {
  RealMatrix a(static_cast<int>(s.size()));
  for (int i = 0; i < a.dim(); ++i) a(i, i) = std::exp(s[i]);
  return a;
}

/// Unipotent upper-triangular matrix with entries t_ij above the diagonal.
inline RealMatrix n_of_t(int n, std::span<const double> t) {
  if (static_cast<int>(t.size()) != pair_count(n)) throw std::invalid_argument("t has wrong length");
  RealMatrix u = RealMatrix::identity(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) u(i, j) = t[pair_index(i, j, n)];
  return u;
}

/// The matrix a(s) n(t).
inline RealMatrix borel_matrix(const BorelCoords& b) { return a_of_s(b.s()) * n_of_t(b.dim(), b.t()); }

/// Frobenius norm (Tr g^t g)^{1/2}.
inline double frobenius_norm(const RealMatrix& g) { return std::sqrt(squared_norm(g)); }
inline double frobenius_norm(const GroupElement& g) { return frobenius_norm(g.matrix()); }

/// QR factorization by Householder reflections, normalized so that the
/// diagonal of R is nonnegative.
struct QR {
  RealMatrix q;
  RealMatrix r;
};

inline QR qr_positive(const RealMatrix& g) {
  const int n = g.dim();
  RealMatrix r = g;
  RealMatrix q = RealMatrix::identity(n);
  std::array<double, kMaxDim> v{};
  for (int k = 0; k < n - 1; ++k) {
    double norm_x = 0.0;
    for (int i = k; i < n; ++i) norm_x += r(i, k) * r(i, k);
    norm_x = std::sqrt(norm_x);
    if (norm_x == 0.0) continue;
    const double alpha = r(k, k) > 0 ? -norm_x : norm_x;
    for (int i = 0; i < n; ++i) v[i] = 0.0;
    v[k] = r(k, k) - alpha;
    for (int i = k + 1; i < n; ++i) v[i] = r(i, k);
    double vv = 0.0;
    for (int i = k; i < n; ++i) vv += v[i] * v[i];
    if (vv == 0.0) continue;
    // R <- H R, Q <- Q H with H = I - 2 v v^t / (v^t v)
    for (int j = 0; j < n; ++j) {
      double dot = 0.0;
      for (int i = k; i < n; ++i) dot += v[i] * r(i, j);
      const double f = 2.0 * dot / vv;
      for (int i = k; i < n; ++i) r(i, j) -= f * v[i];
    }
    for (int i = 0; i < n; ++i) {
      double dot = 0.0;
      for (int j = k; j < n; ++j) dot += q(i, j) * v[j];
      const double f = 2.0 * dot / vv;
      for (int j = k; j < n; ++j) q(i, j) -= f * v[j];
    }
    for (int i = k + 1; i < n; ++i) r(i, k) = 0.0;
  }
  for (int i = 0; i < n; ++i) {
    if (r(i, i) < 0.0) {
      for (int j = 0; j < n; ++j) r(i, j) = -r(i, j);
      for (int j = 0; j < n; ++j) q(j, i) = -q(j, i);
    }
  }
  return {q, r};
}

/// Unique factorization g = k a(s) n(t) with k special orthogonal and
/// a(s) positive diagonal. The diagonal exponents are re-centred to sum to
/// zero, absorbing the (at most 1e-9) determinant defect of g.
inline IwasawaCoords iwasawa_decompose(const GroupElement& g) {
  const int n = g.dim();
  auto [q, r] = qr_positive(g.matrix());
  std::array<double, kMaxDim> s{};
  std::array<double, kMaxPairs> t{};
  for (int i = 0; i < n; ++i) {
    if (!(r(i, i) > 0.0) || !std::isfinite(r(i, i))) {
      throw NumericError("iwasawa_decompose: singular factor at working precision");
    }
    s[i] = std::log(r(i, i));
  }
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += s[i];
  mean /= n;
  for (int i = 0; i < n; ++i) s[i] -= mean;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) t[pair_index(i, j, n)] = r(i, j) / r(i, i);
  return {q, BorelCoords(std::span<const double>(s.data(), n), std::span<const double>(t.data(), pair_count(n)))};
}

/// k a(s) n(t).
inline RealMatrix iwasawa_reconstruct(const IwasawaCoords& c) { return c.k * borel_matrix(c.b); }

/// delta(s) = (1/2) sum_{i<j} alpha_ij(s) = sum_k (n-k) s_k (1-based k).
inline double delta(std::span<const double> s) {
  const double sum = std::accumulate(s.begin(), s.end(), 0.0);
  if (!(std::abs(sum) <= detail::sum_tolerance(s))) {
    throw std::invalid_argument("delta: exponents must sum to zero");
  }
  const int n = static_cast<int>(s.size());
  double d = 0.0;
  for (int k = 0; k < n; ++k) d += (n - 1 - k) * s[k];
  return d;
}

/// N(s) = sum_i e^{2 s_i}.
inline double n_of_s(std::span<const double> s) {
  double total = 0.0;
  for (double v : s) {
    if (!(v <= 300.0)) throw std::invalid_argument("n_of_s: exponent above 300 (or NaN)");
    total += std::exp(2.0 * v);
  }
  return total;
}

/// ||a(s) n(t)||^2 = sum_i e^{2 s_i} (1 + sum_{j>i} t_ij^2).
inline double borel_norm_sq(const BorelCoords& b) {
  const int n = b.dim();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 1.0;
    for (int j = i + 1; j < n; ++j) row += b.t(i, j) * b.t(i, j);
    total += std::exp(2.0 * b.s(i)) * row;
  }
  return total;
}

/// Coordinates of a(s) n(t) a(s)^{-1} = n(e^{s_i - s_j} t_ij).
inline std::array<double, kMaxPairs> adjoint_a_on_n(std::span<const double> s, std::span<const double> t) {
  const int n = static_cast<int>(s.size());
  if (static_cast<int>(t.size()) != pair_count(n)) throw std::invalid_argument("t has wrong length");
  std::array<double, kMaxPairs> out{};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const int p = pair_index(i, j, n);
      out[p] = std::exp(s[i] - s[j]) * t[p];
    }
  return out;
}

/// exp(X) for a random traceless X with entries uniform in [-1, 1].
template <class Rng>
GroupElement random_group_element(int n, Rng& rng) {
  detail::check_dim(n);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RealMatrix x(n);
  double trace = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      x(i, j) = u(rng);
      if (i == j) trace += x(i, j);
    }
  for (int i = 0; i < n; ++i) x(i, i) -= trace / n;
  return GroupElement(expm(x));
}

/// Haar-distributed element of SO(n): orthonormalize a Gaussian matrix with
/// positive-diagonal triangular factor, then flip one column if det = -1.
template <class Rng>
RealMatrix haar_random_rotation(int n, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  RealMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = z(rng);
  RealMatrix q = qr_positive(m).q;
  if (determinant(q) < 0.0) {
    for (int i = 0; i < n; ++i) q(i, 0) = -q(i, 0);
  }
  return q;
}

}  // namespace orbitlab
