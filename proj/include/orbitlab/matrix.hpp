#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <stdexcept>
#include <string>

#include "orbitlab/error.hpp"

namespace orbitlab {

/// Largest supported matrix dimension. Storage is a fixed-size array so
/// matrices stay on the stack.
inline constexpr int kMaxDim = 6;

/// Square n x n matrix with fixed capacity kMaxDim x kMaxDim, row-major.
template <class T>
class SquareMatrix {
 public:
  using value_type = T;

  SquareMatrix() = default;

  explicit SquareMatrix(int n) : n_(n) {
    if (n < 1 || n > kMaxDim) {
      throw std::invalid_argument("matrix dimension out of range: " + std::to_string(n));
    }
  }

  /// Row-major initializer; the length must be a perfect square.
  SquareMatrix(std::initializer_list<T> row_major) {
    int n = 0;
    while (static_cast<std::size_t>(n * n) < row_major.size()) ++n;
    if (static_cast<std::size_t>(n * n) != row_major.size() || n < 1 || n > kMaxDim) {
      throw std::invalid_argument("initializer is not an n x n matrix with 1 <= n <= 6");
    }
    n_ = n;
    int k = 0;
    for (const T& v : row_major) {
      (*this)(k / n, k % n) = v;
      ++k;
    }
  }

  static SquareMatrix identity(int n) {
    SquareMatrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  int dim() const noexcept { return n_; }

  T& operator()(int i, int j) noexcept { return data_[i * kMaxDim + j]; }
  const T& operator()(int i, int j) const noexcept { return data_[i * kMaxDim + j]; }

  friend bool operator==(const SquareMatrix& a, const SquareMatrix& b) {
    if (a.n_ != b.n_) return false;
    for (int i = 0; i < a.n_; ++i)
      for (int j = 0; j < a.n_; ++j)
        if (a(i, j) != b(i, j)) return false;
    return true;
  }

  /// Lexicographic comparison of the row-major entries.
  friend bool operator<(const SquareMatrix& a, const SquareMatrix& b) {
    if (a.n_ != b.n_) return a.n_ < b.n_;
    for (int i = 0; i < a.n_; ++i)
      for (int j = 0; j < a.n_; ++j)
        if (a(i, j) != b(i, j)) return a(i, j) < b(i, j);
    return false;
  }

  SquareMatrix transposed() const {
    SquareMatrix t(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
    if (a.n_ != b.n_) throw std::invalid_argument("matrix dimension mismatch");
    SquareMatrix c(a.n_);
    for (int i = 0; i < a.n_; ++i)
      for (int k = 0; k < a.n_; ++k) {
        const T aik = a(i, k);
        for (int j = 0; j < a.n_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend SquareMatrix operator+(const SquareMatrix& a, const SquareMatrix& b) {
    SquareMatrix c = a;
    for (int i = 0; i < a.n_; ++i)
      for (int j = 0; j < a.n_; ++j) c(i, j) += b(i, j);
    return c;
  }

  friend SquareMatrix operator-(const SquareMatrix& a, const SquareMatrix& b) {
    SquareMatrix c = a;
    for (int i = 0; i < a.n_; ++i)
      for (int j = 0; j < a.n_; ++j) c(i, j) -= b(i, j);
    return c;
  }

  friend SquareMatrix operator*(T s, const SquareMatrix& a) {
    SquareMatrix c = a;
    for (int i = 0; i < a.n_; ++i)
      for (int j = 0; j < a.n_; ++j) c(i, j) *= s;
    return c;
  }

  friend std::ostream& operator<<(std::ostream& os, const SquareMatrix& m) {
    os << '[';
    for (int i = 0; i < m.n_; ++i) {
      os << (i ? "; " : "");
      for (int j = 0; j < m.n_; ++j) os << (j ? " " : "") << m(i, j);
    }
    return os << ']';
  }

 private:
  int n_ = 0;
  std::array<T, kMaxDim * kMaxDim> data_{};
};

using RealMatrix = SquareMatrix<double>;
using IntMatrix = SquareMatrix<std::int64_t>;

inline RealMatrix to_real(const IntMatrix& m) {
  RealMatrix r(m.dim());
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) r(i, j) = static_cast<double>(m(i, j));
  return r;
}

/// Sum of squared entries.
template <class T>
T squared_norm(const SquareMatrix<T>& m) {
  T s{};
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) s += m(i, j) * m(i, j);
  return s;
}

/// Determinant by LU with partial pivoting.
inline double determinant(const RealMatrix& m) {
  const int n = m.dim();
  RealMatrix a = m;
  double det = 1.0;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    if (a(p, c) == 0.0) return 0.0;
    if (p != c) {
      for (int j = 0; j < n; ++j) std::swap(a(p, j), a(c, j));
      det = -det;
    }
    det *= a(c, c);
    for (int r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      for (int j = c; j < n; ++j) a(r, j) -= f * a(c, j);
    }
  }
  return det;
}

/// Exact integer determinant (fraction-free Bareiss elimination in 128-bit
/// arithmetic). Throws NumericError if an intermediate overflows.
inline std::int64_t determinant(const IntMatrix& m) {
  using wide = __int128;
  const int n = m.dim();
  std::array<wide, kMaxDim * kMaxDim> a{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * kMaxDim + j] = m(i, j);
  auto at = [&a](int i, int j) -> wide& { return a[i * kMaxDim + j]; };

  int sign = 1;
  wide prev = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (at(k, k) == 0) {
      int p = k + 1;
      while (p < n && at(p, k) == 0) ++p;
      if (p == n) return 0;
      for (int j = 0; j < n; ++j) std::swap(at(k, j), at(p, j));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      for (int j = k + 1; j < n; ++j) {
        wide x, y;
        if (__builtin_mul_overflow(at(i, j), at(k, k), &x) ||
            __builtin_mul_overflow(at(i, k), at(k, j), &y) || __builtin_sub_overflow(x, y, &x)) {
          throw NumericError("integer determinant overflow");
        }
        at(i, j) = x / prev;
      }
    }
    prev = at(k, k);
  }
  const wide d = sign * at(n - 1, n - 1);
  if (d > INT64_MAX || d < INT64_MIN) throw NumericError("integer determinant overflow");
  return static_cast<std::int64_t>(d);
}

/// Matrix exponential by scaling and squaring with a degree-18 Taylor
/// polynomial. Adequate for the moderate-norm arguments used here.
inline RealMatrix expm(const RealMatrix& x) {
  const int n = x.dim();
  const double norm = std::sqrt(squared_norm(x));
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const RealMatrix y = std::ldexp(1.0, -squarings) * x;

  RealMatrix result = RealMatrix::identity(n);
  RealMatrix term = RealMatrix::identity(n);
  for (int k = 1; k <= 18; ++k) {
    term = (1.0 / k) * (term * y);
    result = result + term;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

}  // namespace orbitlab
