#pragma once

// Enumeration of { g in Gamma : ||g|| < T } for Gamma = SL(n,Z) or a
// principal congruence subgroup Gamma(q).
//
// Search: depth-first over the entries of rows 0..n-2 in increasing order,
// pruning on the partial sum of squares and on primitivity (the first k
// rows extend to a unimodular matrix iff the gcd of their k x k minors is 1).
// Once n-1 rows are fixed, det = sum_j x_j C_j is linear in the last row x,
// so the admissible last rows form the affine lattice x0 + span_Z(rows),
// where C . x0 = 1. Its points inside the remaining norm budget are listed
// by Fincke-Pohst enumeration and re-checked in exact integer arithmetic.

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "orbitlab/error.hpp"
#include "orbitlab/matrix.hpp"

namespace orbitlab {

/// Which lattice to enumerate.
struct SubgroupSpec {
  enum class Kind { full, principal_congruence };

  Kind kind = Kind::full;
  std::int64_t modulus = 1;

  static SubgroupSpec full() { return {}; }
  static SubgroupSpec congruence(std::int64_t q) {
    if (q < 2) throw std::invalid_argument("principal congruence modulus must be >= 2");
    return {Kind::principal_congruence, q};
  }

  /// Whether an integer matrix satisfies the congruence g = I (mod q).
  bool admits(const IntMatrix& g) const {
    if (kind == Kind::full) return true;
    for (int i = 0; i < g.dim(); ++i)
      for (int j = 0; j < g.dim(); ++j)
        if (((g(i, j) - (i == j ? 1 : 0)) % modulus) != 0) return false;
    return true;
  }

  std::string to_string() const {
    return kind == Kind::full ? std::string("full") : "gamma(" + std::to_string(modulus) + ")";
  }
};

/// Element of SL(n,Z) together with its squared Frobenius norm.
class LatticeElement {
 public:
  explicit LatticeElement(const IntMatrix& m) : m_(m), norm_sq_(squared_norm(m)) {
    if (determinant(m) != 1) throw std::invalid_argument("integer matrix does not have determinant 1");
  }

  int dim() const noexcept { return m_.dim(); }
  const IntMatrix& matrix() const noexcept { return m_; }
  std::int64_t operator()(int i, int j) const noexcept { return m_(i, j); }
  std::int64_t norm_sq() const noexcept { return norm_sq_; }

  friend bool operator==(const LatticeElement& a, const LatticeElement& b) { return a.m_ == b.m_; }
  friend bool operator<(const LatticeElement& a, const LatticeElement& b) { return a.m_ < b.m_; }

 private:
  template <class>
  friend class LatticeSearch;
  struct trusted_tag {};
  LatticeElement(const IntMatrix& m, std::int64_t norm_sq, trusted_tag) : m_(m), norm_sq_(norm_sq) {}

  IntMatrix m_;
  std::int64_t norm_sq_;
};

struct EnumerationOptions {
  /// Element-count ceiling; BudgetExceeded is thrown once more are found.
  std::uint64_t max_elements = 100'000'000;
};

/// Largest integer S with S < T^2, computed exactly: T*T = hi + lo with
/// both parts doubles (fma residual), so ties at integer T^2 are excluded.
inline std::int64_t strict_norm_threshold(double T) {
  if (!(T > 0.0) || !(T < 1073741824.0)) throw std::invalid_argument("T must lie in (0, 2^30)");
  const double hi = T * T;
  const double lo = std::fma(T, T, -hi);
  const double fl = std::floor(hi);
  if (fl == hi) return static_cast<std::int64_t>(lo > 0.0 ? hi : hi - 1.0);
  return static_cast<std::int64_t>(fl);
}

namespace detail {

inline std::int64_t isqrt(std::int64_t v) {
  if (v <= 0) return 0;
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

struct Egcd {
  std::int64_t g, x, y;  // g = a x + b y, g >= 0
};

inline Egcd egcd(std::int64_t a, std::int64_t b) {
  std::int64_t old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
  while (r != 0) {
    const std::int64_t q = old_r / r;
    std::int64_t tmp = old_r - q * r;
    old_r = r, r = tmp;
    tmp = old_s - q * s;
    old_s = s, s = tmp;
    tmp = old_t - q * t;
    old_t = t, t = tmp;
  }
  if (old_r < 0) return {-old_r, -old_s, -old_t};
  return {old_r, old_s, old_t};
}

/// Exact determinant of the k x k submatrix on rows 0..k-1 and the given columns.
inline std::int64_t leading_minor(const IntMatrix& g, int k, const int* cols) {
  switch (k) {
    case 1:
      return g(0, cols[0]);
    case 2:
      return g(0, cols[0]) * g(1, cols[1]) - g(0, cols[1]) * g(1, cols[0]);
    case 3:
      return g(0, cols[0]) * (g(1, cols[1]) * g(2, cols[2]) - g(1, cols[2]) * g(2, cols[1])) -
             g(0, cols[1]) * (g(1, cols[0]) * g(2, cols[2]) - g(1, cols[2]) * g(2, cols[0])) +
             g(0, cols[2]) * (g(1, cols[0]) * g(2, cols[1]) - g(1, cols[1]) * g(2, cols[0]));
    default: {
      IntMatrix sub(k);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) sub(i, j) = g(i, cols[j]);
      return determinant(sub);
    }
  }
}

/// gcd of all k x k minors of rows 0..k-1 equals 1.
inline bool rows_primitive(const IntMatrix& g, int k) {
  const int n = g.dim();
  std::int64_t acc = 0;
  int cols[kMaxDim];
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    int c = 0;
    for (int j = 0; j < n; ++j)
      if (mask & (1u << j)) cols[c++] = j;
    acc = std::gcd(acc, leading_minor(g, k, cols));
    if (acc == 1) return true;
  }
  return false;
}

inline std::int64_t mod_floor(std::int64_t a, std::int64_t q) {
  const std::int64_t r = a % q;
  return r < 0 ? r + q : r;
}

}  // namespace detail

/// Depth-first enumerator. The visitor is called with each LatticeElement.
template <class Visitor>
class LatticeSearch {
 public:
  LatticeSearch(int n, double T, const SubgroupSpec& spec, Visitor& visit, std::atomic<std::uint64_t>& emitted,
                std::uint64_t limit)
      : n_(n), smax_(strict_norm_threshold(T)), spec_(spec), visit_(visit), emitted_(emitted), limit_(limit), g_(n) {}

  /// Full search.
  void run() { row_entry(0, 0, 0); }

  /// All admissible first rows in lexicographic order.
  std::vector<std::array<std::int64_t, kMaxDim>> first_rows() {
    collecting_first_rows_ = true;
    first_rows_.clear();
    row_entry(0, 0, 0);
    collecting_first_rows_ = false;
    return std::move(first_rows_);
  }

  /// Search restricted to one given first row.
  void run_from_first_row(const std::array<std::int64_t, kMaxDim>& row) {
    std::int64_t used = 0;
    for (int j = 0; j < n_; ++j) {
      g_(0, j) = row[j];
      used += row[j] * row[j];
    }
    after_row(0, used);
  }

 private:
  std::int64_t residue(int row, int col) const { return row == col ? 1 : 0; }

  void row_entry(int row, int col, std::int64_t used) {
    // every row after this one is a nonzero integer vector
    const std::int64_t reserve = n_ - 1 - row;
    const std::int64_t budget = smax_ - used - reserve;
    if (budget < 0) return;
    const std::int64_t bound = detail::isqrt(budget);
    std::int64_t start = -bound;
    std::int64_t step = 1;
    if (spec_.kind == SubgroupSpec::Kind::principal_congruence) {
      step = spec_.modulus;
      start += detail::mod_floor(residue(row, col) - start, step);
    }
    for (std::int64_t x = start; x <= bound; x += step) {
      g_(row, col) = x;
      const std::int64_t u = used + x * x;
      if (col + 1 < n_) {
        row_entry(row, col + 1, u);
      } else {
        after_row(row, u);
      }
    }
  }

  void after_row(int row, std::int64_t used) {
    bool nonzero = false;
    for (int j = 0; j < n_; ++j) nonzero |= g_(row, j) != 0;
    if (!nonzero || !detail::rows_primitive(g_, row + 1)) return;
    if (collecting_first_rows_) {
      std::array<std::int64_t, kMaxDim> r{};
      for (int j = 0; j < n_; ++j) r[j] = g_(0, j);
      first_rows_.push_back(r);
      return;
    }
    if (row + 1 == n_ - 1) {
      last_row(used);
    } else {
      row_entry(row + 1, 0, used);
    }
  }

  void last_row(std::int64_t used) {
    const int n = n_;
    const int k = n - 1;  // rows already fixed
    const std::int64_t remaining = smax_ - used;
    if (remaining < 1) return;

    // cofactors of the last row: det = sum_j x_j C_j
    std::array<std::int64_t, kMaxDim> cof{};
    {
      int cols[kMaxDim];
      for (int j = 0; j < n; ++j) {
        int c = 0;
        for (int jj = 0; jj < n; ++jj)
          if (jj != j) cols[c++] = jj;
        const std::int64_t minor = detail::leading_minor(g_, k, cols);
        cof[j] = ((k + j) % 2 == 0) ? minor : -minor;
      }
    }
    // particular solution C . x0 = 1
    std::array<std::int64_t, kMaxDim> x0{};
    std::int64_t g = cof[0];
    x0[0] = 1;
    for (int j = 1; j < n; ++j) {
      const detail::Egcd e = detail::egcd(g, cof[j]);
      for (int i = 0; i < j; ++i) x0[i] *= e.x;
      x0[j] = e.y;
      g = e.g;
    }
    if (g < 0) {
      g = -g;
      for (int j = 0; j < n; ++j) x0[j] = -x0[j];
    }
    if (g != 1) return;  // unreachable after the primitivity test
    std::int64_t cof_sq = 0;
    for (int j = 0; j < n; ++j) cof_sq += cof[j] * cof[j];

    // Gram matrix of the fixed rows and the centre of x0 + span(rows)
    double gram[kMaxDim][kMaxDim];
    double rhs[kMaxDim];
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        std::int64_t dot = 0;
        for (int j = 0; j < n; ++j) dot += g_(a, j) * g_(b, j);
        gram[a][b] = static_cast<double>(dot);
      }
      std::int64_t dot = 0;
      for (int j = 0; j < n; ++j) dot += g_(a, j) * x0[j];
      rhs[a] = -static_cast<double>(dot);
    }
    // Cholesky gram = R^t R, R upper triangular
    double chol[kMaxDim][kMaxDim] = {};
    for (int i = 0; i < k; ++i) {
      double d = gram[i][i];
      for (int p = 0; p < i; ++p) d -= chol[p][i] * chol[p][i];
      if (!(d > 0.0)) return;  // rows dependent; cannot happen for primitive rows
      chol[i][i] = std::sqrt(d);
      for (int j = i + 1; j < k; ++j) {
        double v = gram[i][j];
        for (int p = 0; p < i; ++p) v -= chol[p][i] * chol[p][j];
        chol[i][j] = v / chol[i][i];
      }
    }
    // centre c = gram^{-1} rhs via the two triangular solves
    double centre[kMaxDim];
    {
      double y[kMaxDim];
      for (int i = 0; i < k; ++i) {
        double v = rhs[i];
        for (int p = 0; p < i; ++p) v -= chol[p][i] * y[p];
        y[i] = v / chol[i][i];
      }
      for (int i = k - 1; i >= 0; --i) {
        double v = y[i];
        for (int p = i + 1; p < k; ++p) v -= chol[i][p] * centre[p];
        centre[i] = v / chol[i][i];
      }
    }
    const double qmin = 1.0 / static_cast<double>(cof_sq);
    const double budget = static_cast<double>(remaining) - qmin;
    if (budget < -1e-9) return;
    const double slack = 1e-7 * (1.0 + static_cast<double>(remaining));

    candidates_.clear();
    std::int64_t u[kMaxDim];
    fincke_pohst(k - 1, budget + slack, chol, centre, u, x0, remaining);
    std::sort(candidates_.begin(), candidates_.end());
    for (const auto& cand : candidates_) {
      for (int j = 0; j < n; ++j) g_(k, j) = cand.row[j];
      if (!spec_.admits(g_)) continue;
      if (emitted_.fetch_add(1, std::memory_order_relaxed) + 1 > limit_) {
        throw BudgetExceeded("lattice enumeration exceeded " + std::to_string(limit_) + " elements");
      }
      visit_(LatticeElement(g_, used + cand.norm_sq, LatticeElement::trusted_tag{}));
    }
  }

  struct Candidate {
    std::array<std::int64_t, kMaxDim> row{};
    std::int64_t norm_sq = 0;
    friend bool operator<(const Candidate& a, const Candidate& b) { return a.row < b.row; }
  };

  void fincke_pohst(int level, double budget, const double (&chol)[kMaxDim][kMaxDim], const double (&centre)[kMaxDim],
                    std::int64_t (&u)[kMaxDim], const std::array<std::int64_t, kMaxDim>& x0, std::int64_t remaining) {
    const int k = n_ - 1;
    // shift of the level coordinate induced by the already-chosen coordinates
    double shift = 0.0;
    for (int p = level + 1; p < k; ++p) shift += chol[level][p] * (static_cast<double>(u[p]) - centre[p]);
    const double rii = chol[level][level];
    const double c = centre[level] - shift / rii;
    if (budget < 0.0) return;
    const double half_width = std::sqrt(budget) / rii;
    const auto lo = static_cast<std::int64_t>(std::ceil(c - half_width));
    const auto hi = static_cast<std::int64_t>(std::floor(c + half_width));
    for (std::int64_t v = lo; v <= hi; ++v) {
      u[level] = v;
      const double term = rii * (static_cast<double>(v) - c);
      const double rest = budget - term * term;
      if (rest < 0.0) continue;
      if (level > 0) {
        fincke_pohst(level - 1, rest, chol, centre, u, x0, remaining);
        continue;
      }
      Candidate cand;
      std::int64_t norm_sq = 0;
      for (int j = 0; j < n_; ++j) {
        std::int64_t x = x0[j];
        for (int p = 0; p < k; ++p) x += u[p] * g_(p, j);
        cand.row[j] = x;
        norm_sq += x * x;
      }
      if (norm_sq > remaining) continue;
      cand.norm_sq = norm_sq;
      candidates_.push_back(cand);
    }
  }

  int n_;
  std::int64_t smax_;
  SubgroupSpec spec_;
  Visitor& visit_;
  std::atomic<std::uint64_t>& emitted_;
  std::uint64_t limit_;
  IntMatrix g_;
  std::vector<Candidate> candidates_;
  bool collecting_first_rows_ = false;
  std::vector<std::array<std::int64_t, kMaxDim>> first_rows_;
};

namespace detail {
inline void check_enumeration_args(int n, double T) {
  if (n < 2 || n > 4) throw std::invalid_argument("enumeration supports n in {2, 3, 4}");
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
}
}  // namespace detail

/// Streams every element with ||g|| < T to visit(const LatticeElement&),
/// in lexicographic row-major order.
template <class Visitor>
void enumerate_lattice(int n, double T, const SubgroupSpec& spec, Visitor&& visit,
                       const EnumerationOptions& options = {}) {
  detail::check_enumeration_args(n, T);
  std::atomic<std::uint64_t> emitted{0};
  LatticeSearch<std::remove_reference_t<Visitor>> search(n, T, spec, visit, emitted, options.max_elements);
  search.run();
}

/// Parallel enumeration: first rows are dealt out to `threads` workers, each
/// feeding its own shard (a visitor built by make_shard()). Returns the
/// shards for the caller to merge; element order across shards is not
/// defined, totals are.
template <class ShardFactory>
auto enumerate_lattice_parallel(int n, double T, const SubgroupSpec& spec, int threads, ShardFactory make_shard,
                                const EnumerationOptions& options = {}) {
  detail::check_enumeration_args(n, T);
  using Shard = decltype(make_shard());
  threads = std::max(1, threads);
  std::vector<Shard> shards;
  shards.reserve(threads);
  for (int w = 0; w < threads; ++w) shards.push_back(make_shard());

  std::atomic<std::uint64_t> emitted{0};
  std::vector<std::array<std::int64_t, kMaxDim>> roots;
  {
    auto noop = [](const LatticeElement&) {};
    LatticeSearch<decltype(noop)> probe(n, T, spec, noop, emitted, options.max_elements);
    roots = probe.first_rows();
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&](int w) {
    try {
      LatticeSearch<Shard> search(n, T, spec, shards[w], emitted, options.max_elements);
      for (std::size_t i = next++; i < roots.size() && !failed.load(); i = next++) {
        search.run_from_first_row(roots[i]);
      }
    } catch (...) {
      failed = true;
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return shards;
}

/// |{ g in Gamma : ||g|| < T }|.
inline std::uint64_t count_norm_ball(int n, double T, const SubgroupSpec& spec, const EnumerationOptions& options = {},
                                     int threads = 1) {
  struct Counter {
    std::uint64_t count = 0;
    void operator()(const LatticeElement&) { ++count; }
  };
  if (threads <= 1) {
    Counter c;
    enumerate_lattice(n, T, spec, c, options);
    return c.count;
  }
  std::uint64_t total = 0;
  for (const Counter& c : enumerate_lattice_parallel(n, T, spec, threads, [] { return Counter{}; }, options)) {
    total += c.count;
  }
  return total;
}

// Raw dump format: one element per line, row-major, space-separated.

inline void write_raw(std::ostream& os, const IntMatrix& g) {
  for (int i = 0; i < g.dim(); ++i)
    for (int j = 0; j < g.dim(); ++j) os << ((i | j) ? " " : "") << g(i, j);
  os << '\n';
}

inline IntMatrix parse_raw_line(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::int64_t> v;
  std::int64_t x;
  while (in >> x) v.push_back(x);
  if (!in.eof()) throw ConfigError("raw dump line has a non-integer field: " + line);
  int n = 0;
  while (static_cast<std::size_t>(n * n) < v.size()) ++n;
  if (static_cast<std::size_t>(n * n) != v.size() || n < 2 || n > kMaxDim) {
    throw ConfigError("raw dump line is not an n x n matrix: " + line);
  }
  IntMatrix g(n);
  for (int k = 0; k < n * n; ++k) g(k / n, k % n) = v[k];
  return g;
}

}  // namespace orbitlab
