#pragma once

// Haar volumes of norm balls in the Borel subgroup B° and samplers for the
// right and left Haar measures restricted to them.
//
// With b = a(s) n(t), the right Haar measure is e^{2 delta(s)} ds dt and the
// left one is ds dt. Integrating t over the ellipsoid
//   sum_{i<j} e^{2 s_i} t_ij^2 < T^2 - N(s)
// (volume c_n (T^2 - N(s))^{m/2} e^{-delta(s)}, m = n(n-1)/2) leaves the
// (n-1)-dimensional s-integral
//   rho(B_T^C) = c_n int_{A_T^C} (T^2 - N(s))^{m/2} e^{delta(s)} ds,
// with c_n = pi^{m/2} / Gamma(1 + m/2) and A_T^C = { N(s) < T^2, s_i > C
// for i < n }. All T-powers are handled in log space.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include "orbitlab/error.hpp"
#include "orbitlab/group.hpp"
#include "orbitlab/quadrature.hpp"

namespace orbitlab {

inline constexpr double kNoCone = -std::numeric_limits<double>::infinity();

/// gamma_n = pi^{n(n-1)/4} / (2^{n-1} Gamma((n^2-n+2)/2)) * prod_{k=1}^{n-1} Gamma((n-k)/2),
/// the leading coefficient of rho(B_T°) ~ gamma_n T^{n^2-n}.
inline double gamma_n(int n) {
  if (n < 2 || n > 10) throw std::invalid_argument("gamma_n: n must lie in [2, 10]");
  const double nn = n;
  double log_value = nn * (nn - 1) / 4.0 * std::log(std::numbers::pi) - (nn - 1) * std::numbers::ln2 -
                     std::lgamma((nn * nn - nn + 2) / 2.0);
  for (int k = 1; k <= n - 1; ++k) log_value += std::lgamma((nn - k) / 2.0);
  return std::exp(log_value);
}

/// log c_n, c_n = pi^{n(n-1)/4} / Gamma(1 + n(n-1)/4): volume of the unit
/// ball in R^{n(n-1)/2}.
inline double log_unit_ball_volume(int n) {
  const double half_m = n * (n - 1) / 4.0;
  return half_m * std::log(std::numbers::pi) - std::lgamma(1.0 + half_m);
}

struct VolumeResult {
  double value = 0.0;             ///< rho(B_T^C)
  double quadrature_error = 0.0;  ///< error bound on value
  double normalized = 0.0;        ///< value / T^{n^2-n}
  double normalized_error = 0.0;
  double T = 0.0;
  double C = kNoCone;
  int n = 0;
};

namespace detail {

/// Minimum of sum_j e^{2 s_j} over r coordinates summing to `total`, where
/// the first r-1 of them are bounded below by C and the last is free.
inline double min_remaining(int r, double total, double C) {
  if (r <= 0) return 0.0;
  if (r == 1) return std::exp(2.0 * total);
  const double even = total / r;
  if (even >= C) return r * std::exp(2.0 * even);
  return (r - 1) * std::exp(2.0 * C) + std::exp(2.0 * (total - (r - 1) * C));
}

struct Interval1 {
  double lo, hi;
  bool empty;
};

/// Sublevel interval { x in [lo, hi] : phi(x) < budget } of a convex phi
/// with phi(hi) >= budget.
template <class Phi>
Interval1 convex_sublevel(Phi phi, double lo, double hi, double budget) {
  double a = lo, b = hi;
  constexpr double kInvPhi = 0.6180339887498949;
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    const double x1 = b - kInvPhi * (b - a);
    const double x2 = a + kInvPhi * (b - a);
    if (phi(x1) < phi(x2)) {
      b = x2;
    } else {
      a = x1;
    }
  }
  const double xmin = 0.5 * (a + b);
  if (!(phi(xmin) < budget)) return {0, 0, true};
  auto root = [&](double inside, double outside) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      if (mid == inside || mid == outside) break;
      (phi(mid) < budget ? inside : outside) = mid;
    }
    return inside;
  };
  const double left = phi(lo) < budget ? lo : root(xmin, lo);
  const double right = root(xmin, hi);
  return {left, right, false};
}

/// Nested integration of c_n (1 - N/T^2)^{m/2} exp(delta(s) - (n^2-n-m) log T)
/// over A_T^C; the result is rho(B_T^C) / T^{n^2-n}.
class BallVolumeIntegrand {
 public:
  BallVolumeIntegrand(int n, double T, double C, double rel_tol)
      : n_(n), T2_(T * T), logT_(std::log(T)), C_(C), rel_tol_(rel_tol) {
    const int m = pair_count(n);
    half_m_ = m / 2.0;
    log_prefactor_ = log_unit_ball_volume(n) - (n * n - n - m) * logT_;
    // absolute floor on the normalized scale, outermost level only: inner
    // errors are integrated over the outer range and must stay relative
    abs_floor_ = 1e-3 * rel_tol * gamma_n(n);
  }

  Estimate integrate() { return level(0, 0.0, 0.0); }

 private:
  // fixed s_0..s_{k-1}: their e^{2s} sum and their plain sum
  Estimate level(int k, double used, double fixed_sum) {
    const int r = n_ - 1 - k;  // coordinates after s_k, including s_{n-1}
    const double budget = T2_ - used;
    if (budget <= 0.0) return {};
    const double total = -fixed_sum;
    const double Ck = C_;
    auto phi = [&](double x) { return std::exp(2.0 * x) + min_remaining(r, total - x, Ck); };
    double lo = total - r * logT_ - 1.0;
    if (std::isfinite(C_)) lo = std::max(lo, C_);
    const double hi = logT_;
    if (!(lo < hi)) return {};
    const Interval1 iv = convex_sublevel(phi, lo, hi, budget);
    if (iv.empty || !(iv.hi > iv.lo)) return {};

    QuadratureOptions opt;
    opt.rel_tol = rel_tol_ * (k == n_ - 2 ? 0.1 : 1.0);
    opt.abs_tol = k == 0 ? abs_floor_ : 0.0;
    opt.max_intervals = 2000;
    if (k == n_ - 2) {
      auto leaf = [&](double x) {
        s_[k] = x;
        s_[n_ - 1] = total - x;
        const double N = used + std::exp(2.0 * x) + std::exp(2.0 * s_[n_ - 1]);
        const double frac = 1.0 - N / T2_;
        if (!(frac > 0.0)) return 0.0;
        double d = 0.0;
        for (int i = 0; i < n_; ++i) d += (n_ - 1 - i) * s_[i];
        return std::exp(log_prefactor_ + half_m_ * std::log(frac) + d);
      };
      return integrate_or_partial(leaf, iv, opt);
    }
    auto inner = [&, k](double x) {
      s_[k] = x;
      return level(k + 1, used + std::exp(2.0 * x), fixed_sum + x);
    };
    return integrate_or_partial(inner, iv, opt);
  }

  template <class F>
  Estimate integrate_or_partial(F& f, const Interval1& iv, const QuadratureOptions& opt) {
    try {
      return integrate_adaptive(f, iv.lo, iv.hi, opt);
    } catch (const QuadratureError& e) {
      converged_ = false;
      return {e.partial_value(), e.partial_error()};
    }
  }

 public:
  bool converged() const { return converged_; }
  double abs_floor() const { return abs_floor_; }

 private:
  int n_;
  double T2_, logT_, C_, rel_tol_;
  double half_m_ = 0.0, log_prefactor_ = 0.0, abs_floor_ = 0.0;
  std::array<double, kMaxDim> s_{};
  bool converged_ = true;
};

}  // namespace detail

/// rho(B_T^C) by nested adaptive quadrature; C = kNoCone for all of B_T°.
/// Throws QuadratureError (carrying the partial value) if the requested
/// relative tolerance is not reached.
inline VolumeResult rho_ball_volume(int n, double T, double C = kNoCone, double rel_tol = 0.0) {
  if (n < 2 || n > 4) throw std::invalid_argument("rho_ball_volume: n must lie in [2, 4]");
  if (!(T > 0.0)) throw std::invalid_argument("rho_ball_volume: T must be positive");
  if (std::isnan(C) || C == std::numeric_limits<double>::infinity()) throw std::invalid_argument("bad cone parameter");
  if (rel_tol <= 0.0) rel_tol = n == 2 ? 1e-12 : (n == 3 ? 1e-9 : 1e-6);

  VolumeResult r;
  r.T = T;
  r.C = C;
  r.n = n;
  if (T * T <= n) return r;  // N(s) >= n: empty domain

  detail::BallVolumeIntegrand integrand(n, T, C, rel_tol);
  const Estimate est = integrand.integrate();
  const double log_scale = (n * n - n) * std::log(T);
  r.normalized = est.value;
  r.normalized_error = est.error;
  r.value = est.value * std::exp(log_scale);
  r.quadrature_error = est.error * std::exp(log_scale);
  // the total error budget is the sum of nested tolerances
  if (!integrand.converged() || est.error > 10.0 * (n - 1) * (rel_tol * std::abs(est.value) + integrand.abs_floor())) {
    throw QuadratureError("rho_ball_volume: tolerance not reached", r.value, r.quadrature_error);
  }
  return r;
}

struct Fraction {
  double value = 0.0;
  double error = 0.0;
};

/// rho(B_T^C) / rho(B_T°).
inline Fraction cone_fraction(int n, double T, double C, double rel_tol = 0.0) {
  if (!std::isfinite(C)) throw std::invalid_argument("cone_fraction: C must be finite");
  const VolumeResult cone = rho_ball_volume(n, T, C, rel_tol);
  const VolumeResult all = rho_ball_volume(n, T, kNoCone, rel_tol);
  if (all.normalized <= 0.0) return {0.0, 0.0};
  const double f = cone.normalized / all.normalized;
  const double err = f * (cone.normalized_error / std::max(cone.normalized, 1e-300) +
                          all.normalized_error / all.normalized);
  return {std::min(f, 1.0), err};
}

enum class Chirality { right, left };

inline const char* to_string(Chirality c) { return c == Chirality::right ? "right" : "left"; }

/// Draws b = a(s) n(t) from the right (density e^{2 delta(s)} ds dt) or left
/// (ds dt) Haar measure of B° restricted to ||b|| < T and normalized.
///
/// s is rejection-sampled from its marginal e^{+-delta(s)} (T^2 - N(s))^{m/2}:
/// the envelope is T^m times a product of truncated exponentials
/// e^{(n-1-k) s_k} on the coordinate projections of { N(s) < T^2 }, and a
/// proposal is accepted with probability (1 - N(s)/T^2)^{m/2}. Then t is
/// uniform in the ellipsoid sum e^{2 s_i} t_ij^2 < T^2 - N(s).
///
/// Left Haar: with sum s = 0, -delta(s) = delta(reversed s) and N is
/// symmetric, so the left marginal is the right one with s reversed.
class HaarBallSampler {
 public:
  static constexpr double kLowAcceptance = 1e-4;

  HaarBallSampler(int n, double T, Chirality chirality) : n_(n), T_(T), chirality_(chirality) {
    if (n < 2 || n > kMaxDim) throw std::invalid_argument("HaarBallSampler: n out of range");
    if (!(T * T > n)) throw std::invalid_argument("HaarBallSampler: need T > sqrt(n)");
    T2_ = T * T;
    m_ = pair_count(n);
    const double logT = std::log(T);
    // projection of { N(s) < T^2 } onto one coordinate
    auto phi = [n](double x) { return std::exp(2.0 * x) + (n - 1) * std::exp(-2.0 * x / (n - 1)); };
    const detail::Interval1 box = detail::convex_sublevel(phi, -(n - 1) * logT - 1.0, logT, T2_);
    for (int k = 0; k < n - 1; ++k) {
      const double coef = n - 1 - k;
      rate_[k] = coef;
      lo_[k] = box.lo;
      width_[k] = box.hi - box.lo;
    }
  }

  int dim() const noexcept { return n_; }
  double T() const noexcept { return T_; }
  Chirality chirality() const noexcept { return chirality_; }

  template <class Rng>
  BorelCoords sample(Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::array<double, kMaxDim> s{};
    constexpr std::uint64_t kMaxAttempts = 1'000'000'000;
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt >= kMaxAttempts) throw NumericError("HaarBallSampler: no acceptance after 1e9 proposals");
      ++proposals_;
      double sum = 0.0;
      for (int k = 0; k < n_ - 1; ++k) {
        const double c = rate_[k];
        const double u = unif(rng);
        s[k] = lo_[k] + std::log1p(u * std::expm1(c * width_[k])) / c;
        sum += s[k];
      }
      s[n_ - 1] = -sum;
      double N = 0.0;
      for (int i = 0; i < n_; ++i) N += std::exp(2.0 * s[i]);
      const double frac = 1.0 - N / T2_;
      if (!(frac > 0.0)) continue;
      if (unif(rng) >= std::pow(frac, m_ / 2.0)) continue;
      ++accepted_;
      if (chirality_ == Chirality::left) std::reverse(s.begin(), s.begin() + n_);

      std::array<double, kMaxPairs> t{};
      std::normal_distribution<double> gauss(0.0, 1.0);
      double norm = 0.0;
      for (int p = 0; p < m_; ++p) {
        t[p] = gauss(rng);
        norm += t[p] * t[p];
      }
      const double radius = std::sqrt(T2_ - N) * std::pow(unif(rng), 1.0 / m_) / std::sqrt(norm);
      for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j) t[pair_index(i, j, n_)] *= radius * std::exp(-s[i]);
      BorelCoords b(std::span<const double>(s.data(), n_), std::span<const double>(t.data(), m_));
      if (!(borel_norm_sq(b) < T2_)) continue;  // rounding at the rim
      return b;
    }
  }

  std::uint64_t proposals() const noexcept { return proposals_; }
  std::uint64_t accepted() const noexcept { return accepted_; }
  double acceptance_rate() const noexcept {
    return proposals_ ? static_cast<double>(accepted_) / static_cast<double>(proposals_) : 1.0;
  }
  /// True once enough proposals were made to tell that acceptance < 1e-4.
  bool low_acceptance() const noexcept { return proposals_ >= 100'000 && acceptance_rate() < kLowAcceptance; }

 private:
  int n_;
  double T_, T2_ = 0.0;
  Chirality chirality_;
  int m_ = 1;
  std::array<double, kMaxDim> rate_{}, lo_{}, width_{};
  std::uint64_t proposals_ = 0, accepted_ = 0;
};

}  // namespace orbitlab
