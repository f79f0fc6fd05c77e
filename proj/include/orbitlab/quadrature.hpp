#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "orbitlab/error.hpp"

namespace orbitlab {

/// Integral value with an error estimate.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

struct QuadratureOptions {
  double abs_tol = 0.0;
  double rel_tol = 1e-10;
  int max_intervals = 4000;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod pair. Boost stores the nonnegative nodes;
// the Gauss nodes are the even-indexed Kronrod nodes, index 0 is the centre.
struct GaussKronrod15 {
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using Gauss = boost::math::quadrature::gauss<double, 7>;
  decltype(Kronrod::abscissa()) xk = Kronrod::abscissa();
  decltype(Kronrod::weights()) wk = Kronrod::weights();
  decltype(Gauss::weights()) wg = Gauss::weights();
};

template <class F>
Estimate eval_point(F& f, double x) {
  if constexpr (std::is_same_v<std::invoke_result_t<F&, double>, Estimate>) {
    return f(x);
  } else {
    return {static_cast<double>(f(x)), 0.0};
  }
}

struct Interval {
  double a, b;
  Estimate est;
  friend bool operator<(const Interval& x, const Interval& y) { return x.est.error < y.est.error; }
};

template <class F>
Estimate gk15(F& f, double a, double b) {
  static const GaussKronrod15 rule;
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const Estimate fc = eval_point(f, centre);
  double kronrod = rule.wk[0] * fc.value;
  double gauss = rule.wg[0] * fc.value;
  double inner_err = rule.wk[0] * fc.error;
  for (std::size_t i = 1; i < rule.xk.size(); ++i) {
    const double dx = half * rule.xk[i];
    const Estimate lo = eval_point(f, centre - dx);
    const Estimate hi = eval_point(f, centre + dx);
    kronrod += rule.wk[i] * (lo.value + hi.value);
    inner_err += rule.wk[i] * (lo.error + hi.error);
    if (i % 2 == 0) gauss += rule.wg[i / 2] * (lo.value + hi.value);
  }
  return {kronrod * half, std::abs((kronrod - gauss) * half) + inner_err * std::abs(half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature on [a, b]: repeatedly bisect
/// the interval with the largest error until the summed error meets
/// max(abs_tol, rel_tol |I|). f may return double, or Estimate when it is
/// itself an integral; inner errors are integrated into the outer bound.
/// Throws QuadratureError (with the partial result) on non-convergence.
template <class F>
Estimate integrate_adaptive(F&& f, double a, double b, const QuadratureOptions& options = {}) {
  if (!(b > a)) return {};
  std::priority_queue<detail::Interval> heap;
  Estimate first = detail::gk15(f, a, b);
  heap.push({a, b, first});
  double value = first.value;
  double error = first.error;
  int count = 1;
  auto done = [&] { return error <= std::max(options.abs_tol, options.rel_tol * std::abs(value)); };
  while (!done()) {
    if (count >= options.max_intervals) break;
    detail::Interval worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // cannot bisect further
    heap.pop();
    const Estimate left = detail::gk15(f, worst.a, mid);
    const Estimate right = detail::gk15(f, mid, worst.b);
    heap.push({worst.a, mid, left});
    heap.push({mid, worst.b, right});
    ++count;
    value += left.value + right.value - worst.est.value;
    error += left.error + right.error - worst.est.error;
  }
  // re-sum to shed incremental rounding drift
  value = 0.0;
  error = 0.0;
  for (; !heap.empty(); heap.pop()) {
    value += heap.top().est.value;
    error += heap.top().est.error;
  }
  if (!done()) {
    throw QuadratureError("adaptive quadrature did not converge: value " + std::to_string(value) + ", error " +
                              std::to_string(error),
                          value, error);
  }
  return {value, error};
}

}  // namespace orbitlab
