#pragma once

// Ergodic averages over right-Haar balls in B° for Gamma = SL(2,Z), evaluated
// on Gamma\G through the upper half-plane: Gamma g -> reduce(g . i).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "orbitlab/error.hpp"
#include "orbitlab/group.hpp"
#include "orbitlab/haar.hpp"

namespace orbitlab {

using Complex = std::complex<double>;

/// Moebius action of a real 2 x 2 matrix on the upper half-plane.
template <class T>
Complex act_half_plane(const SquareMatrix<T>& g, Complex z) {
  const double a = static_cast<double>(g(0, 0)), b = static_cast<double>(g(0, 1));
  const double c = static_cast<double>(g(1, 0)), d = static_cast<double>(g(1, 1));
  return (a * z + b) / (c * z + d);
}

/// One generator step of the reduction: z -> z - shift, or z -> -1/z.
struct ReductionStep {
  enum class Kind { translate, invert };
  Kind kind = Kind::translate;
  std::int64_t shift = 0;
};

struct ModularReduction {
  Complex z;                       ///< point of the closed fundamental domain
  std::vector<ReductionStep> word;  ///< steps applied to the input, in order
  IntMatrix matrix;                 ///< element of SL(2,Z) with matrix . input = z

  std::size_t word_length() const noexcept { return word.size(); }
};

/// Maps z (Im z > 0) into |Re z| <= 1/2, |z| >= 1 by alternating integer
/// translations and the inversion z -> -1/z.
inline ModularReduction reduce_modular(Complex z, int max_steps = 10'000) {
  if (!(z.imag() > 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw std::invalid_argument("reduce_modular: need a finite point with Im z > 0");
  }
  ModularReduction out;
  out.matrix = IntMatrix::identity(2);
  for (int steps = 0;; ++steps) {
    if (steps > max_steps) throw NumericError("reduce_modular: step cap exceeded");
    const double k = std::round(z.real());
    if (k != 0.0) {
      const auto shift = static_cast<std::int64_t>(k);
      z -= k;
      out.word.push_back({ReductionStep::Kind::translate, shift});
      // [[1, -k], [0, 1]] * M
      for (int j = 0; j < 2; ++j) out.matrix(0, j) -= shift * out.matrix(1, j);
    }
    if (std::norm(z) < 1.0) {
      z = -1.0 / z;
      out.word.push_back({ReductionStep::Kind::invert, 0});
      // [[0, -1], [1, 0]] * M
      for (int j = 0; j < 2; ++j) {
        const std::int64_t top = out.matrix(0, j);
        out.matrix(0, j) = -out.matrix(1, j);
        out.matrix(1, j) = top;
      }
      continue;
    }
    break;
  }
  out.z = z;
  return out;
}

/// Point Gamma g of Gamma\SL(2,R) with its reduced half-plane image.
class CosetPoint {
 public:
  explicit CosetPoint(const GroupElement& representative) : rep_(representative) {
    if (representative.dim() != 2) throw std::invalid_argument("CosetPoint requires n = 2");
    reduced_ = reduce_modular(act_half_plane(rep_.matrix(), Complex(0.0, 1.0))).z;
  }

  const GroupElement& representative() const noexcept { return rep_; }
  Complex reduced_z() const noexcept { return reduced_; }

  /// Whether the representative is an integer matrix, i.e. y = Gamma, whose
  /// N-orbit is periodic.
  bool is_identity_coset() const {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        if (std::abs(rep_(i, j) - std::round(rep_(i, j))) > 1e-12) return false;
    return true;
  }

 private:
  GroupElement rep_;
  Complex reduced_;
};

/// Function on Gamma\G/K, given on the fundamental domain.
struct TestFunction {
  enum class Kind { constant, indicator_box, bump };

  Kind kind = Kind::constant;
  double level = 1.0;                                  // constant
  double re_min = 0, re_max = 0, im_min = 0, im_max = 0;  // box
  Complex centre{0.0, 2.0};                            // bump
  double radius = 0.5;

  static TestFunction constant(double v) {
    TestFunction f;
    f.kind = Kind::constant;
    f.level = v;
    return f;
  }

  /// Indicator of (re_min, re_max) x (im_min, im_max); must lie in the
  /// closed fundamental domain with im_max finite.
  static TestFunction indicator_box(double re_min, double re_max, double im_min, double im_max) {
    if (!(re_min < re_max) || re_min < -0.5 || re_max > 0.5) throw std::invalid_argument("box real range invalid");
    if (!(im_min <= im_max) || !std::isfinite(im_max)) throw std::invalid_argument("box imaginary range invalid");
    const double closest_re = (re_min <= 0.0 && re_max >= 0.0) ? 0.0 : std::min(re_min * re_min, re_max * re_max);
    if (closest_re + im_min * im_min < 1.0 - 1e-12) throw std::invalid_argument("box leaves the fundamental domain");
    TestFunction f;
    f.kind = Kind::indicator_box;
    f.re_min = re_min, f.re_max = re_max, f.im_min = im_min, f.im_max = im_max;
    return f;
  }

  /// max(0, 1 - |z - centre|^2 / radius^2), supported in the interior.
  static TestFunction bump(Complex centre, double radius) {
    if (!(radius > 0.0) || std::abs(centre.real()) + radius >= 0.5 || std::abs(centre) - radius <= 1.0) {
      throw std::invalid_argument("bump support must lie inside the fundamental domain");
    }
    TestFunction f;
    f.kind = Kind::bump;
    f.centre = centre;
    f.radius = radius;
    return f;
  }

  /// The standard box |Re z| < 1/2, 1 < Im z < 2.
  static TestFunction standard_box() { return indicator_box(-0.5, 0.5, 1.0, 2.0); }

  double operator()(Complex z) const {
    switch (kind) {
      case Kind::constant:
        return level;
      case Kind::indicator_box:
        return (z.real() > re_min && z.real() < re_max && z.imag() > im_min && z.imag() < im_max) ? 1.0 : 0.0;
      case Kind::bump:
        return std::max(0.0, 1.0 - std::norm(z - centre) / (radius * radius));
    }
    return 0.0;
  }
};

/// Mergeable mean / variance accumulator (Welford, Chan et al. merge).
class RunningStats {
 public:
  void add(double x) {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStats& o) {
    if (o.count_ == 0) return;
    if (count_ == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(count_ + o.count_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.count_) / total;
    m2_ += o.m2_ + d * d * static_cast<double>(count_) * static_cast<double>(o.count_) / total;
    count_ += o.count_;
  }

  std::uint64_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double std_error() const noexcept { return count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0; }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct MonteCarloResult {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Per-worker generator seeded from (seed, worker).
inline std::mt19937_64 worker_rng(std::uint64_t seed, unsigned worker) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(worker)};
  return std::mt19937_64(seq);
}

namespace detail {

/// Splits `samples` across workers, each running body(rng, count, stats).
template <class Body>
RunningStats run_sharded(std::uint64_t samples, std::uint64_t seed, int threads, Body body) {
  threads = std::max(1, threads);
  std::vector<RunningStats> shards(threads);
  auto work = [&](int w) {
    const std::uint64_t share = samples / threads + (static_cast<std::uint64_t>(w) < samples % threads ? 1 : 0);
    auto rng = worker_rng(seed, static_cast<unsigned>(w));
    body(rng, share, shards[w]);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  RunningStats total;
  for (const auto& s : shards) total.merge(s);
  return total;
}

/// y b^{-1} . i for b = a(s) n(t), n = 2.
inline Complex translate_basepoint(const GroupElement& y, const BorelCoords& b) {
  const double es = std::exp(b.s(0));
  const double t = b.t(0, 1);
  // b^{-1} = [[e^{-s}, -e^{s} t], [0, e^{s}]]
  RealMatrix inv(2);
  inv(0, 0) = 1.0 / es;
  inv(0, 1) = -es * t;
  inv(1, 1) = es;
  return act_half_plane(y.matrix() * inv, Complex(0.0, 1.0));
}

inline MonteCarloResult haar_average(const CosetPoint& y, const TestFunction& f, double T, std::uint64_t samples,
                                     std::uint64_t seed, Chirality chirality, int threads) {
  if (!(T * T > 2.0)) throw std::invalid_argument("ergodic average: need T > sqrt(2)");
  if (samples == 0) throw std::invalid_argument("ergodic average: need at least one sample");
  if (f.kind == TestFunction::Kind::constant) return {f.level, 0.0};
  const RunningStats stats = run_sharded(samples, seed, threads, [&](auto& rng, std::uint64_t count, RunningStats& acc) {
    HaarBallSampler sampler(2, T, chirality);
    for (std::uint64_t i = 0; i < count; ++i) {
      const BorelCoords b = sampler.sample(rng);
      const Complex z = translate_basepoint(y.representative(), b);
      acc.add(f(reduce_modular(z).z));
    }
  });
  return {stats.mean(), stats.std_error()};
}

}  // namespace detail

/// (1/rho(B_T°)) int_{B_T°} f(y b^{-1}) d rho(b) by Monte Carlo.
inline MonteCarloResult ergodic_average(const CosetPoint& y, const TestFunction& f, double T, std::uint64_t samples,
                                        std::uint64_t seed, int threads = 1) {
  return detail::haar_average(y, f, T, samples, seed, Chirality::right, threads);
}

/// Same average under the left Haar measure; y must have a periodic
/// N-orbit (here: the identity coset).
inline MonteCarloResult left_haar_average(const CosetPoint& y, const TestFunction& f, double T,
                                          std::uint64_t samples, std::uint64_t seed, int threads = 1) {
  if (!y.is_identity_coset()) throw std::invalid_argument("left_haar_average: basepoint must be the identity coset");
  return detail::haar_average(y, f, T, samples, seed, Chirality::left, threads);
}

/// int f d(nu) over Gamma\G with nu the normalized invariant measure: the
/// fundamental domain with density (3/pi) dx dy / y^2, sampled exactly by
/// rejection from x uniform, y with density (sqrt 3 / 2) / y^2 on (sqrt 3 / 2, oo).
inline MonteCarloResult nu_integral(const TestFunction& f, std::uint64_t samples, std::uint64_t seed,
                                    int threads = 1) {
  if (f.kind == TestFunction::Kind::constant) return {f.level, 0.0};
  if (samples == 0) throw std::invalid_argument("nu_integral: need at least one sample");
  const RunningStats stats = detail::run_sharded(samples, seed, threads, [&](auto& rng, std::uint64_t count,
                                                                             RunningStats& acc) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double y_floor = std::sqrt(3.0) / 2.0;
    for (std::uint64_t i = 0; i < count;) {
      const double x = unif(rng) - 0.5;
      const double y = y_floor / (1.0 - unif(rng));
      if (x * x + y * y < 1.0) continue;
      acc.add(f(Complex(x, y)));
      ++i;
    }
  });
  return {stats.mean(), stats.std_error()};
}

/// Hyperbolic area of the fundamental domain.
inline constexpr double kFundamentalDomainArea = std::numbers::pi / 3.0;

}  // namespace orbitlab
