#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "orbitlab/haar.hpp"

using namespace orbitlab;
using std::numbers::pi;

namespace {

// Unnormalized s-marginal of the Haar measure on B_T (n = 2):
// e^{+-s} sqrt(T^2 - e^{2s} - e^{-2s}).
double marginal(double s, double T, Chirality c) {
  const double rem = T * T - std::exp(2 * s) - std::exp(-2 * s);
  if (rem <= 0.0) return 0.0;
  return std::exp(c == Chirality::right ? s : -s) * std::sqrt(rem);
}

double s_max(double T) { return std::log(T); }

double marginal_mass(double a, double b, double T, Chirality c) {
  QuadratureOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-14;
  return integrate_adaptive([&](double s) { return marginal(s, T, c); }, a, b, opt).value;
}

}  // namespace

TEST(GammaN, ClosedForms) {
  EXPECT_NEAR(gamma_n(2), pi / 2, 1e-12);
  EXPECT_NEAR(gamma_n(3), pi * pi / 24, 1e-12);
  EXPECT_THROW(gamma_n(1), std::invalid_argument);
  EXPECT_THROW(gamma_n(11), std::invalid_argument);
  for (int n = 2; n <= 10; ++n) {
    EXPECT_GT(gamma_n(n), 0.0);
    EXPECT_TRUE(std::isfinite(gamma_n(n)));
  }
}

TEST(GammaN, DirectProduct) {
  for (int n = 2; n <= 6; ++n) {
    const long double nn = n;
    long double direct = std::pow(static_cast<long double>(pi), nn * (nn - 1) / 4) /
                         (std::pow(2.0L, nn - 1) * std::tgamma((nn * nn - nn + 2) / 2));
    for (int k = 1; k <= n - 1; ++k) direct *= std::tgamma((nn - k) / 2);
    EXPECT_NEAR(gamma_n(n), static_cast<double>(direct), 1e-12 * static_cast<double>(direct)) << "n = " << n;
  }
}

TEST(BallVolume, EmptyBelowMinimumNorm) {
  EXPECT_EQ(rho_ball_volume(2, 1.41).value, 0.0);
  // sqrt(2.0)^2 rounds just above 2: a sliver of the domain survives
  EXPECT_LT(rho_ball_volume(2, std::sqrt(2.0)).value, 1e-14);
  EXPECT_EQ(rho_ball_volume(3, 1.5).value, 0.0);
  EXPECT_THROW(rho_ball_volume(5, 10.0), std::invalid_argument);
}

TEST(BallVolume, AsymptoticConstant) {
  const VolumeResult two = rho_ball_volume(2, 1e3);
  EXPECT_NEAR(two.normalized / gamma_n(2), 1.0, 0.01);
  EXPECT_NEAR(two.value, two.normalized * 1e6, 1e-9 * two.value);
  const VolumeResult three = rho_ball_volume(3, 1e3);
  EXPECT_NEAR(three.normalized / gamma_n(3), 1.0, 0.02);
  const VolumeResult four = rho_ball_volume(4, 1e2);
  EXPECT_NEAR(four.normalized / gamma_n(4), 1.0, 0.02);
}

TEST(BallVolume, DimensionTwoClosedForm) {
  // rho(B_T) = 2 int_{x>0} sqrt(T^2 - x^2 - x^{-2}) dx, evaluated independently
  for (double T : {1.5, 3.0, 20.0}) {
    const double r = std::sqrt(T * T * T * T / 4 - 1);
    const double lo = std::sqrt(T * T / 2 - r), hi = std::sqrt(T * T / 2 + r);
    QuadratureOptions opt;
    opt.rel_tol = 1e-12;
    const double direct =
        2.0 * integrate_adaptive([&](double x) { return std::sqrt(std::max(0.0, T * T - x * x - 1 / (x * x))); }, lo, hi, opt)
                  .value;
    EXPECT_NEAR(rho_ball_volume(2, T).value, direct, 1e-9 * direct) << "T = " << T;
  }
}

TEST(BallVolume, MonteCarloOracle) {
  // plain MC of int e^{2s} ds dt over { e^{2s} + e^{-2s} + e^{2s} t^2 < T^2 }
  const double T = 3.0;
  const double L = std::log(T), B = T * T;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> us(-L, L), ut(-B, B);
  const int samples = 4'000'000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double s = us(rng), t = ut(rng);
    const double e = std::exp(2 * s);
    const double f = (e + 1 / e + e * t * t < T * T) ? e : 0.0;
    sum += f;
    sum2 += f * f;
  }
  const double box = 2 * L * 2 * B;
  const double mean = sum / samples;
  const double se = std::sqrt((sum2 / samples - mean * mean) / samples) * box;
  const VolumeResult q = rho_ball_volume(2, T);
  EXPECT_NEAR(mean * box, q.value, 3 * se + q.quadrature_error);
}

TEST(ConeFraction, Behaviour) {
  for (double T : {5.0, 50.0}) {
    EXPECT_NEAR(cone_fraction(2, T, -std::log(T) - 1).value, 1.0, 1e-10);
    double previous = 1.0;
    for (double C = -2.0; C <= 1.0; C += 0.25) {
      const double f = cone_fraction(2, T, C).value;
      EXPECT_LE(f, previous + 1e-12);
      EXPECT_GE(f, 0.0);
      previous = f;
    }
  }
  const double f2 = cone_fraction(2, 1e2, 0.0).value;
  const double f4 = cone_fraction(2, 1e4, 0.0).value;
  const double f6 = cone_fraction(2, 1e6, 0.0).value;
  EXPECT_LT(f2, f4);
  EXPECT_LT(f4, f6);
  EXPECT_GE(f6, 0.99);
  EXPECT_LT(cone_fraction(3, 1e2, 0.0).value, cone_fraction(3, 1e3, 0.0).value);
  EXPECT_THROW(cone_fraction(2, 10.0, kNoCone), std::invalid_argument);
}

TEST(Sampler, StaysInsideBall) {
  std::mt19937_64 rng(1);
  for (int n = 2; n <= 4; ++n) {
    for (Chirality c : {Chirality::right, Chirality::left}) {
      HaarBallSampler sampler(n, 7.0, c);
      for (int i = 0; i < 20000; ++i) ASSERT_LT(borel_norm_sq(sampler.sample(rng)), 49.0);
      EXPECT_FALSE(sampler.low_acceptance());
    }
  }
  EXPECT_THROW(HaarBallSampler(2, 1.4, Chirality::right), std::invalid_argument);
}

TEST(Sampler, AcceptanceStaysPracticalAtLargeT) {
  std::mt19937_64 rng(2);
  HaarBallSampler sampler(2, 1e6, Chirality::right);
  for (int i = 0; i < 100000; ++i) sampler.sample(rng);
  EXPECT_GT(sampler.acceptance_rate(), 0.5);
}

TEST(Sampler, RightHaarMarginalKolmogorovSmirnov) {
  const double T = 30.0;
  std::mt19937_64 rng(3);
  HaarBallSampler sampler(2, T, Chirality::right);
  const int samples = 1'000'000;
  std::vector<double> s(samples);
  for (auto& v : s) v = sampler.sample(rng).s(0);
  std::sort(s.begin(), s.end());

  const double lo = -s_max(T), hi = s_max(T);
  const double total = marginal_mass(lo, hi, T, Chirality::right);
  double ks = 0.0, cdf = 0.0, prev = lo;
  const int grid = 400;
  for (int i = 1; i <= grid; ++i) {
    const double x = lo + (hi - lo) * i / grid;
    cdf += marginal_mass(prev, x, T, Chirality::right) / total;
    prev = x;
    const double emp = static_cast<double>(std::upper_bound(s.begin(), s.end(), x) - s.begin()) / samples;
    ks = std::max(ks, std::abs(emp - cdf));
  }
  EXPECT_LE(ks, 0.005);
}

TEST(Sampler, PositiveHalfMatchesQuadrature) {
  const double T = 10.0;
  for (Chirality c : {Chirality::right, Chirality::left}) {
    std::mt19937_64 rng(4);
    HaarBallSampler sampler(2, T, c);
    const int samples = 1'000'000;
    int positive = 0;
    for (int i = 0; i < samples; ++i) positive += sampler.sample(rng).s(0) > 0.0;
    const double p = marginal_mass(0.0, s_max(T), T, c) / marginal_mass(-s_max(T), s_max(T), T, c);
    EXPECT_NEAR(static_cast<double>(positive) / samples, p, 3 * std::sqrt(p * (1 - p) / samples)) << to_string(c);
  }
}

TEST(Sampler, LeftAndRightDiffer) {
  const double T = 10.0;
  std::mt19937_64 rng(5);
  HaarBallSampler right(2, T, Chirality::right), left(2, T, Chirality::left);
  const int samples = 200'000;
  double mr = 0, ml = 0, vr = 0, vl = 0;
  for (int i = 0; i < samples; ++i) {
    const double a = right.sample(rng).s(0), b = left.sample(rng).s(0);
    mr += a;
    vr += a * a;
    ml += b;
    vl += b * b;
  }
  mr /= samples;
  ml /= samples;
  vr = vr / samples - mr * mr;
  vl = vl / samples - ml * ml;
  const double se = std::sqrt((vr + vl) / samples);
  EXPECT_GT(mr - ml, 3 * se);
}

TEST(Sampler, DimensionThreeMarginalAgreesWithVolume) {
  // P(s_0 > C, s_1 > C) under right Haar equals the cone fraction
  const double T = 8.0, C = -0.5;
  std::mt19937_64 rng(6);
  HaarBallSampler sampler(3, T, Chirality::right);
  const int samples = 400'000;
  int inside = 0;
  for (int i = 0; i < samples; ++i) {
    const BorelCoords b = sampler.sample(rng);
    inside += b.s(0) > C && b.s(1) > C;
  }
  const double p = cone_fraction(3, T, C).value;
  EXPECT_NEAR(static_cast<double>(inside) / samples, p, 3 * std::sqrt(p * (1 - p) / samples));
}
