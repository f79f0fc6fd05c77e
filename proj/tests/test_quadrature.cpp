#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "orbitlab/quadrature.hpp"

using namespace orbitlab;

TEST(Quadrature, SmoothIntegrands) {
  const Estimate s = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
  EXPECT_NEAR(s.value, 2.0, 1e-13);
  EXPECT_LE(s.error, 1e-9);
  const Estimate e = integrate_adaptive([](double x) { return std::exp(3 * x); }, -2.0, 1.0);
  EXPECT_NEAR(e.value, (std::exp(3.0) - std::exp(-6.0)) / 3.0, 1e-12);
}

TEST(Quadrature, SquareRootEdge) {
  // quarter disc: the ball-volume integrands vanish like this at the rim
  const Estimate q = integrate_adaptive([](double x) { return std::sqrt(std::max(0.0, 1 - x * x)); }, 0.0, 1.0);
  EXPECT_NEAR(q.value, std::numbers::pi / 4, 1e-10);
}

TEST(Quadrature, NestedEstimates) {
  // unit disc area as an iterated integral; inner errors flow outward
  auto inner = [](double x) {
    const double h = std::sqrt(std::max(0.0, 1 - x * x));
    return integrate_adaptive([](double) { return 1.0; }, -h, h);
  };
  const Estimate area = integrate_adaptive(inner, -1.0, 1.0);
  EXPECT_NEAR(area.value, std::numbers::pi, 1e-9);
  EXPECT_GE(area.error, 0.0);
}

TEST(Quadrature, EmptyInterval) {
  const Estimate z = integrate_adaptive([](double) { return 1.0; }, 1.0, 1.0);
  EXPECT_EQ(z.value, 0.0);
}

TEST(Quadrature, ReportsPartialResultOnFailure) {
  QuadratureOptions opt;
  opt.max_intervals = 3;
  opt.rel_tol = 1e-14;
  try {
    integrate_adaptive([](double x) { return std::sin(1.0 / x); }, 1e-4, 1.0, opt);
    FAIL() << "expected QuadratureError";
  } catch (const QuadratureError& e) {
    EXPECT_TRUE(std::isfinite(e.partial_value()));
    EXPECT_GT(e.partial_error(), 0.0);
  }
}
