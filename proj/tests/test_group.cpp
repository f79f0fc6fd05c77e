#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "orbitlab/group.hpp"

using namespace orbitlab;

namespace {

BorelCoords random_borel(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> s(n), t(pair_count(n));
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    s[i] = u(rng);
    sum += s[i];
  }
  for (auto& v : s) v -= sum / n;
  for (auto& v : t) v = 3.0 * u(rng);
  return BorelCoords(s, t);
}

}  // namespace

TEST(FrobeniusNorm, IdentityAndDiagonal) {
  EXPECT_DOUBLE_EQ(frobenius_norm(GroupElement::identity(2)), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(frobenius_norm(GroupElement::identity(3)), std::sqrt(3.0));
  const double s[] = {std::log(2.0), -std::log(2.0)};
  EXPECT_NEAR(frobenius_norm(a_of_s(s)), std::sqrt(4.25), 1e-15);
}

TEST(FrobeniusNorm, RotationInvariance) {
  std::mt19937_64 rng(11);
  for (int n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 200; ++trial) {
      const GroupElement g = random_group_element(n, rng);
      const RealMatrix k = haar_random_rotation(n, rng);
      EXPECT_NEAR(frobenius_norm(k * g.matrix()), frobenius_norm(g), 1e-12 * frobenius_norm(g));
    }
  }
}

TEST(GroupElement, RejectsWrongDeterminant) {
  EXPECT_THROW(GroupElement(RealMatrix{2, 0, 0, 1}), std::invalid_argument);
  EXPECT_THROW(GroupElement(RealMatrix{1.0}), std::invalid_argument);
  EXPECT_NO_THROW(GroupElement(RealMatrix{2, 0, 0, 0.5}));
}

TEST(BorelCoords, RejectsNonzeroSum) {
  const double s[] = {1.0, 0.0};
  const double t[] = {0.0};
  EXPECT_THROW(BorelCoords(s, t), std::invalid_argument);
}

TEST(Iwasawa, Identity) {
  const IwasawaCoords c = iwasawa_decompose(GroupElement::identity(3));
  EXPECT_EQ(c.k, RealMatrix::identity(3));
  for (double v : c.b.s()) EXPECT_EQ(v, 0.0);
  for (double v : c.b.t()) EXPECT_EQ(v, 0.0);
}

TEST(Iwasawa, BorelRoundTrip) {
  std::mt19937_64 rng(3);
  for (int n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 100; ++trial) {
      const BorelCoords b = random_borel(n, rng);
      const IwasawaCoords c = iwasawa_decompose(GroupElement(borel_matrix(b)));
      EXPECT_LT(frobenius_norm(c.k - RealMatrix::identity(n)), 1e-10);
      for (int i = 0; i < n; ++i) EXPECT_NEAR(c.b.s(i), b.s(i), 1e-10);
      for (std::size_t p = 0; p < b.t().size(); ++p) EXPECT_NEAR(c.b.t()[p], b.t()[p], 1e-9);
    }
  }
}

TEST(Iwasawa, ReconstructionProperty) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(2, 6);
  double worst = 0.0, worst_orth = 0.0;
  for (int trial = 0; trial < 100000; ++trial) {
    const int n = dim(rng);
    const GroupElement g = random_group_element(n, rng);
    const IwasawaCoords c = iwasawa_decompose(g);
    worst = std::max(worst, frobenius_norm(iwasawa_reconstruct(c) - g.matrix()));
    worst_orth = std::max(worst_orth, frobenius_norm(c.k.transposed() * c.k - RealMatrix::identity(n)));
    ASSERT_NEAR(determinant(c.k), 1.0, 1e-9);
  }
  EXPECT_LE(worst, 1e-10);
  EXPECT_LE(worst_orth, 1e-9);
}

TEST(Delta, Examples) {
  const double zero[] = {0.0, 0.0, 0.0};
  EXPECT_EQ(delta(zero), 0.0);
  const double two[] = {0.7, -0.7};
  EXPECT_DOUBLE_EQ(delta(two), 0.7);
  const double three[] = {1.0, 0.0, -1.0};
  EXPECT_DOUBLE_EQ(delta(three), 2.0);
  const double bad[] = {1.0, 0.0};
  EXPECT_THROW(delta(bad), std::invalid_argument);
}

TEST(Delta, HalfSumOfPositiveRoots) {
  std::mt19937_64 rng(17);
  for (int n = 2; n <= 6; ++n) {
    const RootData roots(n);
    const BorelCoords b = random_borel(n, rng);
    double half_sum = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        half_sum += 0.5 * roots.alpha(b.s(), i, j);
        EXPECT_EQ(roots.alpha(b.s(), i, j), -roots.alpha(b.s(), j, i));
      }
    EXPECT_NEAR(delta(b.s()), half_sum, 1e-12);
  }
}

TEST(NOfS, Examples) {
  const double z2[] = {0.0, 0.0};
  const double z3[] = {0.0, 0.0, 0.0};
  EXPECT_EQ(n_of_s(z2), 2.0);
  EXPECT_EQ(n_of_s(z3), 3.0);
  const double T = 7.5;
  const double s[] = {std::log(T) - 1.0, 1.0 - std::log(T)};
  EXPECT_NEAR(n_of_s(s), std::exp(2 * std::log(T) - 2) + std::exp(2 - 2 * std::log(T)), 1e-12);
  const double huge[] = {301.0, -301.0};
  EXPECT_THROW(n_of_s(huge), std::invalid_argument);
}

TEST(NOfS, FiniteDifferenceGradient) {
  std::mt19937_64 rng(23);
  for (int n = 2; n <= 4; ++n) {
    const BorelCoords b = random_borel(n, rng);
    for (int i = 0; i < n; ++i) {
      const double h = 1e-5;
      std::vector<double> up(b.s().begin(), b.s().end()), down = up;
      up[i] += h;
      down[i] -= h;
      const double fd = (n_of_s(up) - n_of_s(down)) / (2 * h);
      const double exact = 2.0 * std::exp(2.0 * b.s(i));
      EXPECT_GT(fd, 0.0);
      EXPECT_NEAR(fd, exact, 1e-6 * exact);
    }
  }
}

TEST(BorelNorm, Examples) {
  const double s[] = {0.0, 0.0};
  const double t0[] = {0.0};
  const double t3[] = {3.0};
  EXPECT_EQ(borel_norm_sq(BorelCoords(s, t0)), 2.0);
  EXPECT_EQ(borel_norm_sq(BorelCoords(s, t3)), 11.0);
}

TEST(BorelNorm, MatchesMatrixNorm) {
  std::mt19937_64 rng(29);
  for (int n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 500; ++trial) {
      const BorelCoords b = random_borel(n, rng, 2.0);
      const double direct = squared_norm(borel_matrix(b));
      EXPECT_NEAR(borel_norm_sq(b), direct, 1e-10 * direct);
    }
  }
}

TEST(AdjointAction, Examples) {
  const double s0[] = {0.0, 0.0, 0.0};
  const double t[] = {0.5, -1.0, 2.0};
  const auto same = adjoint_a_on_n(s0, t);
  for (int p = 0; p < 3; ++p) EXPECT_EQ(same[p], t[p]);
  const double s[] = {1.0, -1.0};
  const double t1[] = {1.0};
  EXPECT_NEAR(adjoint_a_on_n(s, t1)[0], std::exp(2.0), 1e-14);
}

TEST(AdjointAction, MatrixConjugation) {
  std::mt19937_64 rng(31);
  for (int n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 200; ++trial) {
      const BorelCoords b = random_borel(n, rng);
      std::vector<double> minus_s(n);
      for (int i = 0; i < n; ++i) minus_s[i] = -b.s(i);
      const RealMatrix lhs = a_of_s(b.s()) * n_of_t(n, b.t()) * a_of_s(minus_s);
      const auto adj = adjoint_a_on_n(b.s(), b.t());
      const RealMatrix rhs = n_of_t(n, std::span<const double>(adj.data(), pair_count(n)));
      EXPECT_LT(frobenius_norm(lhs - rhs), 1e-10 * frobenius_norm(rhs));
    }
  }
}

TEST(Matrix, IntegerDeterminant) {
  EXPECT_EQ(determinant(IntMatrix{2, 1, 1, 1}), 1);
  EXPECT_EQ(determinant(IntMatrix{1, 2, 3, 4, 5, 6, 7, 8, 10}), -3);
  EXPECT_EQ(determinant(IntMatrix{0, 1, 0, 0, 0, 1, 1, 0, 0}), 1);
}

TEST(Matrix, ExponentialOfNilpotent) {
  const RealMatrix x{0, 2, 0, 0};
  const RealMatrix e = expm(x);
  EXPECT_NEAR(e(0, 1), 2.0, 1e-14);
  EXPECT_NEAR(e(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(determinant(expm(RealMatrix{0.3, 1, -2, -0.3})), 1.0, 1e-13);
}
