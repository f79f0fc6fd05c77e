#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "orbitlab/lattice.hpp"

using namespace orbitlab;

namespace {

std::vector<IntMatrix> collect(int n, double T, const SubgroupSpec& spec = SubgroupSpec::full()) {
  std::vector<IntMatrix> out;
  enumerate_lattice(n, T, spec, [&](const LatticeElement& g) { out.push_back(g.matrix()); });
  return out;
}

// Exhaustive scan of all integer matrices with entries in [-bound, bound].
std::vector<IntMatrix> brute_force(int n, double T, std::int64_t bound, const SubgroupSpec& spec) {
  std::vector<IntMatrix> out;
  const int cells = n * n;
  std::vector<std::int64_t> v(cells, -bound);
  const double T2 = T * T;  // exact for the T values used below
  while (true) {
    IntMatrix g(n);
    std::int64_t norm = 0;
    for (int k = 0; k < cells; ++k) {
      g(k / n, k % n) = v[k];
      norm += v[k] * v[k];
    }
    if (static_cast<double>(norm) < T2 && determinant(g) == 1 && spec.admits(g)) out.push_back(g);
    int k = cells - 1;
    while (k >= 0 && v[k] == bound) v[k--] = -bound;
    if (k < 0) break;
    ++v[k];
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(StrictThreshold, ExactAtTies) {
  EXPECT_EQ(strict_norm_threshold(2.0), 3);
  EXPECT_EQ(strict_norm_threshold(1.5), 2);
  EXPECT_EQ(strict_norm_threshold(std::nextafter(2.0, 3.0)), 4);
  EXPECT_EQ(strict_norm_threshold(std::nextafter(2.0, 0.0)), 3);
  EXPECT_EQ(strict_norm_threshold(1000.0), 999999);
  EXPECT_THROW(strict_norm_threshold(0.0), std::invalid_argument);
  EXPECT_THROW(strict_norm_threshold(std::ldexp(1.0, 31)), std::invalid_argument);
}

TEST(SubgroupSpec, Validation) {
  EXPECT_THROW(SubgroupSpec::congruence(1), std::invalid_argument);
  EXPECT_TRUE(SubgroupSpec::congruence(2).admits(IntMatrix{3, 2, 4, 3}));
  EXPECT_FALSE(SubgroupSpec::congruence(2).admits(IntMatrix{1, 1, 0, 1}));
  EXPECT_TRUE(SubgroupSpec::full().admits(IntMatrix{1, 1, 0, 1}));
}

TEST(LatticeElement, RequiresUnitDeterminant) {
  EXPECT_THROW(LatticeElement(IntMatrix{2, 0, 0, 1}), std::invalid_argument);
  EXPECT_EQ(LatticeElement(IntMatrix{2, 1, 1, 1}).norm_sq(), 7);
}

TEST(Enumerate, SmallExamples) {
  const auto four = collect(2, 1.5);
  ASSERT_EQ(four.size(), 4u);
  const std::set<IntMatrix> expected{IntMatrix{1, 0, 0, 1}, IntMatrix{-1, 0, 0, -1}, IntMatrix{0, 1, -1, 0},
                                     IntMatrix{0, -1, 1, 0}};
  EXPECT_EQ(std::set<IntMatrix>(four.begin(), four.end()), expected);
  EXPECT_EQ(collect(2, 2.0).size(), 20u);
  EXPECT_EQ(count_norm_ball(2, 1.0, SubgroupSpec::full()), 0u);
  EXPECT_EQ(count_norm_ball(2, 2.0, SubgroupSpec::full()), 20u);
  EXPECT_EQ(count_norm_ball(2, 2.0, SubgroupSpec::congruence(2)), 2u);
}

TEST(Enumerate, EvenSignedPermutationsInDimensionThree) {
  const auto elems = collect(3, 1.8);
  ASSERT_EQ(elems.size(), 24u);
  for (const auto& g : elems) {
    EXPECT_EQ(squared_norm(g), 3);
    EXPECT_EQ(determinant(g), 1);
  }
}

TEST(Enumerate, SignedPermutationsInDimensionFour) {
  // norm^2 <= 4 forces a signed permutation matrix; half of 4! 2^4 have det 1
  EXPECT_EQ(count_norm_ball(4, 2.1, SubgroupSpec::full()), 192u);
}

TEST(Enumerate, MatchesBruteForceDimensionTwo) {
  for (double T : {1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 5.5, 6.0}) {
    const auto bound = static_cast<std::int64_t>(std::ceil(T)) - 1;
    EXPECT_EQ(collect(2, T), brute_force(2, T, bound, SubgroupSpec::full())) << "T = " << T;
    for (int q : {2, 3, 5}) {
      EXPECT_EQ(collect(2, T, SubgroupSpec::congruence(q)), brute_force(2, T, bound, SubgroupSpec::congruence(q)))
          << "T = " << T << ", q = " << q;
    }
  }
}

TEST(Enumerate, MatchesBruteForceDimensionThree) {
  for (double T : {1.8, 2.0}) EXPECT_EQ(collect(3, T), brute_force(3, T, 1, SubgroupSpec::full())) << "T = " << T;
  // T = 2.5 admits entries up to 2
  EXPECT_EQ(collect(3, 2.5), brute_force(3, 2.5, 2, SubgroupSpec::full()));
  EXPECT_EQ(collect(3, 2.5, SubgroupSpec::congruence(2)), brute_force(3, 2.5, 2, SubgroupSpec::congruence(2)));
}

TEST(Enumerate, LexicographicAndUnimodular) {
  for (int n : {2, 3}) {
    const auto elems = collect(n, n == 2 ? 20.0 : 5.0);
    ASSERT_FALSE(elems.empty());
    EXPECT_TRUE(std::adjacent_find(elems.begin(), elems.end(), [](const auto& a, const auto& b) { return !(a < b); }) ==
                elems.end());
    for (const auto& g : elems) ASSERT_EQ(determinant(g), 1);
  }
}

TEST(Enumerate, ParallelMatchesSerial) {
  struct Sink {
    std::vector<IntMatrix> items;
    void operator()(const LatticeElement& g) { items.push_back(g.matrix()); }
  };
  for (int n : {2, 3}) {
    const double T = n == 2 ? 40.0 : 4.5;
    for (int threads : {2, 3, 5}) {
      std::vector<IntMatrix> merged;
      for (auto& s : enumerate_lattice_parallel(n, T, SubgroupSpec::full(), threads, [] { return Sink{}; })) {
        merged.insert(merged.end(), s.items.begin(), s.items.end());
      }
      std::sort(merged.begin(), merged.end());
      EXPECT_EQ(merged, collect(n, T)) << "n = " << n << ", threads = " << threads;
    }
    EXPECT_EQ(count_norm_ball(n, T, SubgroupSpec::full(), {}, 4), collect(n, T).size());
  }
}

TEST(Enumerate, MonotoneInT) {
  for (int n : {2, 3}) {
    std::uint64_t previous = 0;
    for (double T = 1.0; T < (n == 2 ? 30.0 : 6.0); T += 0.37) {
      const auto c = count_norm_ball(n, T, SubgroupSpec::full());
      EXPECT_GE(c, previous);
      previous = c;
    }
  }
}

TEST(Enumerate, GrowthExponentDimensionTwo) {
  std::vector<double> x, y;
  for (double T : {50.0, 100.0, 200.0, 400.0}) {
    x.push_back(std::log(T));
    y.push_back(std::log(static_cast<double>(count_norm_ball(2, T, SubgroupSpec::full()))));
  }
  const double mx = (x[0] + x[1] + x[2] + x[3]) / 4, my = (y[0] + y[1] + y[2] + y[3]) / 4;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, 2.0, 0.06);
}

TEST(Enumerate, BudgetExceeded) {
  EnumerationOptions opt;
  opt.max_elements = 10;
  EXPECT_THROW(count_norm_ball(2, 5.0, SubgroupSpec::full(), opt), BudgetExceeded);
  EXPECT_THROW(count_norm_ball(2, 5.0, SubgroupSpec::full(), opt, 3), BudgetExceeded);
  opt.max_elements = 20;
  EXPECT_EQ(count_norm_ball(2, 2.0, SubgroupSpec::full(), opt), 20u);
}

TEST(Enumerate, RejectsBadArguments) {
  EXPECT_THROW(count_norm_ball(5, 2.0, SubgroupSpec::full()), std::invalid_argument);
  EXPECT_THROW(count_norm_ball(2, -1.0, SubgroupSpec::full()), std::invalid_argument);
}

TEST(RawDump, RoundTrip) {
  std::ostringstream os;
  for (const auto& g : collect(3, 2.5)) write_raw(os, g);
  std::istringstream in(os.str());
  std::vector<IntMatrix> back;
  for (std::string line; std::getline(in, line);) back.push_back(parse_raw_line(line));
  EXPECT_EQ(back, collect(3, 2.5));
  EXPECT_EQ(parse_raw_line("0 1 -1 0"), (IntMatrix{0, 1, -1, 0}));
  EXPECT_THROW(parse_raw_line("1 2 3"), ConfigError);
  EXPECT_THROW(parse_raw_line("1 0 x 1"), ConfigError);
}
