#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "chainbound/parallel.hpp"
#include "chainbound/random.hpp"
#include "chainbound/statistics.hpp"

using namespace chainbound;

namespace {

std::uint64_t join(std::uint32_t lo, std::uint32_t hi) { return (std::uint64_t{hi} << 32) | lo; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

// Known-answer vectors for Philox4x32-10 from the Random123 distribution.
TEST(Philox, KnownAnswerVectors) {
  EXPECT_EQ(Philox4x32::generate(0, 0, 0), (Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));

  const auto ones = Philox4x32::generate(join(0xffffffffu, 0xffffffffu), join(0xffffffffu, 0xffffffffu),
                                         join(0xffffffffu, 0xffffffffu));
  EXPECT_EQ(ones, (Philox4x32::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));

  const auto pi = Philox4x32::generate(join(0xa4093822u, 0x299f31d0u), join(0x13198a2eu, 0x03707344u),
                                       join(0x243f6a88u, 0x85a308d3u));
  EXPECT_EQ(pi, (Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RandomStream, SameSeedAndStreamReproduce) {
  RandomStream a(42, 7);
  RandomStream b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RandomStream, DistinctStreamsDiffer) {
  RandomStream a(42, substream(0));
  RandomStream b(42, substream(1));
  int equal = 0;
  for (int i = 0; i < 1000; ++i) equal += a.next_u64() == b.next_u64();
  EXPECT_EQ(equal, 0);
}

TEST(RandomStream, UniformRange) {
  RandomStream rng(1, 0);
  double lo = 1.0;
  double hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    const double v = rng.uniform_open_low();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_GT(v, 0.0);
    ASSERT_LE(v, 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  EXPECT_LT(lo, 1e-3);
  EXPECT_GT(hi, 1.0 - 1e-3);
}

TEST(RandomStream, NormalMomentsAndTail) {
  RandomStream rng(2024, 3);
  const int n = 2'000'000;
  std::vector<double> draws(n);
  for (auto& z : draws) z = rng.normal();
  double m1 = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
  int tail = 0;
  for (double z : draws) {
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
    tail += std::fabs(z) > 3.442619855899;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(m2, 1.0, 5.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(m4, 3.0, 5.0 * std::sqrt(96.0 / n));
  const double p_tail = 2.0 * normal_cdf(-3.442619855899);
  EXPECT_NEAR(tail / double(n), p_tail, 5.0 * std::sqrt(p_tail / n));
}

TEST(RandomStream, NormalKolmogorovSmirnov) {
  RandomStream rng(99, 0);
  const int n = 200000;
  std::vector<double> draws(n);
  for (auto& z : draws) z = rng.normal();
  std::sort(draws.begin(), draws.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = normal_cdf(draws[i]);
    ks = std::max({ks, std::fabs(f - double(i) / n), std::fabs(f - double(i + 1) / n)});
  }
  // 1.95 / sqrt(n) is the 0.1% critical value.
  EXPECT_LT(ks, 1.95 / std::sqrt(double(n)));
}

TEST(RandomStream, RademacherBalanced) {
  RandomStream rng(5, 0);
  const int n = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = rng.rademacher();
    ASSERT_TRUE(r == 1.0 || r == -1.0);
    sum += r;
  }
  EXPECT_LT(std::fabs(sum), 4.0 * std::sqrt(double(n)));
}

TEST(Parallel, ResultsIndependentOfWorkerCount) {
  auto run = [](unsigned workers) {
    std::vector<double> out(1000);
    parallel_for(out.size(), Workers{workers}, [&](std::size_t i) {
      RandomStream rng(11, substream(i));
      out[i] = rng.normal();
    });
    return out;
  };
  const auto serial = run(1);
  EXPECT_EQ(serial, run(3));
  EXPECT_EQ(serial, run(8));
}

TEST(Parallel, PropagatesExceptions) {
  std::atomic<int> calls{0};
  EXPECT_THROW(parallel_for(100, Workers{4},
                            [&](std::size_t i) {
                              ++calls;
                              if (i == 37) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
  EXPECT_GT(calls.load(), 0);
}

TEST(Statistics, LpEstimateOfKnownSample) {
  const std::vector<double> x{1.0, -2.0, 3.0, -4.0};
  const auto l2 = lp_estimate(x, 2.0, 0);
  EXPECT_DOUBLE_EQ(l2.lp_value, std::sqrt(30.0 / 4.0));
  EXPECT_EQ(l2.n_replicates, 4u);
  // Delta method: stderr(m^{1/p}) = m^{1/p-1}/p * sd(|x|^p)/sqrt(R).
  const double m = 7.5;
  double var = 0.0;
  for (double v : x) var += (v * v - m) * (v * v - m);
  var /= 3.0;
  EXPECT_NEAR(l2.standard_error, std::pow(m, 0.5 - 1.0) / 2.0 * std::sqrt(var / 4.0), 1e-15);
  const auto zero = lp_estimate(std::vector<double>(5, 0.0), 3.0, 0);
  EXPECT_EQ(zero.lp_value, 0.0);
  EXPECT_EQ(zero.standard_error, 0.0);
}

TEST(Statistics, CompensatedSumRecoversCancellation) {
  std::vector<double> v{1e16, 1.0, -1e16};
  for (int i = 0; i < 100; ++i) v.push_back(0.1);
  EXPECT_NEAR(compensated_sum(v), 11.0, 1e-12);
}

TEST(Statistics, LeastSquaresExactLine) {
  const std::vector<double> x{0, 1, 2, 3};
  const std::vector<double> y{1, 3, 5, 7};
  const auto fit = least_squares(x, y);
  EXPECT_DOUBLE_EQ(fit.slope, 2.0);
  EXPECT_DOUBLE_EQ(fit.intercept, 1.0);
  EXPECT_DOUBLE_EQ(fit.r_squared, 1.0);
}

TEST(Statistics, NormalMomentNorms) {
  EXPECT_NEAR(normal_abs_moment_norm(1.0), std::sqrt(2.0 / std::numbers::pi), 1e-14);
  EXPECT_NEAR(normal_abs_moment_norm(2.0), 1.0, 1e-14);
  EXPECT_NEAR(normal_abs_moment_norm(4.0), std::pow(3.0, 0.25), 1e-14);
  EXPECT_NEAR(normal_abs_moment_norm(8.0), std::pow(105.0, 0.125), 1e-14);
}
