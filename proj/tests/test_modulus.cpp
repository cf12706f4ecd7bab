#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "chainbound/errors.hpp"
#include "chainbound/modulus.hpp"

using namespace chainbound;

namespace {

std::vector<Modulus> admissible_catalog() {
  const auto half = Modulus::power(0.5);
  return {Modulus::power(0.3),
          Modulus::power(0.5),
          Modulus::power(1.0),
          Modulus::scaled(3.0, Modulus::power(0.7)),
          Modulus::log_damped(1.0, 1.0, half),
          Modulus::log_damped(0.5, 2.0, Modulus::power(1.0)),
          Modulus::log_boosted(0.2, 1.0, half),
          Modulus::log_pd(2.0, 4.0, half),
          Modulus::log_pd(1.0, 1.0, Modulus::power(1.0))};
}

// Independent ratio scan on a different grid (uniform in log x, random offsets avoided).
std::pair<double, double> brute_ratio_range(const std::function<double(double)>& w, int octaves) {
  double lo = INFINITY;
  double hi = 0.0;
  const int n = 20000;
  for (int i = 0; i <= n; ++i) {
    const double x = std::exp2(-octaves * double(i) / n);
    const double r = w(x) / w(x / 2.0);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return {lo, hi};
}

}  // namespace

TEST(ModulusEval, ClosedFormExamples) {
  EXPECT_DOUBLE_EQ(eval(Modulus::power(0.5), 0.25), 0.5);
  EXPECT_DOUBLE_EQ(eval(Modulus::log_damped(1.0, 1.0, Modulus::power(1.0)), 1.0), 1.0);
  const double x = std::exp(-1.0);
  EXPECT_NEAR(eval(Modulus::log_pd(1.0, 1.0, Modulus::power(1.0)), x), x / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(eval(Modulus::log_pd(1.0, 1.0, Modulus::power(1.0)), x), 0.26016, 5e-5);
  EXPECT_DOUBLE_EQ(eval(Modulus::scaled(2.5, Modulus::power(1.0)), 0.5), 1.25);
  EXPECT_NEAR(eval(Modulus::log_boosted(0.2, 2.0, Modulus::power(0.5)), 0.125),
              std::pow(1.0 - 0.2 * std::log(0.125), 2.0) * std::sqrt(0.125), 1e-15);
}

TEST(ModulusEval, RejectsArgumentsOutsideUnitInterval) {
  const auto w = Modulus::power(0.5);
  EXPECT_THROW(eval(w, 0.0), DomainError);
  EXPECT_THROW(eval(w, -0.1), DomainError);
  EXPECT_THROW(eval(w, 1.0 + 1e-12), DomainError);
  EXPECT_THROW(eval(w, NAN), DomainError);
  EXPECT_NO_THROW(eval(w, 1.0));
}

TEST(ModulusEval, RejectsInvalidParameters) {
  EXPECT_THROW(Modulus::power(0.0), ParameterError);
  EXPECT_THROW(Modulus::power(1.5), ParameterError);
  EXPECT_THROW(Modulus::scaled(0.0, Modulus::power(1.0)), ParameterError);
  EXPECT_THROW(Modulus::log_damped(-1.0, 1.0, Modulus::power(1.0)), ParameterError);
  EXPECT_THROW(Modulus::log_pd(0.5, 1.0, Modulus::power(1.0)), ParameterError);
}

TEST(GrowthConstants, PowerIsExactClosedForm) {
  for (double alpha : {0.1, 0.3, 0.5, 0.7, 1.0}) {
    const auto k = growth_constants(Modulus::power(alpha));
    EXPECT_EQ(k.c_w, std::exp2(alpha));
    EXPECT_EQ(k.d_w, std::exp2(alpha));
  }
}

TEST(GrowthConstants, ScaledKeepsBaseConstants) {
  const auto base = Modulus::log_damped(1.0, 1.0, Modulus::power(0.5));
  const auto a = growth_constants(base);
  const auto b = growth_constants(Modulus::scaled(7.0, base));
  EXPECT_DOUBLE_EQ(a.c_w, b.c_w);
  EXPECT_DOUBLE_EQ(a.d_w, b.d_w);
  EXPECT_EQ(growth_constants(Modulus::scaled(0.1, Modulus::power(0.4))).c_w, std::exp2(0.4));
}

TEST(GrowthConstants, LogDampedWithinCatalogBounds) {
  for (double beta : {0.5, 1.0, 2.0}) {
    for (double gamma : {0.5, 1.0, 2.0}) {
      const double alpha = 0.5;
      const auto k = growth_constants(Modulus::log_damped(beta, gamma, Modulus::power(alpha)), 12);
      EXPECT_GE(k.d_w, std::exp2(alpha));
      EXPECT_LE(k.c_w, std::pow(1.0 + beta * std::log(2.0), gamma) * std::exp2(alpha));
      EXPECT_LE(k.d_w, k.c_w);
    }
  }
}

TEST(GrowthConstants, AgreesWithIndependentRatioScan) {
  const double beta = 1.0;
  const double gamma = 1.0;
  const auto closed = [&](double x) { return std::sqrt(x) / (1.0 - beta * std::log(x)); };
  const auto [lo, hi] = brute_ratio_range(closed, 14);
  const auto k = growth_constants(Modulus::log_damped(beta, gamma, Modulus::power(0.5)), 14);
  EXPECT_NEAR(k.c_w, hi, 1e-3 * hi);
  EXPECT_NEAR(k.d_w, lo, 1e-3 * lo);
}

TEST(GrowthConstants, LogBoostedWithinCatalogBounds) {
  const double alpha = 0.5;
  const double beta = 0.2;
  const double gamma = 1.0;
  const auto k = growth_constants(Modulus::log_boosted(beta, gamma, Modulus::power(alpha)));
  // Attained at x = 1, so compare with rounding slack.
  EXPECT_GE(k.d_w, std::pow(1.0 + beta * std::log(2.0), -gamma) * std::exp2(alpha) * (1.0 - 1e-14));
  EXPECT_LE(k.c_w, std::exp2(alpha));
}

TEST(GrowthConstants, LogPdBoundedIndependentlyOfP) {
  const auto base = Modulus::power(0.5);
  const double c_base = growth_constants(base).c_w;
  const double d = 4.0;
  for (double p : {1.0, 2.0, 8.0, 32.0}) {
    const auto k = growth_constants(Modulus::log_pd(p, d, base));
    EXPECT_LE(k.c_w, c_base * std::sqrt(1.0 + (d / p) * std::log(2.0)) * (1.0 + 1e-12)) << "p = " << p;
    EXPECT_LE(k.c_w, c_base * std::sqrt(1.0 + d * std::log(2.0)) * (1.0 + 1e-12));
    EXPECT_GT(k.d_w, 1.0);
  }
}

TEST(GrowthConstants, RejectsShallowGridAndNonPositiveWeights) {
  EXPECT_THROW(growth_constants(Modulus::power(0.5), 7), ParameterError);
  const auto negative = Modulus::custom("negative", [](double x) { return x - 0.5; });
  EXPECT_THROW(growth_constants(negative), InvalidModulusError);
}

TEST(CheckAdmissible, CatalogMembersPass) {
  for (const auto& w : admissible_catalog()) {
    const auto report = check_admissible(w);
    EXPECT_TRUE(report.pass) << w.describe();
    EXPECT_TRUE(report.certified) << w.describe();
    EXPECT_TRUE(report.monotone) << w.describe();
  }
}

TEST(CheckAdmissible, LogBoostedBeyondThresholdFailsMonotonicity) {
  const auto report = check_admissible(Modulus::log_boosted(1.0, 1.0, Modulus::power(0.5)));
  EXPECT_FALSE(report.pass);
  EXPECT_FALSE(report.monotone);
  ASSERT_TRUE(report.first_decrease.has_value());
  // w'(x) = x^{-1/2}(1/2 - 1/2 log x - 1) < 0 for x > e^{-1}.
  EXPECT_GT(*report.first_decrease, std::exp(-1.0));
}

TEST(CheckAdmissible, ConstantWeightFailsWithUnitRatio) {
  const auto report = check_admissible(Modulus::constant());
  EXPECT_FALSE(report.pass);
  EXPECT_FALSE(report.certified);
  ASSERT_TRUE(report.constants.has_value());
  EXPECT_EQ(report.constants->d_w, 1.0);
  EXPECT_EQ(report.constants->c_w, 1.0);
}

TEST(CheckAdmissible, CustomModulusIsNeverCertified) {
  const auto report = check_admissible(Modulus::custom("sqrt", [](double x) { return std::sqrt(x); }));
  EXPECT_TRUE(report.pass);
  EXPECT_FALSE(report.certified);
}

TEST(CheckAdmissible, NonPositiveWeightIsReportedNotThrown) {
  const auto report = check_admissible(Modulus::custom("bad", [](double x) { return x - 0.25; }));
  EXPECT_FALSE(report.pass);
  EXPECT_FALSE(report.note.empty());
}

TEST(ModulusProperties, MonotoneOnDescendingGrid) {
  for (const auto& w : admissible_catalog()) {
    double previous = w(1.0);
    for (int i = 1; i <= 14 * 64; ++i) {
      const double current = w(std::exp2(-i / 64.0));
      ASSERT_LE(current, previous) << w.describe() << " at step " << i;
      previous = current;
    }
  }
}

TEST(DyadicTailBound, GeometricSeriesEquality) {
  const auto one = dyadic_tail_bound(Modulus::power(1.0), 1.0, 0);
  EXPECT_DOUBLE_EQ(one.rhs, 2.0);
  EXPECT_NEAR(one.lhs, 2.0, 1e-15);
  EXPECT_LE(one.lhs, one.rhs);

  const auto half = dyadic_tail_bound(Modulus::power(0.5), 1.0, 0);
  const double expected = 1.0 / (1.0 - std::sqrt(0.5));
  EXPECT_NEAR(half.lhs, expected, 1e-13);
  EXPECT_NEAR(half.rhs, expected, 1e-13);
  EXPECT_NEAR(half.lhs, 3.4142, 1e-4);
}

TEST(DyadicTailBound, LogDampedAgainstIndependentPartialSum) {
  const auto w = Modulus::log_damped(1.0, 1.0, Modulus::power(0.5));
  const auto bound = dyadic_tail_bound(w, 1.0, 0);
  double oracle = 0.0;
  for (int k = 0;; ++k) {
    const double term = std::exp2(-0.5 * k) / (1.0 + k * std::log(2.0));
    oracle += term;
    if (term < 1e-12 * oracle) break;
  }
  EXPECT_NEAR(bound.lhs, oracle, 1e-11 * oracle);
  EXPECT_LE(bound.lhs, bound.rhs);
}

TEST(DyadicTailBound, HoldsAcrossCatalog) {
  for (const auto& w : admissible_catalog()) {
    for (double x : {1.0, 0.5, 0.125}) {
      for (int m : {0, 3}) {
        const auto b = dyadic_tail_bound(w, x, m);
        // Pure powers attain equality; allow for rounding in the summation.
        EXPECT_LE(b.lhs, b.rhs * (1.0 + 1e-13)) << w.describe() << " x=" << x << " m=" << m;
      }
    }
  }
}

TEST(DyadicTailBound, RejectsNonAdmissible) {
  EXPECT_THROW(dyadic_tail_bound(Modulus::constant(), 1.0, 0), NotAdmissibleError);
  EXPECT_THROW(dyadic_tail_bound(Modulus::power(0.5), 0.0, 0), DomainError);
}
