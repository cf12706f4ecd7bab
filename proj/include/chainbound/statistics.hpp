#pragma once

#include <cstdint>
#include <span>

namespace chainbound {

// Monte Carlo estimate of an L^p(Omega) norm.
struct McEstimate {
  double p = 1.0;
  std::uint64_t n_replicates = 0;
  double lp_value = 0.0;
  double standard_error = 0.0;
  std::uint64_t seed = 0;

  // lp_value - k * stderr, the one-sided comparison point for "lhs <= rhs within k stderr".
  double lower(double k) const noexcept { return lp_value - k * standard_error; }
};

// ((1/R) sum |x_r|^p)^{1/p} with a delta-method standard error. Summation is
// compensated and runs in index order, so the result is independent of how the
// samples were produced.
McEstimate lp_estimate(std::span<const double> samples, double p, std::uint64_t seed);

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  double variance = 0.0;
};

MeanEstimate mean_estimate(std::span<const double> samples);

// Neumaier-compensated sum in index order.
double compensated_sum(std::span<const double> values);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

// (E|N|^p)^{1/p} for a standard normal N.
double normal_abs_moment_norm(double p);

}  // namespace chainbound
