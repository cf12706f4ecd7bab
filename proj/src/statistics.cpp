#include "chainbound/statistics.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "chainbound/errors.hpp"

namespace chainbound {

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::fabs(sum) >= std::fabs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

MeanEstimate mean_estimate(std::span<const double> samples) {
  if (samples.empty()) throw ParameterError("mean estimate needs at least one sample");
  const double n = static_cast<double>(samples.size());
  const double mean = compensated_sum(samples) / n;
  std::vector<double> squares(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) squares[i] = (samples[i] - mean) * (samples[i] - mean);
  const double variance = samples.size() > 1 ? compensated_sum(squares) / (n - 1.0) : 0.0;
  return {mean, std::sqrt(variance / n), variance};
}

McEstimate lp_estimate(std::span<const double> samples, double p, std::uint64_t seed) {
  if (!(p >= 1.0)) throw ParameterError("L^p estimate needs p >= 1");
  std::vector<double> powers(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) throw ParameterError("non-finite Monte Carlo sample");
    powers[i] = std::pow(std::fabs(samples[i]), p);
  }
  const auto moment = mean_estimate(powers);
  McEstimate out;
  out.p = p;
  out.n_replicates = samples.size();
  out.seed = seed;
  if (moment.mean <= 0.0) return out;
  out.lp_value = std::pow(moment.mean, 1.0 / p);
  out.standard_error = out.lp_value / (p * moment.mean) * moment.standard_error;
  return out;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ShapeError("least squares needs two equal-length series of size >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ParameterError("least squares with constant regressor");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

double normal_abs_moment_norm(double p) {
  const double log_moment =
      0.5 * p * std::log(2.0) + std::lgamma(0.5 * (p + 1.0)) - 0.5 * std::log(std::numbers::pi);
  return std::exp(log_moment / p);
}

}  // namespace chainbound
