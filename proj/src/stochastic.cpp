#include "chainbound/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <sstream>

#include "chainbound/errors.hpp"
#include "chainbound/holder.hpp"
#include "chainbound/metric.hpp"
#include "chainbound/random.hpp"

namespace chainbound {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw ParameterError(message);
}

McEstimate estimate_column(const std::vector<double>& samples, double p, std::uint64_t seed) {
  return lp_estimate(samples, p, seed);
}

// max over windows of `width` + 1 consecutive points of (max - min).
double window_range_sup(const std::vector<double>& path, std::size_t width) {
  std::deque<std::size_t> hi;
  std::deque<std::size_t> lo;
  double best = 0.0;
  for (std::size_t j = 0; j < path.size(); ++j) {
    while (!hi.empty() && path[hi.back()] <= path[j]) hi.pop_back();
    while (!lo.empty() && path[lo.back()] >= path[j]) lo.pop_back();
    hi.push_back(j);
    lo.push_back(j);
    if (hi.front() + width < j) hi.pop_front();
    if (lo.front() + width < j) lo.pop_front();
    best = std::max(best, path[hi.front()] - path[lo.front()]);
  }
  return best;
}

std::size_t grid_multiple(double value, std::size_t steps, const char* what) {
  const double scaled = value * static_cast<double>(steps);
  const double rounded = std::round(scaled);
  if (!(value > 0.0) || std::abs(scaled - rounded) > 1e-9 * std::max(1.0, scaled) || rounded < 1.0 ||
      rounded >= static_cast<double>(steps)) {
    std::ostringstream msg;
    msg << what << " " << value << " is not a positive multiple of 1/" << steps << " below 1";
    throw ParameterError(msg.str());
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

WienerEnsemble simulate_brownian(std::size_t replicates, std::size_t components, std::size_t steps, double dt,
                                 std::uint64_t seed, Workers workers) {
  require(replicates >= 1 && components >= 1 && steps >= 1, "ensemble sizes must be >= 1");
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  if (components > kArrayBudget / steps || replicates > kArrayBudget / (components * steps)) {
    std::ostringstream msg;
    msg << "ensemble " << replicates << " x " << components << " x " << steps << " exceeds the array budget of "
        << kArrayBudget << " values";
    throw SizeError(msg.str());
  }
  WienerEnsemble out;
  out.replicates = replicates;
  out.components = components;
  out.steps = steps;
  out.dt = dt;
  out.seed = seed;
  out.increments.resize(replicates * components * steps);
  const double sd = std::sqrt(dt);
  const std::size_t block = components * steps;
  parallel_for(replicates, workers, [&](std::size_t r) {
    RandomStream rng(seed, substream(r));
    double* dst = out.increments.data() + r * block;
    for (std::size_t i = 0; i < block; ++i) dst[i] = sd * rng.normal();
  });
  return out;
}

double ito_integral(std::span<const double> integrand, std::span<const double> increments) {
  if (integrand.size() != increments.size()) {
    std::ostringstream msg;
    msg << "integrand has " << integrand.size() << " steps, path has " << increments.size();
    throw ShapeError(msg.str());
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < integrand.size(); ++i) sum += integrand[i] * increments[i];
  return sum;
}

std::vector<double> brownian_path(std::span<const double> increments) {
  std::vector<double> path(increments.size() + 1, 0.0);
  for (std::size_t i = 0; i < increments.size(); ++i) path[i + 1] = path[i] + increments[i];
  return path;
}

std::size_t OUParams::steps() const {
  validate();
  return static_cast<std::size_t>(std::llround(T / dt));
}

void OUParams::validate() const {
  require(a > 0.0 && std::isfinite(a), "OU decay rate a must be positive");
  require(T > 0.0 && dt > 0.0 && dt <= T, "OU grid needs 0 < dt <= T");
  require(static_cast<bool>(forcing), "OU forcing is not set");
}

std::vector<double> ou_exact_path(const OUParams& params, std::span<const double> increments) {
  params.validate();
  const double decay = std::exp(-params.a * params.dt);
  const double noise = std::sqrt(-std::expm1(-2.0 * params.a * params.dt) / (2.0 * params.a)) / std::sqrt(params.dt);
  std::vector<double> u(increments.size() + 1, 0.0);
  for (std::size_t i = 0; i < increments.size(); ++i) {
    const double t = static_cast<double>(i) * params.dt;
    u[i + 1] = decay * u[i] + params.forcing(t, u[i]) * noise * increments[i];
  }
  return u;
}

std::size_t sup_grid_steps(double relative_gap) {
  require(relative_gap > 0.0 && relative_gap < 1.0, "relative gap must lie in (0, 1)");
  const double ratio = 0.5826 / (relative_gap * std::sqrt(std::numbers::pi / 2.0));
  return static_cast<std::size_t>(std::ceil(ratio * ratio));
}

bool Comparison::holds() const noexcept {
  const double joint = std::sqrt(lhs.standard_error * lhs.standard_error + rhs_standard_error * rhs_standard_error);
  return lhs.lp_value - sigmas * joint <= rhs;
}

SupIntegralsResult experiment_sup_integrals(std::vector<std::size_t> n_list,
                                            const std::function<double(std::size_t)>& sigma, double p, double T,
                                            std::size_t replicates, std::uint64_t seed, std::size_t steps,
                                            Workers workers) {
  require(!n_list.empty(), "n list is empty");
  std::sort(n_list.begin(), n_list.end());
  n_list.erase(std::unique(n_list.begin(), n_list.end()), n_list.end());
  require(n_list.front() >= 1, "n must be >= 1");
  require(p >= 1.0 && T > 0.0 && replicates >= 2, "need p >= 1, T > 0 and at least two replicates");
  if (steps == 0) steps = sup_grid_steps();
  const std::size_t n_max = n_list.back();
  std::vector<double> weights(n_max);
  for (std::size_t k = 1; k <= n_max; ++k) {
    weights[k - 1] = std::abs(sigma(k));
    require(std::isfinite(weights[k - 1]), "sigma must be finite");
  }
  const double sd = std::sqrt(T / static_cast<double>(steps));

  std::vector<std::vector<double>> samples(n_list.size(), std::vector<double>(replicates));
  parallel_for(replicates, workers, [&](std::size_t r) {
    RandomStream rng(seed, substream(r));
    double running = 0.0;
    std::size_t row = 0;
    for (std::size_t k = 1; k <= n_max; ++k) {
      double w = 0.0;
      double peak = 0.0;
      for (std::size_t i = 0; i < steps; ++i) {
        w += sd * rng.normal();
        peak = std::max(peak, std::abs(w));
      }
      running = std::max(running, weights[k - 1] * peak);
      if (k == n_list[row]) samples[row++][r] = running;
    }
  });

  SupIntegralsResult out;
  out.steps = steps;
  double rhs = 0.0;
  std::size_t k = 0;
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t row = 0; row < n_list.size(); ++row) {
    for (; k < n_list[row]; ++k) rhs = std::max(rhs, std::sqrt(p + std::log(double(k + 1))) * weights[k]);
    SupIntegralsRow entry;
    entry.n = n_list[row];
    entry.comparison.lhs = estimate_column(samples[row], p, seed);
    entry.comparison.rhs = 10.0 * rhs * std::sqrt(T);
    out.rows.push_back(entry);
    if (entry.n >= 3 && entry.comparison.lhs.lp_value > 0.0) {
      x.push_back(std::log(std::log(double(entry.n))));
      y.push_back(std::log(entry.comparison.lhs.lp_value));
    }
  }
  if (x.size() >= 2) out.scaling = least_squares(x, y);
  return out;
}

bool OULongtermResult::all_below_bound() const noexcept {
  return std::all_of(rows.begin(), rows.end(), [](const OULongtermRow& r) { return r.estimate.lp_value <= r.bound; });
}

OULongtermResult experiment_ou_longterm(double a, std::vector<double> horizons, double p, std::size_t replicates,
                                        std::uint64_t seed, const OUParams& forcing_template, double max_dt,
                                        double max_steps, Workers workers) {
  require(a > 0.0, "OU decay rate a must be positive");
  require(!horizons.empty() && horizons.size() < 256, "need between 1 and 255 horizons");
  require(p >= 1.0 && replicates >= 2, "need p >= 1 and at least two replicates");
  require(max_dt > 0.0 && max_steps >= 1.0, "invalid step controls");
  require(!forcing_template.state_dependent, "the long-time bound needs a deterministic forcing");
  require(static_cast<bool>(forcing_template.forcing), "OU forcing is not set");

  OULongtermResult out;
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t m = 0; m < horizons.size(); ++m) {
    const double T = horizons[m];
    require(T > 0.0, "horizons must be positive");
    const double target = std::min(max_dt, T / max_steps);
    const auto steps = static_cast<std::size_t>(std::ceil(T / target - 1e-9));
    OUParams params = forcing_template;
    params.a = a;
    params.T = T;
    params.dt = T / static_cast<double>(steps);
    params.validate();

    std::vector<double> forcing(steps);
    double forcing_sup = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
      forcing[i] = params.forcing(static_cast<double>(i) * params.dt, 0.0);
      forcing_sup = std::max(forcing_sup, std::abs(forcing[i]));
    }
    const double decay = std::exp(-a * params.dt);
    const double noise = std::sqrt(-std::expm1(-2.0 * a * params.dt) / (2.0 * a));

    std::vector<double> samples(replicates);
    parallel_for(replicates, workers, [&](std::size_t r) {
      RandomStream rng(seed, substream(r, static_cast<std::uint32_t>(m)));
      double u = 0.0;
      double peak = 0.0;
      for (std::size_t i = 0; i < steps; ++i) {
        u = decay * u + forcing[i] * noise * rng.normal();
        peak = std::max(peak, std::abs(u));
      }
      samples[r] = peak;
    });

    OULongtermRow row;
    row.T = T;
    row.dt = params.dt;
    row.estimate = estimate_column(samples, p, seed);
    row.bound = 18.0 * params.D * std::sqrt(p + std::log1p(a * T)) / std::sqrt(a) * forcing_sup;
    out.rows.push_back(row);
    x.push_back(std::log(T));
    y.push_back(row.estimate.lp_value * row.estimate.lp_value);
  }
  if (x.size() >= 2) out.growth = least_squares(x, y);
  return out;
}

MartingaleScheme parse_martingale_scheme(const std::string& name) {
  if (name == "rademacher" || name == "rademacher_walks") return MartingaleScheme::rademacher;
  if (name == "gaussian" || name == "gaussian_walks") return MartingaleScheme::gaussian;
  throw ParameterError("unknown martingale scheme '" + name + "'");
}

MartingaleSupResult experiment_martingale_sup(std::size_t n, std::size_t steps, MartingaleScheme scheme,
                                              const std::function<double(std::size_t)>& weight, double p,
                                              std::size_t replicates, std::uint64_t seed, Workers workers) {
  require(n >= 1 && steps >= 1, "need n >= 1 and steps >= 1");
  require(p >= 1.0 && replicates >= 2, "need p >= 1 and at least two replicates");
  std::vector<double> weights(n);
  for (std::size_t j = 1; j <= n; ++j) {
    weights[j - 1] = std::abs(weight(j));
    require(std::isfinite(weights[j - 1]), "martingale weights must be finite");
  }
  const double root_steps = std::sqrt(static_cast<double>(steps));

  std::vector<double> sup_samples(replicates);
  std::vector<double> jump_samples(replicates);
  std::vector<double> variance_samples(replicates);
  parallel_for(replicates, workers, [&](std::size_t r) {
    RandomStream rng(seed, substream(r));
    double sup = 0.0;
    double jump = 0.0;
    double variance = 0.0;
    std::uint64_t bits = 0;
    int left = 0;
    for (std::size_t j = 1; j <= n; ++j) {
      const double w = weights[j - 1];
      double f = 0.0;
      double f_star = 0.0;
      double d_star = 0.0;
      for (std::size_t i = 0; i < steps; ++i) {
        double xi;
        if (scheme == MartingaleScheme::rademacher) {
          if (left == 0) {
            bits = rng.next_u64();
            left = 64;
          }
          xi = (bits & 1u) ? 1.0 : -1.0;
          bits >>= 1;
          --left;
        } else {
          xi = rng.normal();
        }
        f += w * xi;
        f_star = std::max(f_star, std::abs(f));
        d_star = std::max(d_star, w * std::abs(xi));
      }
      const double log_j = std::log(static_cast<double>(j));
      sup = std::max(sup, f_star);
      jump = std::max(jump, (p + log_j) * d_star);
      variance = std::max(variance, std::sqrt(p + log_j) * w * root_steps);
    }
    sup_samples[r] = sup;
    jump_samples[r] = jump;
    variance_samples[r] = variance;
  });

  MartingaleSupResult out;
  out.jump_term = estimate_column(jump_samples, p, seed);
  out.variance_term = estimate_column(variance_samples, p, seed);
  out.comparison.lhs = estimate_column(sup_samples, p, seed);
  out.comparison.rhs = 13.0 * out.jump_term.lp_value + 14.0 * out.variance_term.lp_value;
  out.comparison.rhs_standard_error = std::hypot(13.0 * out.jump_term.standard_error,
                                                 14.0 * out.variance_term.standard_error);
  return out;
}

GoodLambdaIntegrand parse_good_lambda_integrand(const std::string& name) {
  if (name == "constant") return GoodLambdaIntegrand::constant;
  if (name == "random_stop" || name == "random-stop") return GoodLambdaIntegrand::random_stop;
  throw ParameterError("unknown good-lambda integrand '" + name + "'");
}

std::size_t GoodLambdaResult::eligible_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const GoodLambdaRow& r) { return r.eligible; }));
}

bool GoodLambdaResult::all_hold() const noexcept {
  return std::all_of(rows.begin(), rows.end(), [](const GoodLambdaRow& r) { return !r.eligible || r.holds; });
}

GoodLambdaResult experiment_good_lambda(double beta, double delta, std::vector<double> lambdas,
                                        GoodLambdaIntegrand integrand, double T, std::size_t replicates,
                                        std::uint64_t seed, std::size_t steps, Workers workers) {
  require(beta > 1.0, "good-lambda needs beta > 1");
  require(delta > 0.0, "good-lambda needs delta > 0");
  require(T > 0.0 && replicates >= 2, "need T > 0 and at least two replicates");
  require(!lambdas.empty(), "lambda list is empty");
  for (double l : lambdas) require(l > 0.0, "lambda values must be positive");
  if (steps == 0) steps = sup_grid_steps();
  const double dt = T / static_cast<double>(steps);
  const double sd = std::sqrt(dt);

  std::vector<double> psi_star(replicates);
  std::vector<double> control(replicates);
  parallel_for(replicates, workers, [&](std::size_t r) {
    RandomStream rng(seed, substream(r));
    std::size_t active = steps;
    if (integrand == GoodLambdaIntegrand::random_stop) {
      const double tau = T * rng.uniform_open_low();
      active = std::min(steps, static_cast<std::size_t>(std::ceil(tau / dt)));
    }
    double w = 0.0;
    double peak = 0.0;
    for (std::size_t i = 0; i < active; ++i) {
      w += sd * rng.normal();
      peak = std::max(peak, std::abs(w));
    }
    psi_star[r] = peak;
    control[r] = std::sqrt(dt * static_cast<double>(active));
  });

  GoodLambdaResult out;
  out.factor = 3.0 * std::exp(-(beta - 1.0) * (beta - 1.0) / (4.0 * delta * delta));
  const double threshold = 50.0 / static_cast<double>(replicates);
  std::vector<double> joint(replicates);
  std::vector<double> tail(replicates);
  std::vector<double> difference(replicates);
  for (double lambda : lambdas) {
    for (std::size_t r = 0; r < replicates; ++r) {
      joint[r] = (psi_star[r] > beta * lambda && control[r] <= delta * lambda) ? 1.0 : 0.0;
      tail[r] = psi_star[r] > lambda ? 1.0 : 0.0;
      difference[r] = joint[r] - out.factor * tail[r];
    }
    GoodLambdaRow row;
    row.lambda = lambda;
    row.joint_probability = mean_estimate(joint).mean;
    row.tail_probability = mean_estimate(tail).mean;
    row.bound = out.factor * row.tail_probability;
    const auto gap = mean_estimate(difference);
    row.joint_standard_error = gap.standard_error;
    row.eligible = row.tail_probability >= threshold;
    row.holds = gap.mean <= 3.0 * gap.standard_error;
    out.rows.push_back(row);
  }
  return out;
}

LevyResult experiment_levy_modulus(std::size_t steps, std::vector<double> h_list, std::size_t replicates,
                                   std::uint64_t seed, std::vector<double> weighted_p, std::size_t weighted_points,
                                   Workers workers) {
  require(steps >= 2 && replicates >= 2, "need at least two steps and two replicates");
  require(!h_list.empty(), "h list is empty");
  for (double p : weighted_p) require(p >= 1.0, "weighted-sup moments need p >= 1");
  weighted_points = std::min(weighted_points, steps + 1);
  require(weighted_points >= 2 && steps % (weighted_points - 1) == 0,
          "weighted-sup subgrid size minus one must divide the step count");
  std::vector<std::size_t> windows;
  for (double h : h_list) windows.push_back(grid_multiple(h, steps, "window h"));
  const std::size_t stride = steps / (weighted_points - 1);
  std::vector<double> inverse_weight(weighted_points, 0.0);
  for (std::size_t lag = 1; lag < weighted_points; ++lag) {
    const double gap = static_cast<double>(lag * stride) / static_cast<double>(steps);
    inverse_weight[lag] = 1.0 / std::sqrt(gap * (1.0 - 0.5 * std::log(gap)));
  }

  const double sd = std::sqrt(1.0 / static_cast<double>(steps));
  std::vector<std::vector<double>> raw(h_list.size(), std::vector<double>(replicates));
  std::vector<double> weighted(replicates);
  parallel_for(replicates, workers, [&](std::size_t r) {
    RandomStream rng(seed, substream(r));
    std::vector<double> path(steps + 1, 0.0);
    for (std::size_t i = 0; i < steps; ++i) path[i + 1] = path[i] + sd * rng.normal();
    for (std::size_t m = 0; m < windows.size(); ++m) raw[m][r] = window_range_sup(path, windows[m]);
    std::vector<double> coarse(weighted_points);
    for (std::size_t k = 0; k < weighted_points; ++k) coarse[k] = path[k * stride];
    weighted[r] = lag_seminorm(coarse, inverse_weight).first;
  });

  LevyResult out;
  out.weighted_points = weighted_points;
  for (std::size_t m = 0; m < h_list.size(); ++m) {
    const double h = h_list[m];
    const double scale = std::sqrt(2.0 * h * std::abs(std::log(h)));
    std::vector<double> normalized(replicates);
    for (std::size_t r = 0; r < replicates; ++r) normalized[r] = raw[m][r] / scale;
    LevyRow row;
    row.h = h;
    row.window = windows[m];
    row.raw_sup_mean = mean_estimate(raw[m]).mean;
    row.statistic = mean_estimate(normalized);
    out.rows.push_back(row);
  }
  double cross = 0.0;
  double norm = 0.0;
  for (double p : weighted_p) {
    const auto est = estimate_column(weighted, p, seed);
    out.weighted.push_back(est);
    out.constants.push_back(est.lp_value / std::sqrt(p));
    cross += est.lp_value * std::sqrt(p);
    norm += p;
  }
  if (!out.constants.empty()) {
    out.constant_fit = cross / norm;
    const auto [lo, hi] = std::minmax_element(out.constants.begin(), out.constants.end());
    out.constant_spread = *lo > 0.0 ? *hi / *lo - 1.0 : 0.0;
  }
  return out;
}

double weighted_sup_lemma_factor(double p, double alpha, double beta) {
  require(p >= 1.0, "lemma needs p >= 1");
  require(alpha > 1.0 / p, "lemma needs alpha > 1/p");
  require(beta >= 0.0 && beta < alpha - 1.0 / p, "lemma needs beta in [0, alpha - 1/p)");
  return std::pow((alpha - beta) / (alpha - 1.0 / p - beta), 1.0 / p);
}

KcResult experiment_kc_bound(double alpha, double beta, double p, std::size_t grid_size, std::size_t replicates,
                             std::uint64_t seed, KcProcess process, Workers workers) {
  constexpr double d = 1.0;
  require(p >= 1.0 && p > d, "Kolmogorov-Chentsov needs p > d");
  require(alpha > d / p && alpha < 1.0, "Kolmogorov-Chentsov needs alpha in (d/p, 1)");
  if (!(beta > 0.0 && beta < alpha - d / p)) {
    std::ostringstream msg;
    msg << "beta = " << beta << " outside (0, alpha - d/p) = (0, " << alpha - d / p << ")";
    throw ParameterError(msg.str());
  }
  require(grid_size >= 2 && replicates >= 2, "need a grid of two points and two replicates");

  const double dt = 1.0 / static_cast<double>(grid_size - 1);
  std::vector<double> inverse_weight(grid_size, 0.0);
  for (std::size_t lag = 1; lag < grid_size; ++lag) inverse_weight[lag] = std::pow(lag * dt, -beta);

  std::vector<double> samples(replicates, 0.0);
  if (process == KcProcess::brownian) {
    const double sd = std::sqrt(dt);
    parallel_for(replicates, workers, [&](std::size_t r) {
      RandomStream rng(seed, substream(r));
      std::vector<double> path(grid_size, 0.0);
      for (std::size_t i = 1; i < grid_size; ++i) path[i] = path[i - 1] + sd * rng.normal();
      samples[r] = lag_seminorm(path, inverse_weight).first;
    });
  }

  KcResult out;
  const double growth = std::exp2(alpha);
  out.embedding_constant = embedding_constants(growth, growth, euclidean_dimension_info(1)).upper;
  // ||B_t - B_s||_p = mu_p |t - s|^{1/2}; the sup of mu_p |t - s|^{1/2 - alpha} over grid pairs.
  out.moment_constant = process == KcProcess::brownian
                            ? normal_abs_moment_norm(p) * std::max(1.0, std::pow(dt, 0.5 - alpha))
                            : 0.0;
  out.comparison.lhs = estimate_column(samples, p, seed);
  out.comparison.rhs = 24.0 * out.embedding_constant / beta * weighted_sup_lemma_factor(p, alpha, beta) *
                       out.moment_constant;
  return out;
}

}  // namespace chainbound
