#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chainbound/parallel.hpp"
#include "chainbound/statistics.hpp"

namespace chainbound {

// Largest number of doubles a single ensemble may hold (512 MiB).
inline constexpr std::size_t kArrayBudget = std::size_t{1} << 26;

// Gaussian increments of K independent Brownian motions per replicate.
struct WienerEnsemble {
  std::size_t replicates = 0;
  std::size_t components = 0;
  std::size_t steps = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> increments;  // [replicate][component][step]

  std::span<const double> path_increments(std::size_t replicate, std::size_t component) const noexcept {
    return {increments.data() + (replicate * components + component) * steps, steps};
  }
};

// Replicate r draws its K x N increments, component-major, from stream substream(r).
WienerEnsemble simulate_brownian(std::size_t replicates, std::size_t components, std::size_t steps, double dt,
                                 std::uint64_t seed, Workers workers = {});

// Left-point sum sum_i f_i dW_i.
double ito_integral(std::span<const double> integrand, std::span<const double> increments);

// Cumulative path W(t_0 = 0), W(t_1), ... from increments.
std::vector<double> brownian_path(std::span<const double> increments);

struct OUParams {
  double a = 1.0;
  double T = 1.0;
  double dt = 0.01;
  // f(t, u); deterministic forcings ignore u.
  std::function<double(double, double)> forcing = [](double, double) { return 1.0; };
  bool state_dependent = false;
  double D = 1.0;

  std::size_t steps() const;
  void validate() const;
};

// u_0 = 0, u_{i+1} = e^{-a dt} u_i + f(t_i, u_i) sqrt((1 - e^{-2 a dt}) / (2a)) dW_i / sqrt(dt).
std::vector<double> ou_exact_path(const OUParams& params, std::span<const double> increments);

// Smallest grid size n with 0.5826 sqrt(1/n) <= relative_gap * sqrt(pi/2): the expected
// shortfall of a grid maximum of Brownian motion on [0, 1] relative to E sup |B|.
std::size_t sup_grid_steps(double relative_gap = 0.02);

struct Comparison {
  McEstimate lhs;
  double rhs = 0.0;
  double rhs_standard_error = 0.0;
  double sigmas = 3.0;

  // lhs <= rhs within `sigmas` joint standard errors.
  bool holds() const noexcept;
};

struct SupIntegralsRow {
  std::size_t n = 0;
  Comparison comparison;
};

struct SupIntegralsResult {
  std::vector<SupIntegralsRow> rows;
  std::size_t steps = 0;
  // Regression of log(lhs) on log log n (rows with n >= 3 only).
  LinearFit scaling;
};

// n_list sorted ascending; path k (1-based) has weight sigma(k). Replicates reuse the
// first n paths for every n, so rows are nested.
SupIntegralsResult experiment_sup_integrals(std::vector<std::size_t> n_list, const std::function<double(std::size_t)>& sigma,
                                            double p, double T, std::size_t replicates, std::uint64_t seed,
                                            std::size_t steps = 0, Workers workers = {});

struct OULongtermRow {
  double T = 0.0;
  double dt = 0.0;
  McEstimate estimate;
  double bound = 0.0;
};

struct OULongtermResult {
  std::vector<OULongtermRow> rows;
  // Regression of estimate^2 on log T.
  LinearFit growth;
  bool all_below_bound() const noexcept;
};

// dt = min(max_dt, T / max_steps) per horizon. Forcing must be deterministic.
OULongtermResult experiment_ou_longterm(double a, std::vector<double> horizons, double p, std::size_t replicates,
                                        std::uint64_t seed, const OUParams& forcing_template = {},
                                        double max_dt = 0.01, double max_steps = 1e5, Workers workers = {});

enum class MartingaleScheme { rademacher, gaussian };
MartingaleScheme parse_martingale_scheme(const std::string& name);

struct MartingaleSupResult {
  Comparison comparison;
  McEstimate jump_term;      // ||sup_j (p + log j) d*(f_j)||_p
  McEstimate variance_term;  // ||sup_j sqrt(p + log j) s(f_j)||_p
};

// n walks of `steps` conditionally symmetric increments weight(j) * xi, xi Rademacher or N(0,1).
MartingaleSupResult experiment_martingale_sup(std::size_t n, std::size_t steps, MartingaleScheme scheme,
                                              const std::function<double(std::size_t)>& weight, double p,
                                              std::size_t replicates, std::uint64_t seed, Workers workers = {});

enum class GoodLambdaIntegrand { constant, random_stop };
GoodLambdaIntegrand parse_good_lambda_integrand(const std::string& name);

struct GoodLambdaRow {
  double lambda = 0.0;
  double joint_probability = 0.0;  // P(Psi* > beta lambda, s(psi) <= delta lambda)
  double tail_probability = 0.0;   // P(Psi* > lambda)
  double bound = 0.0;              // 3 exp(-(beta-1)^2 / (4 delta^2)) P(Psi* > lambda)
  double joint_standard_error = 0.0;
  bool eligible = false;           // tail_probability >= 50 / R
  bool holds = false;
};

struct GoodLambdaResult {
  std::vector<GoodLambdaRow> rows;
  double factor = 0.0;
  std::size_t eligible_count() const noexcept;
  bool all_hold() const noexcept;
};

// psi = 1_{t < tau} with tau uniform on [0, T] (random_stop) or tau = T (constant).
GoodLambdaResult experiment_good_lambda(double beta, double delta, std::vector<double> lambdas,
                                        GoodLambdaIntegrand integrand, double T, std::size_t replicates,
                                        std::uint64_t seed, std::size_t steps = 0, Workers workers = {});

struct LevyRow {
  double h = 0.0;
  std::size_t window = 0;    // h N grid steps
  double raw_sup_mean = 0.0;  // mean of sup_{|r-s| <= h} |W(s) - W(r)|
  MeanEstimate statistic;     // raw / sqrt(2 h |log h|)
};

struct LevyResult {
  std::vector<LevyRow> rows;
  std::vector<McEstimate> weighted;  // one per p in weighted_p
  std::vector<double> constants;     // estimate / sqrt(p)
  double constant_fit = 0.0;         // least-squares C in estimate ~ C sqrt(p)
  double constant_spread = 0.0;      // max / min - 1 of constants
  std::size_t weighted_points = 0;
};

// Brownian motion on [0, 1] with `steps` increments. The weighted sup of
// |W(s) - W(r)| / sqrt((s - r)(1 - log(s - r) / 2)) runs over every pair of a
// `weighted_points`-point subgrid.
LevyResult experiment_levy_modulus(std::size_t steps, std::vector<double> h_list, std::size_t replicates,
                                   std::uint64_t seed, std::vector<double> weighted_p = {1, 2, 4, 8},
                                   std::size_t weighted_points = 8193, Workers workers = {});

enum class KcProcess { brownian, constant };

struct KcResult {
  Comparison comparison;
  double embedding_constant = 0.0;  // C_M^alpha
  double moment_constant = 0.0;     // |Z|_{C^alpha(M, L^p)}
};

// Z on the grid {i / (grid_size - 1)}; rhs = 24 C_M^alpha / beta ((alpha - beta) / (alpha - 1/p - beta))^{1/p} |Z|_alpha.
KcResult experiment_kc_bound(double alpha, double beta, double p, std::size_t grid_size, std::size_t replicates,
                             std::uint64_t seed, KcProcess process = KcProcess::brownian, Workers workers = {});

// ((alpha - beta) / (alpha - 1/p - beta))^{1/p}.
double weighted_sup_lemma_factor(double p, double alpha, double beta);

}  // namespace chainbound
