#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "chainbound/parallel.hpp"
#include "chainbound/statistics.hpp"

namespace chainbound {

// Truncated Dirichlet heat kernel sum_{k <= K} 2 e^{-pi^2 k^2 t} sin(pi k x) sin(pi k y).
double green_eval(double t, double x, double y, int modes);

// int_0^t int_0^1 |G(t - r, x, z) - G(s - r, y, z) 1_{r <= s}|^2 dz dr with the z integral
// done by Parseval and the r integral by Gauss-Legendre on panels graded geometrically
// towards r = s and r = t.
double green_increment_energy(double s, double t, double x, double y, int modes, int points_per_panel);

struct GreenGrid {
  std::vector<double> s;
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> y;
};

struct GreenTuple {
  double s, t, x, y;
  double energy;
  double scale;  // |t - s|^{1/2} - log|x - y| |x - y|
  double ratio;
};

struct GreenConstant {
  double c_fit = 0.0;           // at the refined resolution
  double c_fit_coarse = 0.0;    // at half the resolution
  double relative_change = 0.0;
  int points_per_panel = 0;
  std::vector<GreenTuple> tuples;
};

// Max of energy / scale over every (s, t, x, y) with s < t. Throws AccuracyError when
// some tuple changes by more than `tolerance` between `points_per_panel` / 2 and
// `points_per_panel` Gauss points.
GreenConstant green_regularity_constant(const GreenGrid& grid, int modes, int points_per_panel = 16,
                                        double tolerance = 0.05, Workers workers = {});

struct PAMParams {
  double eta = 1.0;
  double T = 0.1;
  int K = 63;     // sine modes
  int Mx = 64;    // spatial intervals; positions j / Mx
  int Nt = 4096;  // time steps
  int slices = 0;  // stored time intervals, a divisor of Nt; 0 stores every step
  // Initial condition as sine coefficients c_k of sum_k c_k sin(pi k x), k = 1, 2, ...;
  // coefficients past K are dropped.
  std::vector<double> u0 = {1.0};
  // When set, replaces u0: sampled on the solver grid and projected onto the first K modes.
  std::function<double(double)> u0_function;
  double p = 6.0;
  std::size_t replicates = 1;
  std::uint64_t seed = 0;

  void validate() const;
  double dt() const noexcept { return T / Nt; }
  int stored_slices() const noexcept { return slices == 0 ? Nt : slices; }
  // dt <= 1 / (pi^2 K^2).
  bool step_resolves_modes() const noexcept;
  // The existence result behind the modulus statistic needs p > 4.
  bool existence_regime() const noexcept { return p > 4.0; }
};

// Stored fields U(t_i, x_j), i = 0..slices, j = 0..Mx, for every replicate.
struct PAMEnsemble {
  std::size_t replicates = 0;
  std::size_t slices = 0;  // stored times minus one
  std::size_t points = 0;  // Mx + 1
  double T = 0.0;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> values;  // [replicate][slice][point]

  double time(std::size_t i) const noexcept { return T * double(i) / double(slices); }
  double position(std::size_t j) const noexcept { return double(j) / double(points - 1); }
  std::span<const double> field(std::size_t replicate) const noexcept {
    return {values.data() + replicate * (slices + 1) * points, (slices + 1) * points};
  }
  double at(std::size_t replicate, std::size_t i, std::size_t j) const noexcept {
    return values[(replicate * (slices + 1) + i) * points + j];
  }
};

PAMEnsemble pam_solve(const PAMParams& params, Workers workers = {});

// |t - s|^{1/2} + (1 - log|x - y| / 2) |x - y|.
double parabolic_metric(double t, double x, double s, double y);

// Per replicate, the max over distinct stored pairs of |U(t, x) - U(s, y)| divided by
// (1 - log|t - s| / 4)^{1/2} |t - s|^{time_exponent} + (1 - log|x - y| / 2) |x - y|^{1/2};
// a zero lag drops its term. Returns the L^p estimate over replicates; p must equal the
// solver's p.
McEstimate pam_modulus_statistic(const PAMEnsemble& ensemble, double p, double time_exponent = 0.25,
                                 Workers workers = {});

// The per-replicate maxima behind pam_modulus_statistic.
std::vector<double> pam_modulus_samples(const PAMEnsemble& ensemble, double time_exponent = 0.25,
                                        Workers workers = {});

// Sine coefficients (orthonormal basis sqrt(2) sin(pi k x)) of the values on the
// interior points j / (n + 1), j = 1..n.
std::vector<double> sine_coefficients(std::span<const double> interior);
// Inverse of sine_coefficients.
std::vector<double> sine_synthesis(std::span<const double> coefficients);

// Flat binary snapshot: "CBPAM001", u64 replicates, u64 slices, u64 points, u64 seed,
// f64 T, f64 p, then the values row-major. Everything little-endian.
void write_snapshots(const std::filesystem::path& path, const PAMEnsemble& ensemble);
PAMEnsemble read_snapshots(const std::filesystem::path& path);

}  // namespace chainbound
