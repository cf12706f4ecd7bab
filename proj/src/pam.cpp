#include "chainbound/pam.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "chainbound/errors.hpp"
#include "chainbound/random.hpp"
#include "chainbound/stochastic.hpp"

namespace chainbound {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const char* message) {
  if (!ok) throw ParameterError(message);
}

// RODFT00 plans keyed by size. Planning is serialized; fftw_execute_r2r on an existing
// plan is safe from any thread.
class SinePlans {
 public:
  static SinePlans& instance() {
    static SinePlans plans;
    return plans;
  }

  fftw_plan get(int n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<double> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
    fftw_plan plan = fftw_plan_r2r_1d(n, in.data(), out.data(), FFTW_RODFT00, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw Error("fftw could not plan a sine transform");
    plans_.emplace(n, plan);
    return plan;
  }

  ~SinePlans() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<int, fftw_plan> plans_;
};

// out_j = 2 sum_k in_k sin(pi (j + 1)(k + 1) / (n + 1)).
void dst1(fftw_plan plan, std::vector<double>& in, std::vector<double>& out) {
  fftw_execute_r2r(plan, in.data(), out.data());
}

struct GaussRule {
  std::vector<double> nodes;    // on [0, 1]
  std::vector<double> weights;
};

GaussRule gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      derivative = n * (z * p0 - p1) / (z * z - 1.0);
      const double step = p0 / derivative;
      z -= step;
      if (std::abs(step) < 1e-15) break;
    }
    rule.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
    rule.weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * derivative * derivative);
  }
  return rule;
}

// int_0^length f(u) du for f concentrated near u = 0 on scales down to `finest`:
// panels [length 2^{-j-1}, length 2^{-j}] plus [0, length 2^{-J}].
template <class F>
double graded_integral(double length, double finest, const GaussRule& rule, F&& f) {
  if (!(length > 0.0)) return 0.0;
  int levels = 0;
  if (length > finest) levels = static_cast<int>(std::ceil(std::log2(length / finest)));
  double total = 0.0;
  double upper = length;
  for (int j = 0; j <= levels; ++j) {
    const double lower = j == levels ? 0.0 : upper / 2.0;
    const double width = upper - lower;
    double panel = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) panel += rule.weights[q] * f(lower + width * rule.nodes[q]);
    total += width * panel;
    upper = lower;
  }
  return total;
}

double green_scale(double s, double t, double x, double y) {
  const double gap = std::abs(x - y);
  double scale = std::sqrt(t - s);
  if (gap > 0.0) scale -= std::log(gap) * gap;
  return scale;
}

}  // namespace

double green_eval(double t, double x, double y, int modes) {
  if (!(t > 0.0)) throw DomainError("green_eval needs t > 0");
  require(modes >= 1, "green_eval needs K >= 1");
  require(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0, "green_eval needs x, y in [0, 1]");
  double total = 0.0;
  for (int k = modes; k >= 1; --k) {
    const double lambda = kPi * kPi * k * k;
    total += 2.0 * std::exp(-lambda * t) * std::sin(kPi * k * x) * std::sin(kPi * k * y);
  }
  return total;
}

double green_increment_energy(double s, double t, double x, double y, int modes, int points_per_panel) {
  require(s >= 0.0 && s < t && std::isfinite(t), "green energy needs 0 <= s < t");
  require(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0, "green energy needs x, y in [0, 1]");
  require(modes >= 1, "green energy needs K >= 1");
  require(points_per_panel >= 1, "green energy needs at least one quadrature point");
  const auto K = static_cast<std::size_t>(modes);
  std::vector<double> lambda(K), at_x(K), mixed(K);
  for (std::size_t i = 0; i < K; ++i) {
    const double k = static_cast<double>(i + 1);
    lambda[i] = kPi * kPi * k * k;
    at_x[i] = std::sin(kPi * k * x);
    mixed[i] = at_x[i] * std::exp(-lambda[i] * (t - s)) - std::sin(kPi * k * y);
  }
  const GaussRule rule = gauss_legendre(points_per_panel);
  const double finest = 1e-3 / lambda.back();
  // r in (s, t) at distance u = t - r: only G(t - r, x, .) is present.
  const double upper = graded_integral(t - s, finest, rule, [&](double u) {
    double sum = 0.0;
    for (std::size_t i = 0; i < K; ++i) sum += at_x[i] * at_x[i] * std::exp(-2.0 * lambda[i] * u);
    return 2.0 * sum;
  });
  // r in (0, s) at distance v = s - r.
  const double lower = graded_integral(s, finest, rule, [&](double v) {
    double sum = 0.0;
    for (std::size_t i = 0; i < K; ++i) sum += mixed[i] * mixed[i] * std::exp(-2.0 * lambda[i] * v);
    return 2.0 * sum;
  });
  return upper + lower;
}

GreenConstant green_regularity_constant(const GreenGrid& grid, int modes, int points_per_panel, double tolerance,
                                        Workers workers) {
  require(points_per_panel >= 2, "green constant needs at least two quadrature points per panel");
  require(tolerance > 0.0, "green constant tolerance must be positive");
  std::vector<GreenTuple> tuples;
  for (double s : grid.s)
    for (double t : grid.t)
      for (double x : grid.x)
        for (double y : grid.y)
          if (s < t) tuples.push_back({s, t, x, y, 0.0, green_scale(s, t, x, y), 0.0});
  require(!tuples.empty(), "green grid has no tuple with s < t");

  const int coarse_points = points_per_panel / 2;
  std::vector<double> coarse(tuples.size());
  parallel_for(tuples.size(), workers, [&](std::size_t i) {
    GreenTuple& tuple = tuples[i];
    tuple.energy = green_increment_energy(tuple.s, tuple.t, tuple.x, tuple.y, modes, points_per_panel);
    coarse[i] = green_increment_energy(tuple.s, tuple.t, tuple.x, tuple.y, modes, coarse_points);
    tuple.ratio = tuple.energy / tuple.scale;
  });

  GreenConstant result;
  result.points_per_panel = points_per_panel;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const GreenTuple& tuple = tuples[i];
    const double change = std::abs(tuple.energy - coarse[i]) / std::max(tuple.energy, 1e-300);
    if (change > tolerance) {
      std::ostringstream msg;
      msg << "green quadrature did not converge at (s, t, x, y) = (" << tuple.s << ", " << tuple.t << ", " << tuple.x
          << ", " << tuple.y << "): relative change " << change;
      throw AccuracyError(msg.str());
    }
    result.c_fit = std::max(result.c_fit, tuple.ratio);
    result.c_fit_coarse = std::max(result.c_fit_coarse, coarse[i] / tuple.scale);
  }
  result.relative_change = std::abs(result.c_fit - result.c_fit_coarse) / result.c_fit;
  result.tuples = std::move(tuples);
  return result;
}

void PAMParams::validate() const {
  require(eta >= 0.0 && std::isfinite(eta), "eta must be finite and >= 0");
  require(T > 0.0 && std::isfinite(T), "T must be positive");
  require(K >= 1, "K must be >= 1");
  require(Mx >= 2, "Mx must be >= 2");
  require(K <= Mx, "K must be <= Mx");
  require(Nt >= 1, "Nt must be >= 1");
  require(slices >= 0 && (slices == 0 || Nt % slices == 0), "slices must divide Nt");
  require(p >= 1.0, "p must be >= 1");
  require(replicates >= 1, "replicates must be >= 1");
  for (double c : u0) require(std::isfinite(c), "u0 coefficients must be finite");
  const double stored = double(replicates) * double(stored_slices() + 1) * double(Mx + 1);
  if (double(Nt) * double(K) > double(kArrayBudget) || stored > double(kArrayBudget)) {
    std::ostringstream msg;
    msg << "PAM ensemble exceeds the array budget of " << kArrayBudget << " doubles";
    throw SizeError(msg.str());
  }
}

bool PAMParams::step_resolves_modes() const noexcept { return dt() <= 1.0 / (kPi * kPi * double(K) * double(K)); }

std::vector<double> sine_coefficients(std::span<const double> interior) {
  const int n = static_cast<int>(interior.size());
  require(n >= 1, "sine transform needs at least one interior point");
  std::vector<double> in(interior.begin(), interior.end()), out(interior.size());
  dst1(SinePlans::instance().get(n), in, out);
  const double scale = std::numbers::sqrt2 / 2.0 / (n + 1);
  for (double& v : out) v *= scale;
  return out;
}

std::vector<double> sine_synthesis(std::span<const double> coefficients) {
  const int n = static_cast<int>(coefficients.size());
  require(n >= 1, "sine transform needs at least one coefficient");
  std::vector<double> in(coefficients.begin(), coefficients.end()), out(coefficients.size());
  dst1(SinePlans::instance().get(n), in, out);
  for (double& v : out) v *= std::numbers::sqrt2 / 2.0;
  return out;
}

PAMEnsemble pam_solve(const PAMParams& params, Workers workers) {
  params.validate();
  const auto K = static_cast<std::size_t>(params.K);
  const auto Mx = static_cast<std::size_t>(params.Mx);
  const auto slices = static_cast<std::size_t>(params.stored_slices());
  const std::size_t stride = static_cast<std::size_t>(params.Nt) / slices;
  const double dt = params.dt();
  const double noise_scale = std::sqrt(dt);

  // Products of two K-mode fields have modes up to 2K < n + 1 on this grid, so the
  // projection back onto the first K modes is exact.
  const int product_size = 2 * params.K + 1;
  const std::size_t product_n = static_cast<std::size_t>(product_size);
  // Reconstruction on j / Mx uses the first Mx - 1 modes; mode Mx vanishes there.
  const int grid_size = params.Mx - 1;
  fftw_plan product_plan = SinePlans::instance().get(product_size);
  fftw_plan grid_plan = grid_size >= 1 ? SinePlans::instance().get(grid_size) : nullptr;

  std::vector<double> initial(K, 0.0);
  if (params.u0_function) {
    std::vector<double> samples(product_n);
    for (std::size_t j = 0; j < product_n; ++j) {
      const double x = double(j + 1) / double(product_n + 1);
      samples[j] = params.u0_function(x);
      require(std::isfinite(samples[j]), "u0 must be finite on the grid");
    }
    const std::vector<double> coefficients = sine_coefficients(samples);
    std::copy_n(coefficients.begin(), K, initial.begin());
  } else {
    for (std::size_t k = 0; k < std::min(K, params.u0.size()); ++k) initial[k] = params.u0[k] / std::numbers::sqrt2;
  }

  std::vector<double> decay(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double wave = kPi * double(k + 1);
    decay[k] = std::exp(-wave * wave * dt);
  }

  PAMEnsemble ensemble;
  ensemble.replicates = params.replicates;
  ensemble.slices = slices;
  ensemble.points = Mx + 1;
  ensemble.T = params.T;
  ensemble.p = params.p;
  ensemble.seed = params.seed;
  ensemble.values.assign(params.replicates * (slices + 1) * (Mx + 1), 0.0);

  const double half_sqrt2 = std::numbers::sqrt2 / 2.0;
  const double analysis_scale = half_sqrt2 / double(product_n + 1);

  parallel_for(params.replicates, workers, [&](std::size_t r) {
    RandomStream stream(params.seed, substream(r));
    std::vector<double> coefficients = initial;
    std::vector<double> spectrum(product_n, 0.0), field(product_n), noise(product_n), product(product_n),
        projected(product_n);
    std::vector<double> grid_in(grid_size >= 1 ? std::size_t(grid_size) : 0), grid_out(grid_in.size());
    double* base = ensemble.values.data() + r * (slices + 1) * (Mx + 1);

    auto store = [&](std::size_t slice) {
      double* row = base + slice * (Mx + 1);
      if (grid_plan == nullptr) return;
      std::fill(grid_in.begin(), grid_in.end(), 0.0);
      std::copy_n(coefficients.begin(), std::min(K, grid_in.size()), grid_in.begin());
      dst1(grid_plan, grid_in, grid_out);
      for (std::size_t j = 1; j < Mx; ++j) row[j] = half_sqrt2 * grid_out[j - 1];
      row[0] = 0.0;
      row[Mx] = 0.0;
    };

    store(0);
    for (std::size_t step = 1; step <= static_cast<std::size_t>(params.Nt); ++step) {
      if (params.eta > 0.0) {
        std::fill(spectrum.begin(), spectrum.end(), 0.0);
        std::copy(coefficients.begin(), coefficients.end(), spectrum.begin());
        dst1(product_plan, spectrum, field);
        std::fill(spectrum.begin(), spectrum.end(), 0.0);
        for (std::size_t k = 0; k < K; ++k) spectrum[k] = noise_scale * stream.normal();
        dst1(product_plan, spectrum, noise);
        // field and noise both carry a factor 2 / sqrt(2) relative to physical values.
        for (std::size_t j = 0; j < product_n; ++j) product[j] = 0.5 * field[j] * noise[j];
        dst1(product_plan, product, projected);
        for (std::size_t k = 0; k < K; ++k)
          coefficients[k] = decay[k] * (coefficients[k] + params.eta * analysis_scale * projected[k]);
      } else {
        for (std::size_t k = 0; k < K; ++k) coefficients[k] *= decay[k];
      }
      if (step % stride == 0) store(step / stride);
    }
  });
  return ensemble;
}

double parabolic_metric(double t, double x, double s, double y) {
  const double gap = std::abs(x - y);
  double value = std::sqrt(std::abs(t - s));
  if (gap > 0.0) value += (1.0 - 0.5 * std::log(gap)) * gap;
  return value;
}

std::vector<double> pam_modulus_samples(const PAMEnsemble& ensemble, double time_exponent, Workers workers) {
  require(ensemble.replicates >= 1 && ensemble.slices >= 1 && ensemble.points >= 2, "empty PAM ensemble");
  require(time_exponent > 0.0, "time exponent must be positive");
  const std::size_t S = ensemble.slices + 1;
  const std::size_t P = ensemble.points;
  const double time_cell = ensemble.T / double(ensemble.slices);
  const double space_cell = 1.0 / double(P - 1);

  std::vector<double> time_term(S, 0.0), space_term(P, 0.0);
  for (std::size_t lag = 1; lag < S; ++lag) {
    const double gap = time_cell * double(lag);
    time_term[lag] = std::sqrt(std::max(0.0, 1.0 - 0.25 * std::log(gap))) * std::pow(gap, time_exponent);
  }
  for (std::size_t lag = 1; lag < P; ++lag) {
    const double gap = space_cell * double(lag);
    space_term[lag] = (1.0 - 0.5 * std::log(gap)) * std::sqrt(gap);
  }

  std::vector<double> samples(ensemble.replicates);
  parallel_for(ensemble.replicates, workers, [&](std::size_t r) {
    const double* field = ensemble.field(r).data();
    // Max |U| difference per (time lag, signed space lag + P - 1).
    std::vector<double> lag_max(S * (2 * P - 1), 0.0);
    for (std::size_t lt = 0; lt < S; ++lt) {
      double* out = lag_max.data() + lt * (2 * P - 1);
      for (std::size_t i = 0; i + lt < S; ++i) {
        const double* a = field + i * P;
        const double* b = field + (i + lt) * P;
        for (std::size_t shift = 0; shift < P; ++shift) {
          // b[j + shift] - a[j] and b[j] - a[j + shift].
          double forward = out[P - 1 + shift];
          double backward = out[P - 1 - shift];
          for (std::size_t j = 0; j + shift < P; ++j) {
            forward = std::max(forward, std::abs(b[j + shift] - a[j]));
            backward = std::max(backward, std::abs(b[j] - a[j + shift]));
          }
          out[P - 1 + shift] = forward;
          out[P - 1 - shift] = backward;
        }
      }
    }
    double best = 0.0;
    for (std::size_t lt = 0; lt < S; ++lt)
      for (std::size_t c = 0; c < 2 * P - 1; ++c) {
        const std::size_t lx = c >= P - 1 ? c - (P - 1) : (P - 1) - c;
        if (lt == 0 && lx == 0) continue;
        best = std::max(best, lag_max[lt * (2 * P - 1) + c] / (time_term[lt] + space_term[lx]));
      }
    samples[r] = best;
  });
  return samples;
}

McEstimate pam_modulus_statistic(const PAMEnsemble& ensemble, double p, double time_exponent, Workers workers) {
  require(p == ensemble.p, "statistic p must match the solver's p");
  const std::vector<double> samples = pam_modulus_samples(ensemble, time_exponent, workers);
  return lp_estimate(samples, p, ensemble.seed);
}

namespace {

static_assert(std::endian::native == std::endian::little, "snapshot IO assumes a little-endian host");

constexpr std::array<char, 8> kSnapshotMagic = {'C', 'B', 'P', 'A', 'M', '0', '0', '1'};

template <class T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T take(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ParseError("truncated PAM snapshot header");
  return value;
}

}  // namespace

void write_snapshots(const std::filesystem::path& path, const PAMEnsemble& ensemble) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kSnapshotMagic.data(), kSnapshotMagic.size());
  put<std::uint64_t>(out, ensemble.replicates);
  put<std::uint64_t>(out, ensemble.slices);
  put<std::uint64_t>(out, ensemble.points);
  put<std::uint64_t>(out, ensemble.seed);
  put<double>(out, ensemble.T);
  put<double>(out, ensemble.p);
  out.write(reinterpret_cast<const char*>(ensemble.values.data()),
            static_cast<std::streamsize>(ensemble.values.size() * sizeof(double)));
  if (!out) throw Error("failed writing " + path.string());
}

PAMEnsemble read_snapshots(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kSnapshotMagic) throw ParseError(path.string() + " is not a PAM snapshot");
  PAMEnsemble ensemble;
  ensemble.replicates = take<std::uint64_t>(in);
  ensemble.slices = take<std::uint64_t>(in);
  ensemble.points = take<std::uint64_t>(in);
  ensemble.seed = take<std::uint64_t>(in);
  ensemble.T = take<double>(in);
  ensemble.p = take<double>(in);
  const double count = double(ensemble.replicates) * double(ensemble.slices + 1) * double(ensemble.points);
  if (count > double(kArrayBudget)) throw SizeError("PAM snapshot exceeds the array budget");
  ensemble.values.resize(ensemble.replicates * (ensemble.slices + 1) * ensemble.points);
  in.read(reinterpret_cast<char*>(ensemble.values.data()),
          static_cast<std::streamsize>(ensemble.values.size() * sizeof(double)));
  if (!in) throw ParseError("truncated PAM snapshot body");
  return ensemble;
}

}  // namespace chainbound
