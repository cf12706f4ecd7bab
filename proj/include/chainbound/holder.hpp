#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chainbound/chaining.hpp"
#include "chainbound/metric.hpp"
#include "chainbound/modulus.hpp"
#include "chainbound/parallel.hpp"

namespace chainbound {

enum class FieldNorm { abs, euclidean };

// Values of a function on every point of a metric space, scalar or in R^m.
class SampledField {
 public:
  static SampledField scalar(MetricSpace space, std::vector<double> values);
  // Row-major, one row of `value_dim` entries per point.
  static SampledField vector(MetricSpace space, std::size_t value_dim, std::vector<double> values);

  const MetricSpace& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return space_.size(); }
  std::size_t value_dim() const noexcept { return value_dim_; }
  FieldNorm norm() const noexcept { return value_dim_ == 1 ? FieldNorm::abs : FieldNorm::euclidean; }
  std::span<const double> value(PointId i) const noexcept { return {values_.data() + i * value_dim_, value_dim_}; }
  const std::vector<double>& values() const noexcept { return values_; }

  // ||f(i) - f(j)||
  double difference(PointId i, PointId j) const noexcept;

 private:
  SampledField(MetricSpace space, std::size_t value_dim, std::vector<double> values);

  MetricSpace space_;
  std::size_t value_dim_;
  std::vector<double> values_;
};

struct SeminormResult {
  double value = 0.0;
  std::optional<std::pair<PointId, PointId>> witness;
  std::string weight;
  // Position of the witness in the pair sequence (embedded seminorm only).
  std::optional<std::uint64_t> sequence_index;
};

// max over distinct pairs of ||f(x) - f(y)|| / w(d(x, y) / diam). The witness is the
// lexicographically first maximizing pair.
SeminormResult seminorm_exact(const SampledField& f, const Modulus& w, Workers workers = {});

// diam^{-alpha} * seminorm_exact(f, x^alpha), i.e. the unnormalized alpha-Hölder seminorm.
SeminormResult holder_seminorm_alpha(const SampledField& f, double alpha, Workers workers = {});

// sup_k ||f(x_k) - f(y_k)|| / w(k^{-1/d}) over the pair sequence of `net`; d defaults
// to the net's dimension.
SeminormResult seminorm_embedded(const SampledField& f, const ChainingNet& net, const Modulus& w,
                                 std::optional<double> d = std::nullopt);

struct EmbeddingConstants {
  double lower = 0.0;  // exact <= lower * embedded
  double upper = 0.0;  // embedded <= upper * exact
};

EmbeddingConstants embedding_constants(double c_w, double d_w, const DimensionInfo& dims);

// The pairs that can maximize ||f(x) - f(y)|| / (d(x, y) / diam)^alpha for some alpha >= 0:
// those not dominated by a pair that is both closer and has a larger difference.
// Querying the frontier gives the same maximum as a full pair scan.
class PowerSeminormIndex {
 public:
  explicit PowerSeminormIndex(const SampledField& f, Workers workers = {});

  // seminorm_exact(f, Power(alpha)).value, for any alpha in (0, 1].
  double normalized(double alpha) const;
  std::size_t frontier_size() const noexcept { return frontier_.size(); }

 private:
  struct Entry {
    double relative_distance;
    double difference;
  };
  std::vector<Entry> frontier_;
};

struct LogBlowup {
  double lhs = 0.0;
  double middle = 0.0;
  double rhs = 0.0;
  double grid_tolerance = 0.05;
  double best_alpha = 0.0;

  bool holds() const noexcept { return lhs <= middle * (1.0 + grid_tolerance) && middle <= rhs; }
};

// w(x) = (1 - beta log x)^gamma x^{alpha_star}; middle is the max over alpha_k =
// alpha_star (k - 1/2) / grid, k = 1..grid, of (alpha_star - alpha)^gamma diam^alpha |f|_alpha.
LogBlowup log_blowup_equivalence(const SampledField& f, double alpha_star, double gamma, double beta, int alpha_grid,
                                 Workers workers = {});

// Exact pair-max on the uniform grid t_i = i * step: max_{i<j} |v_j - v_i| * inverse_weight[j - i],
// where inverse_weight[lag] = 1 / weight at distance lag * step (entry 0 unused).
// Returns (value, (i, j)).
std::pair<double, std::pair<std::size_t, std::size_t>> lag_seminorm(std::span<const double> values,
                                                                     std::span<const double> inverse_weight);

}  // namespace chainbound
