#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chainbound {

using PointId = std::uint32_t;

struct DimensionInfo {
  enum class Source { fitted, euclidean_closed_form, carried, user };

  double d = 1.0;
  double c = 1.0;
  std::uint64_t n2 = 1;
  Source source = Source::user;

  void validate() const;
  // "greedy-certified" for fitted constants, since greedy covers only bound N from above.
  std::string label() const;
};

// Closed-form constants for subsets of R^dim: c = (4 dim)^dim, n2 = (81 dim^2)^dim.
DimensionInfo euclidean_dimension_info(int dim);

class MetricSpace {
 public:
  enum class Kind { euclidean, chebyshev, explicit_table, parabolic };
  using DistanceFn = std::function<double(std::span<const double>, std::span<const double>)>;

  static MetricSpace euclidean(std::vector<double> coordinates, std::size_t dim);
  static MetricSpace chebyshev(std::vector<double> coordinates, std::size_t dim);
  // Row-major n x n table. Symmetry, zero diagonal and positivity are checked in full,
  // the triangle inequality on min(n^3, 1e5) triples.
  static MetricSpace explicit_table(std::vector<double> table, std::size_t n);
  // Coordinates with an externally supplied distance, used for the parabolic metric.
  static MetricSpace from_function(Kind kind, std::vector<double> coordinates, std::size_t dim, DistanceFn distance);

  std::size_t size() const noexcept { return n_; }
  std::size_t coordinate_dim() const noexcept { return dim_; }
  Kind kind() const noexcept { return kind_; }
  bool has_coordinates() const noexcept { return coordinates_ != nullptr; }
  std::span<const double> coordinates(PointId i) const;
  // Id of point i in the space this one was restricted from (identity for loaded spaces).
  PointId source_id(PointId i) const noexcept { return source_ids_.empty() ? i : source_ids_[i]; }
  double scale() const noexcept { return scale_; }

  double distance(PointId i, PointId j) const noexcept {
    if (i == j) return 0.0;
    return scale_ * raw_distance(i, j);
  }

  double diameter() const noexcept { return diameter_; }
  double min_distance() const noexcept { return min_distance_; }
  // Farthest pair (lowest ids first) realizing the diameter.
  std::pair<PointId, PointId> diametral_pair() const noexcept { return diametral_; }

  const std::optional<DimensionInfo>& dimension_info() const noexcept { return dims_; }
  MetricSpace with_dimension_info(DimensionInfo dims) const;

 private:
  friend MetricSpace rescale(const MetricSpace&, double);
  friend MetricSpace restrict_to(const MetricSpace&, std::span<const PointId>);

  MetricSpace() = default;
  double raw_distance(PointId i, PointId j) const noexcept;
  void finish();

  Kind kind_ = Kind::euclidean;
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::shared_ptr<const std::vector<double>> coordinates_;
  std::shared_ptr<const std::vector<double>> table_;
  std::shared_ptr<const DistanceFn> function_;
  std::vector<PointId> source_ids_;
  double scale_ = 1.0;
  double diameter_ = 0.0;
  double min_distance_ = 0.0;
  std::pair<PointId, PointId> diametral_{0, 0};
  std::optional<DimensionInfo> dims_;
};

enum class DiameterMode { exact, approximate };

// Exact diameter is cached at construction; approximate runs a double farthest-point sweep
// and returns a lower bound.
double diameter(const MetricSpace& space, DiameterMode mode = DiameterMode::exact);

// Multiplies every distance by lambda; dimension info is carried unchanged.
MetricSpace rescale(const MetricSpace& space, double lambda);
// Subspace on the given ids (renumbered 0..k-1 in the given order). Carried dimension info:
// c (2 diam(M) / diam(A))^d and n2^2. The full id list in order returns the space unchanged.
MetricSpace restrict_to(const MetricSpace& space, std::span<const PointId> subset);

// Farthest-point traversal from point 0 with lowest-id tie-breaking. radius[k] is the
// covering radius of the first k+1 centers, so the greedy cover at eta uses the first
// min{k : radius[k-1] < eta} centers.
struct FarthestPointOrder {
  std::vector<PointId> centers;
  std::vector<double> radius;
};

// Stops once the covering radius falls below `stop_below` (all points when 0).
FarthestPointOrder farthest_point_order(const MetricSpace& space, double stop_below = 0.0);
FarthestPointOrder farthest_point_order(const MetricSpace& space, std::span<const PointId> subset, double stop_below);

enum class CoverMode { greedy, exact };

inline constexpr std::size_t kExactCoverLimit = 24;

// Number of open balls of radius eta (centers in the space) needed to cover it.
std::size_t covering_number(const MetricSpace& space, double eta, CoverMode mode = CoverMode::greedy);

struct DimensionFit {
  DimensionInfo info;
  std::vector<double> etas;
  std::vector<std::size_t> counts;
  // Levels whose count had saturated at the number of points; excluded from the slope fit.
  std::size_t resolved_levels = 0;
  std::uint64_t sampled_n2 = 0;
};

// Upper-envelope fit of greedy covering numbers at eta = diam * 2^{-k}, k = 0..levels.
DimensionFit fit_dimension(const MetricSpace& space, int levels);

// Max over ball centers and radii {diam/2, diam/8, diam/32} of the greedy half-radius
// cover size inside the ball. At most `max_centers` evenly spaced centers are used.
std::uint64_t estimate_doubling_number(const MetricSpace& space, std::size_t max_centers = 1024);

}  // namespace chainbound
