#include "chainbound/metric.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "chainbound/errors.hpp"
#include "chainbound/random.hpp"

namespace chainbound {

void DimensionInfo::validate() const {
  if (!(d > 0.0) || !std::isfinite(d)) throw ParameterError("dimension d must be positive");
  if (!(c >= 1.0) || !std::isfinite(c)) throw ParameterError("covering constant c must be >= 1");
  if (n2 < 1) throw ParameterError("doubling number n2 must be >= 1");
}

std::string DimensionInfo::label() const {
  switch (source) {
    case Source::fitted:
      return "greedy-certified";
    case Source::euclidean_closed_form:
      return "euclidean-closed-form";
    case Source::carried:
      return "carried";
    case Source::user:
      return "user";
  }
  return "user";
}

DimensionInfo euclidean_dimension_info(int dim) {
  if (dim < 1) throw ParameterError("euclidean dimension must be >= 1");
  const double d = dim;
  const double n2 = std::pow(81.0 * d * d, d);
  if (n2 > 1.8e19) throw SizeError("doubling number overflows 64 bits");
  return {d, std::pow(4.0 * d, d), static_cast<std::uint64_t>(std::llround(n2)),
          DimensionInfo::Source::euclidean_closed_form};
}

namespace {

void require_points(std::size_t n) {
  if (n < 2) throw NontrivialSpaceError("a metric space needs at least two points");
}

void require_finite(const std::vector<double>& values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw ParameterError(std::string(what) + " contains a non-finite value");
  }
}

MetricSpace::Kind checked_coordinates(const std::vector<double>& coordinates, std::size_t dim, MetricSpace::Kind kind) {
  if (dim == 0 || coordinates.size() % dim != 0) throw ShapeError("coordinate array is not a multiple of dim");
  require_finite(coordinates, "coordinate array");
  return kind;
}

}  // namespace

MetricSpace MetricSpace::euclidean(std::vector<double> coordinates, std::size_t dim) {
  MetricSpace m;
  m.kind_ = checked_coordinates(coordinates, dim, Kind::euclidean);
  m.dim_ = dim;
  m.n_ = coordinates.size() / dim;
  m.coordinates_ = std::make_shared<const std::vector<double>>(std::move(coordinates));
  m.finish();
  return m;
}

MetricSpace MetricSpace::chebyshev(std::vector<double> coordinates, std::size_t dim) {
  MetricSpace m;
  m.kind_ = checked_coordinates(coordinates, dim, Kind::chebyshev);
  m.dim_ = dim;
  m.n_ = coordinates.size() / dim;
  m.coordinates_ = std::make_shared<const std::vector<double>>(std::move(coordinates));
  m.finish();
  return m;
}

MetricSpace MetricSpace::explicit_table(std::vector<double> table, std::size_t n) {
  if (table.size() != n * n) throw ShapeError("distance table must be n x n");
  require_finite(table, "distance table");
  require_points(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (table[i * n + i] != 0.0) throw ParameterError("distance table has a nonzero diagonal entry");
    for (std::size_t j = i + 1; j < n; ++j) {
      if (table[i * n + j] != table[j * n + i]) throw ParameterError("distance table is not symmetric");
      if (!(table[i * n + j] > 0.0)) throw ParameterError("distance table has a non-positive off-diagonal entry");
    }
  }
  const auto at = [&](std::size_t i, std::size_t j) { return table[i * n + j]; };
  const auto check = [&](std::size_t i, std::size_t j, std::size_t k) {
    const double slack = 1e-12 * (at(i, k) + at(k, j));
    if (at(i, j) > at(i, k) + at(k, j) + slack) {
      std::ostringstream msg;
      msg << "triangle inequality fails for (" << i << ", " << j << ", " << k << ")";
      throw ParameterError(msg.str());
    }
  };
  constexpr std::size_t kTriples = 100000;
  if (n * n * n <= kTriples) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) check(i, j, k);
  } else {
    RandomStream rng(0x7A1E, 0);
    for (std::size_t t = 0; t < kTriples; ++t) {
      check(rng.next_u64() % n, rng.next_u64() % n, rng.next_u64() % n);
    }
  }
  MetricSpace m;
  m.kind_ = Kind::explicit_table;
  m.n_ = n;
  m.table_ = std::make_shared<const std::vector<double>>(std::move(table));
  m.finish();
  return m;
}

MetricSpace MetricSpace::from_function(Kind kind, std::vector<double> coordinates, std::size_t dim,
                                       DistanceFn distance) {
  if (!distance) throw ParameterError("distance function is empty");
  MetricSpace m;
  m.kind_ = checked_coordinates(coordinates, dim, kind);
  m.dim_ = dim;
  m.n_ = coordinates.size() / dim;
  m.coordinates_ = std::make_shared<const std::vector<double>>(std::move(coordinates));
  m.function_ = std::make_shared<const DistanceFn>(std::move(distance));
  m.finish();
  return m;
}

std::span<const double> MetricSpace::coordinates(PointId i) const {
  if (!coordinates_) throw ParameterError("metric space has no coordinate payload");
  return {coordinates_->data() + static_cast<std::size_t>(i) * dim_, dim_};
}

double MetricSpace::raw_distance(PointId i, PointId j) const noexcept {
  if (function_) return (*function_)(coordinates(i), coordinates(j));
  if (table_) return (*table_)[static_cast<std::size_t>(i) * n_ + j];
  const double* a = coordinates_->data() + static_cast<std::size_t>(i) * dim_;
  const double* b = coordinates_->data() + static_cast<std::size_t>(j) * dim_;
  if (kind_ == Kind::chebyshev) {
    double m = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) m = std::max(m, std::fabs(a[k] - b[k]));
    return m;
  }
  double s = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

void MetricSpace::finish() {
  require_points(n_);
  double largest = 0.0;
  double smallest = std::numeric_limits<double>::infinity();
  std::pair<PointId, PointId> far{0, 1};
  for (PointId i = 0; i < n_; ++i) {
    for (PointId j = i + 1; j < n_; ++j) {
      const double d = distance(i, j);
      if (d > largest) {
        largest = d;
        far = {i, j};
      }
      smallest = std::min(smallest, d);
    }
  }
  if (!(smallest > 0.0)) throw ParameterError("metric space contains coincident points");
  diameter_ = largest;
  min_distance_ = smallest;
  diametral_ = far;
}

MetricSpace MetricSpace::with_dimension_info(DimensionInfo dims) const {
  dims.validate();
  MetricSpace m = *this;
  m.dims_ = dims;
  return m;
}

double diameter(const MetricSpace& space, DiameterMode mode) {
  if (mode == DiameterMode::exact) return space.diameter();
  PointId far = 0;
  double best = 0.0;
  for (int sweep = 0; sweep < 2; ++sweep) {
    const PointId from = far;
    for (PointId j = 0; j < space.size(); ++j) {
      const double d = space.distance(from, j);
      if (d > best) {
        best = d;
        far = j;
      }
    }
  }
  return best;
}

MetricSpace rescale(const MetricSpace& space, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("rescale factor must be positive");
  MetricSpace m = space;
  m.scale_ *= lambda;
  m.diameter_ *= lambda;
  m.min_distance_ *= lambda;
  return m;
}

MetricSpace restrict_to(const MetricSpace& space, std::span<const PointId> subset) {
  require_points(subset.size());
  bool identity = subset.size() == space.size();
  for (std::size_t i = 0; identity && i < subset.size(); ++i) identity = subset[i] == i;
  if (identity) return space;

  for (PointId id : subset) {
    if (id >= space.size()) throw MembershipError("restrict: point id out of range");
  }
  MetricSpace m;
  m.kind_ = space.kind_;
  m.n_ = subset.size();
  m.dim_ = space.dim_;
  m.scale_ = space.scale_;
  m.function_ = space.function_;
  if (space.coordinates_) {
    std::vector<double> coords;
    coords.reserve(subset.size() * space.dim_);
    for (PointId id : subset) {
      auto c = space.coordinates(id);
      coords.insert(coords.end(), c.begin(), c.end());
    }
    m.coordinates_ = std::make_shared<const std::vector<double>>(std::move(coords));
  }
  if (space.table_) {
    std::vector<double> table(subset.size() * subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i)
      for (std::size_t j = 0; j < subset.size(); ++j)
        table[i * subset.size() + j] = (*space.table_)[static_cast<std::size_t>(subset[i]) * space.n_ + subset[j]];
    m.table_ = std::make_shared<const std::vector<double>>(std::move(table));
  }
  m.source_ids_.reserve(subset.size());
  for (PointId id : subset) m.source_ids_.push_back(space.source_id(id));
  m.finish();
  if (space.dims_) {
    const auto& parent = *space.dims_;
    DimensionInfo carried;
    carried.d = parent.d;
    carried.c = parent.c * std::pow(2.0 * space.diameter() / m.diameter(), parent.d);
    const double n2 = static_cast<double>(parent.n2) * static_cast<double>(parent.n2);
    if (n2 > 1.8e19) throw SizeError("carried doubling number overflows 64 bits");
    carried.n2 = parent.n2 * parent.n2;
    carried.source = DimensionInfo::Source::carried;
    m.dims_ = carried;
  }
  return m;
}

FarthestPointOrder farthest_point_order(const MetricSpace& space, std::span<const PointId> subset,
                                        double stop_below) {
  FarthestPointOrder order;
  if (subset.empty()) return order;
  std::vector<double> gap(subset.size(), std::numeric_limits<double>::infinity());
  std::size_t next = 0;
  for (;;) {
    const PointId center = subset[next];
    order.centers.push_back(center);
    double worst = 0.0;
    std::size_t worst_at = 0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
      gap[i] = std::min(gap[i], space.distance(center, subset[i]));
      if (gap[i] > worst) {
        worst = gap[i];
        worst_at = i;
      }
    }
    order.radius.push_back(worst);
    if (worst == 0.0 || worst < stop_below) break;
    next = worst_at;
  }
  return order;
}

FarthestPointOrder farthest_point_order(const MetricSpace& space, double stop_below) {
  std::vector<PointId> all(space.size());
  for (PointId i = 0; i < all.size(); ++i) all[i] = i;
  return farthest_point_order(space, all, stop_below);
}

namespace {

std::size_t greedy_count(const FarthestPointOrder& order, double eta) {
  for (std::size_t k = 0; k < order.radius.size(); ++k) {
    if (order.radius[k] < eta) return k + 1;
  }
  return order.centers.size();
}

bool exact_cover_search(const std::vector<std::uint32_t>& balls, std::uint32_t covered, std::uint32_t full,
                        std::size_t budget) {
  if (covered == full) return true;
  if (budget == 0) return false;
  const int first = std::countr_one(covered);
  for (std::size_t c = 0; c < balls.size(); ++c) {
    if ((balls[c] >> first) & 1u) {
      if (exact_cover_search(balls, covered | balls[c], full, budget - 1)) return true;
    }
  }
  return false;
}

std::size_t exact_covering_number(const MetricSpace& space, double eta) {
  const std::size_t n = space.size();
  if (n > kExactCoverLimit) throw SizeError("exact covering number is limited to 24 points");
  std::vector<std::uint32_t> balls(n, 0);
  for (PointId c = 0; c < n; ++c)
    for (PointId x = 0; x < n; ++x)
      if (space.distance(c, x) < eta) balls[c] |= 1u << x;
  const std::uint32_t full = n == 32 ? ~0u : ((1u << n) - 1u);
  for (std::size_t k = 1; k <= n; ++k) {
    if (exact_cover_search(balls, 0u, full, k)) return k;
  }
  return n;
}

}  // namespace

std::size_t covering_number(const MetricSpace& space, double eta, CoverMode mode) {
  if (!(eta > 0.0)) throw ParameterError("covering radius must be positive");
  if (mode == CoverMode::exact) return exact_covering_number(space, eta);
  return greedy_count(farthest_point_order(space, eta), eta);
}

std::uint64_t estimate_doubling_number(const MetricSpace& space, std::size_t max_centers) {
  const std::size_t n = space.size();
  const std::size_t stride = std::max<std::size_t>(1, (n + max_centers - 1) / std::max<std::size_t>(1, max_centers));
  const double delta = space.diameter();
  std::uint64_t best = 1;
  std::vector<PointId> ball;
  for (PointId x = 0; x < n; x += stride) {
    for (double r : {delta / 2.0, delta / 8.0, delta / 32.0}) {
      ball.clear();
      for (PointId y = 0; y < n; ++y)
        if (space.distance(x, y) < r) ball.push_back(y);
      const auto order = farthest_point_order(space, ball, r / 2.0);
      best = std::max<std::uint64_t>(best, greedy_count(order, r / 2.0));
    }
  }
  return best;
}

DimensionFit fit_dimension(const MetricSpace& space, int levels) {
  if (levels < 4) throw ParameterError("dimension fit needs levels >= 4");
  const double delta = space.diameter();
  const auto order = farthest_point_order(space, std::ldexp(delta, -levels));
  DimensionFit fit;
  for (int k = 0; k <= levels; ++k) {
    const double eta = std::ldexp(delta, -k);
    fit.etas.push_back(eta);
    fit.counts.push_back(greedy_count(order, eta));
  }
  if (std::all_of(fit.counts.begin(), fit.counts.end(), [](std::size_t c) { return c == 1; })) {
    throw FitError("every sampled level is covered by a single ball");
  }
  double slope = 0.0;
  for (std::size_t k = 0; k < fit.counts.size(); ++k) {
    if (fit.counts[k] < space.size()) fit.resolved_levels = k + 1;
  }
  for (std::size_t k = 1; k < fit.resolved_levels; ++k) {
    slope = std::max(slope, std::log2(static_cast<double>(fit.counts[k]) / static_cast<double>(fit.counts[k - 1])));
  }
  DimensionInfo info;
  info.source = DimensionInfo::Source::fitted;
  info.d = slope > 0.0 ? slope : 1.0;
  info.c = 1.0;
  for (std::size_t k = 0; k < fit.counts.size(); ++k) {
    info.c = std::max(info.c, static_cast<double>(fit.counts[k]) * std::exp2(-info.d * static_cast<double>(k)));
  }
  fit.sampled_n2 = estimate_doubling_number(space);
  info.n2 = fit.sampled_n2;
  fit.info = info;
  return fit;
}

}  // namespace chainbound
