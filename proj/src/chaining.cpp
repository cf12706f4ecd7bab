#include "chainbound/chaining.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "chainbound/errors.hpp"

namespace chainbound {

namespace {

constexpr double kThetaLimit = 4.0e18;

double level_radius(int n) { return std::ldexp(1.0, -n); }

double cardinality_cap(const DimensionInfo& dims, int n) {
  return dims.c * std::pow(3.0, dims.d) * std::exp2(dims.d * n);
}

double edge_cap(const DimensionInfo& dims, int n) {
  return cardinality_cap(dims, n) * std::pow(static_cast<double>(dims.n2), 4.0);
}

double padding_target(const DimensionInfo& dims, int n) {
  const double target = std::ceil(std::exp2(dims.d * (n + 1)));
  if (target > kThetaLimit) throw SizeError("pair sequence length overflows 64 bits; reduce the net depth");
  return target;
}

std::size_t covered_prefix(const FarthestPointOrder& order, double eta) {
  for (std::size_t k = 0; k < order.radius.size(); ++k) {
    if (order.radius[k] < eta) return k + 1;
  }
  return order.centers.size();
}

bool coordinate_prunable(const MetricSpace& space) {
  return space.has_coordinates() &&
         (space.kind() == MetricSpace::Kind::euclidean || space.kind() == MetricSpace::Kind::chebyshev);
}

// Adds h to the net state: every point's distance to the net and its nearest net point
// (ties to the lowest id).
void absorb(const MetricSpace& space, PointId h, std::vector<double>& gap, std::vector<PointId>& near) {
  for (PointId x = 0; x < space.size(); ++x) {
    const double d = space.distance(h, x);
    if (d < gap[x] || (d == gap[x] && h < near[x])) {
      gap[x] = d;
      near[x] = h;
    }
  }
}

}  // namespace

int default_depth(const MetricSpace& space) {
  const double smallest = space.min_distance() / space.diameter();
  int n = 1;
  while (level_radius(n) >= smallest) {
    ++n;
    if (n > 60) throw SizeError("minimum distance too small for a default net depth");
  }
  return n;
}

std::vector<Edge> neighbor_pairs(const MetricSpace& space, const std::vector<PointId>& level, double threshold) {
  std::vector<Edge> out;
  if (coordinate_prunable(space)) {
    std::vector<PointId> by_x(level);
    std::stable_sort(by_x.begin(), by_x.end(),
                     [&](PointId a, PointId b) { return space.coordinates(a)[0] < space.coordinates(b)[0]; });
    const double reach = threshold / space.scale();
    for (std::size_t i = 0; i < by_x.size(); ++i) {
      const double xi = space.coordinates(by_x[i])[0];
      for (std::size_t j = i + 1; j < by_x.size(); ++j) {
        if (space.coordinates(by_x[j])[0] - xi >= reach) break;
        const double d = space.distance(by_x[i], by_x[j]);
        if (d > 0.0 && d < threshold) out.push_back({std::min(by_x[i], by_x[j]), std::max(by_x[i], by_x[j])});
      }
    }
  } else {
    for (std::size_t i = 0; i < level.size(); ++i)
      for (std::size_t j = i + 1; j < level.size(); ++j) {
        const double d = space.distance(level[i], level[j]);
        if (d > 0.0 && d < threshold) out.push_back({std::min(level[i], level[j]), std::max(level[i], level[j])});
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ChainingNet build_net(const MetricSpace& input, const DimensionInfo& dims, std::optional<int> depth) {
  dims.validate();
  ChainingNet net{rescale(input, 1.0 / input.diameter())};
  net.source_diameter = input.diameter();
  net.dims = dims;
  net.depth = depth.value_or(default_depth(net.space));
  if (net.depth < 1) throw ParameterError("net depth must be >= 1");
  if (net.depth > 60) throw SizeError("net depth above 60 levels");

  const MetricSpace& m = net.space;
  const std::size_t n = m.size();
  const auto order = farthest_point_order(m, level_radius(net.depth) / 3.0);

  std::vector<double> gap(n, std::numeric_limits<double>::infinity());
  std::vector<PointId> near(n, 0);
  net.dummy = 0;
  net.first_level.assign(n, -1);
  net.first_level[0] = 0;
  absorb(m, 0, gap, near);
  net.levels.push_back({0});
  net.nearest.push_back(near);

  for (int level = 1; level <= net.depth; ++level) {
    const double r = level_radius(level);
    const std::size_t count = covered_prefix(order, r / 3.0);
    if (static_cast<double>(count) > cardinality_cap(dims, level)) {
      std::ostringstream msg;
      msg << "level " << level << ": greedy cover of radius " << r / 3.0 << " needs " << count
          << " balls, above c*3^d*2^(dn) = " << cardinality_cap(dims, level);
      throw DimsTooSmallError(msg.str());
    }
    std::vector<PointId> cover(order.centers.begin(), order.centers.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(cover.begin(), cover.end());

    std::vector<PointId> candidates;
    for (PointId x : cover)
      if (gap[x] >= 2.0 * r / 3.0) candidates.push_back(x);

    std::vector<PointId> added;
    for (PointId x : candidates) {
      const bool separated = std::all_of(added.begin(), added.end(),
                                         [&](PointId h) { return m.distance(x, h) >= 2.0 * r / 3.0; });
      if (separated) added.push_back(x);
    }
    for (PointId h : added) absorb(m, h, gap, near);

    // The greedy maximal subset covers the residual; this loop only runs if it does not.
    for (PointId z = 0; z < n; ++z) {
      if (gap[z] < r || candidates.empty()) continue;
      const PointId patch = *std::min_element(candidates.begin(), candidates.end(), [&](PointId a, PointId b) {
        return std::make_pair(m.distance(z, a), a) < std::make_pair(m.distance(z, b), b);
      });
      if (net.first_level[patch] >= 0 || std::find(added.begin(), added.end(), patch) != added.end()) continue;
      added.push_back(patch);
      absorb(m, patch, gap, near);
    }

    std::sort(added.begin(), added.end());
    for (PointId h : added) net.first_level[h] = level;
    std::vector<PointId> merged;
    merged.reserve(net.levels.back().size() + added.size());
    std::merge(net.levels.back().begin(), net.levels.back().end(), added.begin(), added.end(),
               std::back_inserter(merged));
    net.levels.push_back(std::move(merged));
    net.nearest.push_back(near);
  }

  net.theta.assign(2 * net.depth + 3, 0);
  for (int level = 0; level <= net.depth; ++level) {
    net.edges.push_back(neighbor_pairs(m, net.levels[level], 3.0 * level_radius(level)));
    const double card = static_cast<double>(net.edges.back().size());
    const double pad = std::max(padding_target(dims, level) - card, 0.0);
    net.theta[2 * level + 1] = net.theta[2 * level] + net.edges.back().size();
    net.theta[2 * level + 2] = net.theta[2 * level + 1] + static_cast<std::uint64_t>(pad);
    if (static_cast<double>(net.theta[2 * level + 2]) > kThetaLimit) throw SizeError("pair sequence length overflows");
  }
  return net;
}

void refresh_nearest(ChainingNet& net) {
  const MetricSpace& m = net.space;
  net.first_level.assign(m.size(), -1);
  net.nearest.clear();
  for (int level = 0; level < static_cast<int>(net.levels.size()); ++level) {
    for (PointId x : net.levels[level])
      if (net.first_level[x] < 0) net.first_level[x] = level;
    std::vector<PointId> near(m.size(), 0);
    for (PointId x = 0; x < m.size(); ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (PointId v : net.levels[level]) {
        const double d = m.distance(x, v);
        if (d < best || (d == best && v < near[x])) {
          best = d;
          near[x] = v;
        }
      }
    }
    net.nearest.push_back(std::move(near));
  }
}

std::pair<PointId, PointId> PairSequence::at(std::uint64_t k) const {
  if (k < 1 || k > size()) throw ParameterError("pair index outside the sequence");
  const auto& theta = net_->theta;
  const auto it = std::lower_bound(theta.begin(), theta.end(), k);
  const auto block = static_cast<std::size_t>(it - theta.begin());  // theta[block-1] < k <= theta[block]
  if (block % 2 == 1) {
    const auto level = (block - 1) / 2;
    const Edge& e = net_->edges[level][k - theta[block - 1] - 1];
    return {e.a, e.b};
  }
  return {net_->dummy, net_->dummy};
}

bool PairSequence::is_dummy(std::uint64_t k) const {
  const auto& theta = net_->theta;
  const auto it = std::lower_bound(theta.begin(), theta.end(), k);
  return (it - theta.begin()) % 2 == 0;
}

std::uint64_t PairSequence::padding(int level) const {
  return net_->theta[2 * level + 2] - net_->theta[2 * level + 1];
}

std::vector<std::pair<PointId, PointId>> PairSequence::materialize(std::uint64_t limit) const {
  if (size() > limit) throw SizeError("pair sequence too long to materialize");
  std::vector<std::pair<PointId, PointId>> out;
  out.reserve(size());
  for (int n = 0; n <= net_->depth; ++n) {
    for (const Edge& e : net_->edges[n]) out.emplace_back(e.a, e.b);
    out.insert(out.end(), padding(n), {net_->dummy, net_->dummy});
  }
  return out;
}

PairSequence pair_sequence(const ChainingNet& net) { return PairSequence(net); }

Chain chain_decompose(const ChainingNet& net, PointId x, PointId y) {
  if (!net.contains(x) || !net.contains(y)) throw MembershipError("chain endpoints must be net points");
  Chain chain;
  if (x == y) {
    chain.root_level = net.depth;
  } else {
    const double d = net.space.distance(x, y);
    int n0 = 0;
    for (int k = 0; k <= net.depth; ++k)
      if (d < level_radius(k)) n0 = k;
    chain.root_level = n0;
  }
  const int n0 = chain.root_level;
  chain.root = {net.nearest[n0][x], net.nearest[n0][y]};
  const auto hops = [&](PointId z, std::vector<Hop>& out) {
    for (int j = n0 + 1; j <= net.first_level[z]; ++j) out.push_back({j, net.nearest[j][z], net.nearest[j - 1][z]});
  };
  hops(x, chain.hops_x);
  hops(y, chain.hops_y);
  return chain;
}

bool InvariantReport::all_passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const InvariantCheck& c) { return c.passed; });
}

const InvariantCheck* InvariantReport::find(const std::string& name) const noexcept {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

InvariantReport verify_net(const ChainingNet& net) {
  const MetricSpace& m = net.space;
  const DimensionInfo& dims = net.dims;
  const int depth = net.depth;
  InvariantReport report;
  auto check = [&](const std::string& name) -> InvariantCheck& {
    report.checks.push_back({name, true, {}});
    return report.checks.back();
  };
  auto fail = [](InvariantCheck& c, const std::string& witness) {
    if (c.passed) {
      c.passed = false;
      c.witness = witness;
    }
  };
  const bool shaped = static_cast<int>(net.levels.size()) == depth + 1 &&
                      static_cast<int>(net.edges.size()) == depth + 1 &&
                      static_cast<int>(net.theta.size()) == 2 * depth + 3;

  auto& shape = check("shape");
  if (!shaped) {
    fail(shape, "levels, edges and theta sizes do not match the depth");
    return report;
  }

  auto& nested = check("nested");
  for (int n = 0; n < depth; ++n) {
    const auto& a = net.levels[n];
    const auto& b = net.levels[n + 1];
    if (!std::is_sorted(a.begin(), a.end()) || !std::is_sorted(b.begin(), b.end())) {
      fail(nested, "level " + std::to_string(n) + " is not sorted");
      continue;
    }
    std::vector<PointId> missing;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(missing));
    if (!missing.empty()) {
      std::ostringstream w;
      w << "point " << missing.front() << " in V_" << n << " but not in V_" << n + 1;
      fail(nested, w.str());
    }
  }

  auto& card = check("cardinality");
  for (int n = 0; n <= depth; ++n) {
    if (static_cast<double>(net.levels[n].size()) > cardinality_cap(dims, n)) {
      std::ostringstream w;
      w << "card(V_" << n << ") = " << net.levels[n].size() << " > " << cardinality_cap(dims, n);
      fail(card, w.str());
    }
  }

  auto& covering = check("covering");
  for (int n = 0; n <= depth && covering.passed; ++n) {
    for (PointId x = 0; x < m.size(); ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (PointId v : net.levels[n]) best = std::min(best, m.distance(x, v));
      if (best > level_radius(n)) {
        std::ostringstream w;
        w << "level " << n << ": point " << x << " at distance " << best << " > 2^-" << n << " from V_" << n;
        fail(covering, w.str());
        break;
      }
    }
  }

  auto& edge_card = check("edge_cardinality");
  for (int n = 0; n <= depth; ++n) {
    if (static_cast<double>(net.edges[n].size()) > edge_cap(dims, n)) {
      std::ostringstream w;
      w << "card(E_" << n << ") = " << net.edges[n].size() << " > " << edge_cap(dims, n);
      fail(edge_card, w.str());
    }
  }

  auto& separation = check("separation");
  auto& definition = check("edge_definition");
  auto& packing = check("neighbor_packing");
  const double packing_cap = std::pow(static_cast<double>(dims.n2), 4.0);
  for (int n = 0; n <= depth; ++n) {
    const auto& level = net.levels[n];
    const double r = level_radius(n);
    for (std::size_t i = 0; i < level.size() && separation.passed; ++i)
      for (std::size_t j = i + 1; j < level.size(); ++j) {
        const double d = m.distance(level[i], level[j]);
        if (d < 2.0 * r / 3.0) {
          std::ostringstream w;
          w << "V_" << n << ": points " << level[i] << ", " << level[j] << " at distance " << d << " < (2/3)2^-" << n;
          fail(separation, w.str());
          break;
        }
      }
    const auto expected = neighbor_pairs(m, level, 3.0 * r);
    if (expected != net.edges[n]) {
      std::vector<Edge> extra;
      std::vector<Edge> absent;
      auto actual = net.edges[n];
      std::sort(actual.begin(), actual.end());
      std::set_difference(actual.begin(), actual.end(), expected.begin(), expected.end(), std::back_inserter(extra));
      std::set_difference(expected.begin(), expected.end(), actual.begin(), actual.end(), std::back_inserter(absent));
      std::ostringstream w;
      w << "E_" << n << ": " << extra.size() << " pairs outside (0, 3*2^-" << n << "), " << absent.size()
        << " missing";
      if (!extra.empty()) w << "; e.g. (" << extra.front().a << ", " << extra.front().b << ")";
      fail(definition, w.str());
    }
    std::vector<std::size_t> degree(m.size(), 0);
    for (const Edge& e : expected) {
      ++degree[e.a];
      ++degree[e.b];
    }
    const auto worst = std::max_element(degree.begin(), degree.end());
    if (static_cast<double>(*worst) > packing_cap) {
      std::ostringstream w;
      w << "V_" << n << ": point " << (worst - degree.begin()) << " has " << *worst << " neighbors > n2^4";
      fail(packing, w.str());
    }
  }

  auto& theta_structure = check("theta_structure");
  auto& theta_bounds = check("theta_bounds");
  if (net.theta[0] != 0) fail(theta_structure, "theta(0) != 0");
  for (int n = 0; n <= depth; ++n) {
    const auto card_e = static_cast<std::uint64_t>(net.edges[n].size());
    const auto first = net.theta[2 * n + 1] - net.theta[2 * n];
    const double target = padding_target(dims, n);
    const auto pad = static_cast<std::uint64_t>(std::max(target - static_cast<double>(card_e), 0.0));
    if (net.theta[2 * n + 1] < net.theta[2 * n] || first != card_e) {
      fail(theta_structure, "theta(" + std::to_string(2 * n + 1) + ") - theta(" + std::to_string(2 * n) +
                                ") != card(E_" + std::to_string(n) + ")");
    } else if (net.theta[2 * n + 2] < net.theta[2 * n + 1] || net.theta[2 * n + 2] - net.theta[2 * n + 1] != pad) {
      fail(theta_structure, "padding after E_" + std::to_string(n) + " is not max(2^(d(n+1)) - card(E_n), 0)");
    }
    if (n >= 1) {
      const double value = static_cast<double>(net.theta[2 * n]);
      const double lower = std::exp2(dims.d * n);
      const double upper = dims.c * std::pow(3.0, dims.d + 1.0) / dims.d * std::pow(static_cast<double>(dims.n2), 4.0) *
                           std::exp2(dims.d * n);
      if (value < lower || value > upper) {
        std::ostringstream w;
        w << "theta(" << 2 * n << ") = " << net.theta[2 * n] << " outside [" << lower << ", " << upper << "]";
        fail(theta_bounds, w.str());
      }
    }
  }

  auto& dummy = check("dummy");
  if (!std::binary_search(net.levels[0].begin(), net.levels[0].end(), net.dummy))
    fail(dummy, "dummy point " + std::to_string(net.dummy) + " is not in V_0");
  return report;
}

}  // namespace chainbound
