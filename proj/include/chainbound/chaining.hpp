#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chainbound/metric.hpp"

namespace chainbound {

struct Edge {
  PointId a = 0;
  PointId b = 0;  // a < b

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Nested nets V_0 ⊆ ... ⊆ V_N on the space rescaled to unit diameter, with edge sets
// E_n = {pairs of V_n at distance in (0, 3 * 2^{-n})} and the offsets theta(0..2N+2)
// that number the pair sequence. Fields are public so tests can build corrupted nets.
struct ChainingNet {
  explicit ChainingNet(MetricSpace unit_space) : space(std::move(unit_space)) {}

  MetricSpace space;           // unit diameter
  double source_diameter = 1;  // diameter before rescaling
  DimensionInfo dims;
  int depth = 0;                                 // N
  std::vector<std::vector<PointId>> levels;      // V_n, ascending ids
  std::vector<std::vector<Edge>> edges;          // E_n, ascending (a, b)
  std::vector<std::uint64_t> theta;              // size 2N + 3, theta[0] = 0
  PointId dummy = 0;                             // x*, the point of V_0
  std::vector<int> first_level;                  // n_x, or -1 for points outside V_N
  std::vector<std::vector<PointId>> nearest;     // nearest[n][x] = phi_n(x)

  bool contains(PointId x) const noexcept {
    return x < first_level.size() && first_level[x] >= 0;
  }
};

// Smallest N >= 1 with 2^{-N} below the minimum pairwise distance of the unit-diameter space.
int default_depth(const MetricSpace& space);

ChainingNet build_net(const MetricSpace& space, const DimensionInfo& dims, std::optional<int> depth = std::nullopt);

// Recomputes first_level and nearest from levels (after import or manual edits).
void refresh_nearest(ChainingNet& net);

// Pairs in V_n at distance in (0, threshold), sorted.
std::vector<Edge> neighbor_pairs(const MetricSpace& space, const std::vector<PointId>& level, double threshold);

// The theta-numbered pair sequence. Index k runs over 1..size(); block
// (theta(2n), theta(2n+1)] enumerates E_n, block (theta(2n+1), theta(2n+2)] is dummy pairs.
class PairSequence {
 public:
  explicit PairSequence(const ChainingNet& net) : net_(&net) {}

  std::uint64_t size() const noexcept { return net_->theta.back(); }
  std::pair<PointId, PointId> at(std::uint64_t k) const;
  bool is_dummy(std::uint64_t k) const;
  std::uint64_t padding(int level) const;

  // Calls visit(k, a, b) for every non-dummy pair in increasing k.
  template <typename Visit>
  void for_each_edge(Visit&& visit) const {
    for (int n = 0; n <= net_->depth; ++n) {
      std::uint64_t k = net_->theta[2 * n];
      for (const Edge& e : net_->edges[n]) visit(++k, e.a, e.b);
    }
  }

  std::vector<std::pair<PointId, PointId>> materialize(std::uint64_t limit = 1u << 24) const;

 private:
  const ChainingNet* net_;
};

PairSequence pair_sequence(const ChainingNet& net);

struct Hop {
  int level = 0;  // j: the hop is (phi_j(z), phi_{j-1}(z))
  PointId from = 0;
  PointId to = 0;
};

struct Chain {
  int root_level = 0;  // n_0
  std::pair<PointId, PointId> root;
  std::vector<Hop> hops_x;
  std::vector<Hop> hops_y;
};

// f(x) - f(y) = [f(root.first) - f(root.second)] + sum_{hops_x} [f(from) - f(to)]
//                                                - sum_{hops_y} [f(from) - f(to)].
Chain chain_decompose(const ChainingNet& net, PointId x, PointId y);

struct InvariantCheck {
  std::string name;
  bool passed = true;
  std::string witness;
};

struct InvariantReport {
  std::vector<InvariantCheck> checks;

  bool all_passed() const noexcept;
  const InvariantCheck* find(const std::string& name) const noexcept;
};

// Names: nested, cardinality, covering, edge_cardinality, separation, edge_definition,
// neighbor_packing, theta_structure, theta_bounds, dummy.
InvariantReport verify_net(const ChainingNet& net);

}  // namespace chainbound
