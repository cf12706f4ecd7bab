#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "chainbound/chaining.hpp"
#include "chainbound/errors.hpp"
#include "chainbound/random.hpp"
#include "support/fixtures.hpp"

using namespace chainbound;

namespace {

void expect_all_pass(const InvariantReport& report) {
  for (const auto& c : report.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.witness;
}

// Integer-valued field so that telescoping sums are exact in double arithmetic.
std::vector<double> integer_field(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  std::vector<double> f(n);
  for (auto& v : f) v = static_cast<double>(static_cast<std::int64_t>(rng.next_u64() % 2001) - 1000);
  return f;
}

}  // namespace

TEST(BuildNet, TwoPointSpace) {
  const auto net = build_net(fixtures::two_points(), DimensionInfo{1.0, 4.0, 81});
  EXPECT_EQ(net.levels[0], std::vector<PointId>{0});
  EXPECT_EQ(net.dummy, 0u);
  // V_0 is a single point, so E_0 is empty and the edge {0, 1} first appears in E_1.
  EXPECT_TRUE(net.edges[0].empty());
  ASSERT_EQ(net.edges[1].size(), 1u);
  EXPECT_EQ(net.edges[1][0], (Edge{0, 1}));
  const auto seq = pair_sequence(net);
  std::uint64_t first = 0;
  seq.for_each_edge([&](std::uint64_t k, PointId, PointId) { if (first == 0) first = k; });
  EXPECT_EQ(seq.at(first), (std::pair<PointId, PointId>{0, 1}));
  for (std::uint64_t k = 1; k < first; ++k) EXPECT_TRUE(seq.is_dummy(k));
  expect_all_pass(verify_net(net));
}

TEST(BuildNet, DyadicGridNetsAndInvariants) {
  const auto grid = fixtures::unit_grid(1025);
  const auto net = build_net(grid, euclidean_dimension_info(1));
  EXPECT_EQ(net.depth, 11);
  expect_all_pass(verify_net(net));
  // Farthest-point tie-breaking lands on the dyadic lattice: V_n = {k 2^{-n}}, one
  // refinement finer than the reference {k 2^{-n+1}}.
  for (int n = 1; n <= 10; ++n) {
    ASSERT_EQ(net.levels[n].size(), (std::size_t{1} << n) + 1) << "level " << n;
    for (PointId x : net.levels[n]) EXPECT_EQ(x % (1024u >> n), 0u) << "level " << n;
  }
  EXPECT_EQ(net.levels[11].size(), 1025u);
  for (int n = 1; n <= net.depth; ++n) EXPECT_GE(double(net.theta[2 * n]), std::exp2(double(n)));
}

TEST(BuildNet, UnitSquareCloudAtDepthEight) {
  const auto cloud = fixtures::uniform_cloud(500, 2, 2);
  const auto net = build_net(cloud, euclidean_dimension_info(2), 8);
  EXPECT_EQ(net.depth, 8);
  expect_all_pass(verify_net(net));
}

TEST(BuildNet, SierpinskiSample) {
  const auto net = build_net(fixtures::sierpinski(200, 3), euclidean_dimension_info(2));
  expect_all_pass(verify_net(net));
}

TEST(BuildNet, DefaultDepthPutsEveryPointInTheNet) {
  const auto cloud = fixtures::uniform_cloud(300, 2, 4);
  const auto net = build_net(cloud, euclidean_dimension_info(2));
  EXPECT_EQ(net.levels.back().size(), cloud.size());
  EXPECT_LT(std::ldexp(1.0, -net.depth), cloud.min_distance() / cloud.diameter());
  EXPECT_GE(std::ldexp(1.0, -(net.depth - 1)), cloud.min_distance() / cloud.diameter());
}

TEST(BuildNet, Deterministic) {
  const auto cloud = fixtures::uniform_cloud(300, 2, 5);
  const auto a = build_net(cloud, euclidean_dimension_info(2));
  const auto b = build_net(cloud, euclidean_dimension_info(2));
  EXPECT_EQ(a.levels, b.levels);
  EXPECT_EQ(a.edges, b.edges);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.nearest, b.nearest);
}

TEST(BuildNet, TooSmallDimensionInfoNamesLevel) {
  const auto cloud = fixtures::uniform_cloud(400, 2, 6);
  try {
    build_net(cloud, DimensionInfo{0.5, 1.0, 2});
    FAIL() << "expected DimsTooSmallError";
  } catch (const DimsTooSmallError& e) {
    EXPECT_NE(std::string(e.what()).find("level"), std::string::npos);
  }
}

TEST(PairSequence, NonDummyPairsAreExactlyTheEdges) {
  const auto net = build_net(fixtures::uniform_cloud(200, 2, 7), euclidean_dimension_info(2), 6);
  const auto seq = pair_sequence(net);
  std::set<std::pair<int, Edge>> seen;
  std::uint64_t previous = 0;
  seq.for_each_edge([&](std::uint64_t k, PointId a, PointId b) {
    EXPECT_GT(k, previous);
    previous = k;
    EXPECT_FALSE(seq.is_dummy(k));
    EXPECT_EQ(seq.at(k), (std::pair<PointId, PointId>{a, b}));
  });
  std::size_t edges = 0;
  for (int n = 0; n <= net.depth; ++n) {
    edges += net.edges[n].size();
    const double target = std::ceil(std::exp2(2.0 * (n + 1)));
    EXPECT_EQ(seq.padding(n), std::uint64_t(std::max(target - double(net.edges[n].size()), 0.0)));
    for (std::uint64_t k = net.theta[2 * n + 1] + 1; k <= net.theta[2 * n + 2]; ++k) {
      EXPECT_TRUE(seq.is_dummy(k));
      EXPECT_EQ(seq.at(k), (std::pair<PointId, PointId>{net.dummy, net.dummy}));
    }
  }
  const auto all = seq.materialize();
  EXPECT_EQ(all.size(), seq.size());
  std::size_t real = 0;
  for (std::uint64_t k = 1; k <= all.size(); ++k) {
    EXPECT_EQ(all[k - 1], seq.at(k));
    real += all[k - 1].first != all[k - 1].second;
  }
  EXPECT_EQ(real, edges);
}

TEST(PairSequence, DummyPairsGiveZeroIncrements) {
  const auto net = build_net(fixtures::unit_grid(65), euclidean_dimension_info(1));
  const auto f = integer_field(65, 8);
  const auto seq = pair_sequence(net);
  for (std::uint64_t k = 1; k <= seq.size(); ++k) {
    if (!seq.is_dummy(k)) continue;
    const auto [a, b] = seq.at(k);
    EXPECT_EQ(f[a] - f[b], 0.0);
  }
}

TEST(ChainDecompose, IdenticalEndpoints) {
  const auto net = build_net(fixtures::unit_grid(33), euclidean_dimension_info(1));
  const auto chain = chain_decompose(net, 5, 5);
  EXPECT_EQ(chain.root_level, net.depth);
  EXPECT_EQ(chain.root, (std::pair<PointId, PointId>{5, 5}));
  EXPECT_TRUE(chain.hops_x.empty());
  EXPECT_TRUE(chain.hops_y.empty());
}

TEST(ChainDecompose, RootLevelPointsHaveNoHops) {
  const auto net = build_net(fixtures::unit_grid(33), euclidean_dimension_info(1));
  const PointId root = net.levels[0][0];
  const auto chain = chain_decompose(net, root, root);
  EXPECT_TRUE(chain.hops_x.empty());
  EXPECT_TRUE(chain.hops_y.empty());
  // Two V_1 points: the root pair is themselves whenever n_0 >= their first level.
  ASSERT_GE(net.levels[1].size(), 2u);
  const PointId a = net.levels[1][0];
  const PointId b = net.levels[1][1];
  const auto c2 = chain_decompose(net, a, b);
  if (c2.root_level >= 1) {
    EXPECT_EQ(c2.root, (std::pair<PointId, PointId>{a, b}));
    EXPECT_TRUE(c2.hops_x.empty());
    EXPECT_TRUE(c2.hops_y.empty());
  }
}

TEST(ChainDecompose, HopBoundsAndTelescopingOnCloud) {
  const auto cloud = fixtures::uniform_cloud(500, 2, 9);
  const auto net = build_net(cloud, euclidean_dimension_info(2));
  const auto f = integer_field(cloud.size(), 10);
  RandomStream rng(11, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const PointId x = rng.next_u64() % cloud.size();
    const PointId y = rng.next_u64() % cloud.size();
    const auto chain = chain_decompose(net, x, y);
    const int n0 = chain.root_level;
    const double d = net.space.distance(x, y);
    if (x != y) {
      if (d < 1.0) EXPECT_LT(d, std::ldexp(1.0, -n0));
      EXPECT_GE(d, std::ldexp(1.0, -(n0 + 1)));
    }
    EXPECT_LT(net.space.distance(chain.root.first, chain.root.second), 3.0 * std::ldexp(1.0, -n0));
    double sum = f[chain.root.first] - f[chain.root.second];
    for (const auto* hops : {&chain.hops_x, &chain.hops_y}) {
      const double sign = hops == &chain.hops_x ? 1.0 : -1.0;
      for (const Hop& h : *hops) {
        const double length = net.space.distance(h.from, h.to);
        EXPECT_LT(length, 3.0 * std::ldexp(1.0, -(h.level - 1)));
        // Both hop endpoints lie in V_j and are closer than 3 * 2^{-j}: the hop is an edge of E_j.
        EXPECT_LT(length, 3.0 * std::ldexp(1.0, -h.level));
        if (length > 0.0) {
          const Edge e{std::min(h.from, h.to), std::max(h.from, h.to)};
          EXPECT_TRUE(std::binary_search(net.edges[h.level].begin(), net.edges[h.level].end(), e));
        }
        sum += sign * (f[h.from] - f[h.to]);
      }
    }
    EXPECT_EQ(sum, f[x] - f[y]);
  }
}

TEST(ChainDecompose, RejectsPointsOutsideTheNet) {
  const auto cloud = fixtures::uniform_cloud(500, 2, 12);
  const auto net = build_net(cloud, euclidean_dimension_info(2), 3);
  PointId outside = 0;
  while (net.contains(outside)) ++outside;
  EXPECT_THROW(chain_decompose(net, outside, net.dummy), MembershipError);
}

TEST(VerifyNet, DeletedPointBreaksCovering) {
  // On a regular grid every V_3 point sits exactly 2^{-3} from its neighbours, so
  // deletions can stay within the bound; the random cloud has tight points.
  const auto net = build_net(fixtures::uniform_cloud(500, 2, 2), euclidean_dimension_info(2), 8);
  bool found = false;
  for (PointId victim : net.levels[3]) {
    auto broken = net;
    auto& v3 = broken.levels[3];
    v3.erase(std::find(v3.begin(), v3.end(), victim));
    const auto report = verify_net(broken);
    const auto* covering = report.find("covering");
    ASSERT_NE(covering, nullptr);
    if (!covering->passed) {
      found = true;
      EXPECT_NE(covering->witness.find("level 3"), std::string::npos) << covering->witness;
      EXPECT_FALSE(report.all_passed());
      break;
    }
  }
  EXPECT_TRUE(found);
}

TEST(VerifyNet, WiderEdgeThresholdIsFlagged) {
  const auto cloud = fixtures::uniform_cloud(300, 2, 13);
  auto net = build_net(cloud, euclidean_dimension_info(2));
  for (int n = 0; n <= net.depth; ++n) {
    net.edges[n] = neighbor_pairs(net.space, net.levels[n], 4.0 * std::ldexp(1.0, -n));
  }
  const auto report = verify_net(net);
  EXPECT_FALSE(report.all_passed());
  EXPECT_FALSE(report.find("edge_definition")->passed);
  EXPECT_FALSE(report.find("theta_structure")->passed);
}
