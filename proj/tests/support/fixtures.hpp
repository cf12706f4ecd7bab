#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "chainbound/metric.hpp"
#include "chainbound/random.hpp"

namespace chainbound::fixtures {

inline MetricSpace two_points(double a = 0.0, double b = 1.0) { return MetricSpace::euclidean({a, b}, 1); }

// {k / (points - 1)} on [0, 1].
inline MetricSpace unit_grid(std::size_t points) {
  std::vector<double> x(points);
  for (std::size_t k = 0; k < points; ++k) x[k] = double(k) / double(points - 1);
  return MetricSpace::euclidean(std::move(x), 1);
}

inline MetricSpace square_grid(std::size_t side) {
  std::vector<double> xy;
  for (std::size_t i = 0; i < side; ++i)
    for (std::size_t j = 0; j < side; ++j) {
      xy.push_back(double(i) / double(side - 1));
      xy.push_back(double(j) / double(side - 1));
    }
  return MetricSpace::euclidean(std::move(xy), 2);
}

inline MetricSpace uniform_cloud(std::size_t points, std::size_t dim, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  std::vector<double> xy(points * dim);
  for (auto& v : xy) v = rng.uniform();
  return MetricSpace::euclidean(std::move(xy), dim);
}

// Chaos-game sample of the Sierpinski triangle with vertices (0,0), (1,0), (1/2, sqrt(3)/2).
inline MetricSpace sierpinski(std::size_t points, std::uint64_t seed) {
  const double vx[3] = {0.0, 1.0, 0.5};
  const double vy[3] = {0.0, 0.0, std::sqrt(3.0) / 2.0};
  RandomStream rng(seed, 0);
  double x = 0.3;
  double y = 0.2;
  std::vector<double> xy;
  for (std::size_t step = 0; xy.size() < 2 * points; ++step) {
    const auto v = rng.next_u64() % 3;
    x = 0.5 * (x + vx[v]);
    y = 0.5 * (y + vy[v]);
    if (step >= 32) {
      xy.push_back(x);
      xy.push_back(y);
    }
  }
  return MetricSpace::euclidean(std::move(xy), 2);
}

}  // namespace chainbound::fixtures
