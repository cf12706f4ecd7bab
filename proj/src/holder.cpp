#include "chainbound/holder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chainbound/errors.hpp"

namespace chainbound {

namespace {

double power_weight(double r, double alpha) { return alpha == 1.0 ? r : std::pow(r, alpha); }

double relative_distance(const MetricSpace& space, PointId i, PointId j) {
  return std::min(1.0, space.distance(i, j) / space.diameter());
}

void require_nontrivial(const SampledField& f) {
  if (f.size() < 2) throw NontrivialSpaceError("seminorm needs at least two points");
}

struct RowBest {
  double value = 0.0;
  PointId partner = 0;
  bool found = false;
};

SeminormResult reduce_rows(const std::vector<RowBest>& rows) {
  SeminormResult out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].found && (!out.witness || rows[i].value > out.value)) {
      out.value = rows[i].value;
      out.witness = std::pair<PointId, PointId>{static_cast<PointId>(i), rows[i].partner};
    }
  }
  return out;
}

}  // namespace

SampledField::SampledField(MetricSpace space, std::size_t value_dim, std::vector<double> values)
    : space_(std::move(space)), value_dim_(value_dim), values_(std::move(values)) {
  if (value_dim_ == 0) throw ShapeError("field value dimension must be positive");
  if (values_.size() != space_.size() * value_dim_) {
    std::ostringstream msg;
    msg << "field has " << values_.size() << " entries, expected " << space_.size() << " x " << value_dim_;
    throw ShapeError(msg.str());
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      std::ostringstream msg;
      msg << "field value at point " << k / value_dim_ << " is not finite";
      throw ParameterError(msg.str());
    }
  }
}

SampledField SampledField::scalar(MetricSpace space, std::vector<double> values) {
  return SampledField(std::move(space), 1, std::move(values));
}

SampledField SampledField::vector(MetricSpace space, std::size_t value_dim, std::vector<double> values) {
  return SampledField(std::move(space), value_dim, std::move(values));
}

double SampledField::difference(PointId i, PointId j) const noexcept {
  if (value_dim_ == 1) return std::abs(values_[i] - values_[j]);
  const double* a = values_.data() + i * value_dim_;
  const double* b = values_.data() + j * value_dim_;
  double sum = 0.0;
  for (std::size_t k = 0; k < value_dim_; ++k) sum += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(sum);
}

SeminormResult seminorm_exact(const SampledField& f, const Modulus& w, Workers workers) {
  require_nontrivial(f);
  const MetricSpace& space = f.space();
  const std::size_t n = f.size();
  std::vector<RowBest> rows(n);
  parallel_for(n, workers, [&](std::size_t i) {
    RowBest best;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto a = static_cast<PointId>(i);
      const auto b = static_cast<PointId>(j);
      const double ratio = f.difference(a, b) / w(relative_distance(space, a, b));
      if (!best.found || ratio > best.value) best = {ratio, b, true};
    }
    rows[i] = best;
  });
  auto out = reduce_rows(rows);
  out.weight = w.describe();
  return out;
}

SeminormResult holder_seminorm_alpha(const SampledField& f, double alpha, Workers workers) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("holder exponent must lie in (0, 1]");
  auto out = seminorm_exact(f, Modulus::power(alpha), workers);
  out.value /= power_weight(f.space().diameter(), alpha);
  return out;
}

SeminormResult seminorm_embedded(const SampledField& f, const ChainingNet& net, const Modulus& w,
                                 std::optional<double> d) {
  if (f.size() != net.space.size()) {
    std::ostringstream msg;
    msg << "field covers " << f.size() << " points but the net space has " << net.space.size();
    throw MembershipError(msg.str());
  }
  const double dim = d.value_or(net.dims.d);
  if (!(dim > 0.0)) throw ParameterError("embedding dimension must be positive");
  SeminormResult out;
  out.weight = w.describe();
  pair_sequence(net).for_each_edge([&](std::uint64_t k, PointId a, PointId b) {
    const double ratio = f.difference(a, b) / w(std::pow(static_cast<double>(k), -1.0 / dim));
    if (!out.witness || ratio > out.value) {
      out.value = ratio;
      out.witness = std::pair<PointId, PointId>{a, b};
      out.sequence_index = k;
    }
  });
  return out;
}

EmbeddingConstants embedding_constants(double c_w, double d_w, const DimensionInfo& dims) {
  if (!(d_w > 1.0)) throw NotAdmissibleError("embedding constants need d_w > 1");
  if (!(c_w >= d_w) || !std::isfinite(c_w)) throw ParameterError("embedding constants need d_w <= c_w < inf");
  dims.validate();
  EmbeddingConstants out;
  out.lower = 3.0 * c_w * d_w / (d_w - 1.0);
  const double d = dims.d;
  const double log_base = std::log(dims.c) + (2.0 * d + 1.0) * std::log(3.0) - std::log(d) +
                          4.0 * std::log(static_cast<double>(dims.n2));
  out.upper = c_w * std::exp(std::log2(c_w) / d * log_base);
  return out;
}

PowerSeminormIndex::PowerSeminormIndex(const SampledField& f, Workers workers) {
  require_nontrivial(f);
  const MetricSpace& space = f.space();
  const std::size_t n = f.size();
  auto by_distance = [](const Entry& a, const Entry& b) {
    return a.relative_distance < b.relative_distance ||
           (a.relative_distance == b.relative_distance && a.difference > b.difference);
  };
  auto keep_frontier = [&](std::vector<Entry>& entries) {
    std::sort(entries.begin(), entries.end(), by_distance);
    std::size_t kept = 0;
    double running = 0.0;
    for (const Entry& e : entries)
      if (e.difference > running) {
        running = e.difference;
        entries[kept++] = e;
      }
    entries.resize(kept);
  };

  std::vector<std::vector<Entry>> rows(n);
  parallel_for(n, workers, [&](std::size_t i) {
    std::vector<Entry> row;
    row.reserve(n - i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto a = static_cast<PointId>(i);
      const auto b = static_cast<PointId>(j);
      row.push_back({relative_distance(space, a, b), f.difference(a, b)});
    }
    keep_frontier(row);
    rows[i] = std::move(row);
  });
  for (auto& row : rows) frontier_.insert(frontier_.end(), row.begin(), row.end());
  keep_frontier(frontier_);
}

double PowerSeminormIndex::normalized(double alpha) const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("holder exponent must lie in (0, 1]");
  double best = 0.0;
  for (const Entry& e : frontier_) best = std::max(best, e.difference / power_weight(e.relative_distance, alpha));
  return best;
}

LogBlowup log_blowup_equivalence(const SampledField& f, double alpha_star, double gamma, double beta, int alpha_grid,
                                 Workers workers) {
  if (!(alpha_star > 0.0 && alpha_star < 1.0)) throw ParameterError("alpha* must lie in (0, 1)");
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  if (!(beta > 0.0 && beta < alpha_star / gamma)) throw ParameterError("beta must lie in (0, alpha*/gamma)");
  if (alpha_grid < 50) throw ParameterError("alpha grid needs at least 50 points");

  const auto w = Modulus::log_boosted(beta, gamma, Modulus::power(alpha_star));
  const double weighted = seminorm_exact(f, w, workers).value;
  const double e_beta_gamma = beta * gamma / std::exp(1.0);

  LogBlowup out;
  out.lhs = std::pow(e_beta_gamma, gamma) * weighted;
  out.rhs = std::pow(alpha_star + e_beta_gamma, gamma) * weighted;
  const PowerSeminormIndex index(f, workers);
  for (int k = 1; k <= alpha_grid; ++k) {
    const double alpha = alpha_star * (k - 0.5) / alpha_grid;
    const double term = std::pow(alpha_star - alpha, gamma) * index.normalized(alpha);
    if (term > out.middle) {
      out.middle = term;
      out.best_alpha = alpha;
    }
  }
  return out;
}

std::pair<double, std::pair<std::size_t, std::size_t>> lag_seminorm(std::span<const double> values,
                                                                     std::span<const double> inverse_weight) {
  const std::size_t n = values.size();
  if (inverse_weight.size() < n) throw ShapeError("inverse weight table shorter than the grid");
  double best = 0.0;
  std::size_t best_lag = 0;
  for (std::size_t lag = 1; lag < n; ++lag) {
    double widest = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) widest = std::max(widest, std::abs(values[i + lag] - values[i]));
    const double ratio = widest * inverse_weight[lag];
    if (ratio > best) {
      best = ratio;
      best_lag = lag;
    }
  }
  if (best_lag == 0) return {0.0, {0, n > 1 ? 1 : 0}};
  for (std::size_t i = 0; i + best_lag < n; ++i)
    if (std::abs(values[i + best_lag] - values[i]) * inverse_weight[best_lag] == best) return {best, {i, i + best_lag}};
  return {best, {0, best_lag}};
}

}  // namespace chainbound
