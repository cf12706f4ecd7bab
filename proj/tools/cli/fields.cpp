#include "cli/fields.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "chainbound/errors.hpp"
#include "chainbound/random.hpp"

namespace chainbound::cli {

namespace {

class ModulusReader {
 public:
  explicit ModulusReader(std::string_view text) : text_(text) {}

  Modulus parse() {
    Modulus w = expression();
    skip();
    if (pos_ != text_.size()) fail("trailing characters");
    return w;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw UsageError("weight '" + std::string(text_) + "': " + what);
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string name() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  double number() {
    skip();
    const std::size_t mark = pos_;
    const std::string label = name();
    skip();
    if (label.empty() || pos_ >= text_.size() || text_[pos_] != '=') pos_ = mark;
    else ++pos_;
    skip();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc()) fail("expected a number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  Modulus expression() {
    const std::string kind = name();
    expect('(');
    Modulus w = Modulus::constant();
    if (kind == "power") {
      w = Modulus::power(number());
    } else if (kind == "constant") {
      w = Modulus::constant(number());
    } else if (kind == "scaled") {
      const double lambda = number();
      expect(',');
      w = Modulus::scaled(lambda, expression());
    } else if (kind == "log_damped" || kind == "log_boosted" || kind == "log_pd") {
      const double a = number();
      expect(',');
      const double b = number();
      expect(',');
      const Modulus base = expression();
      w = kind == "log_damped" ? Modulus::log_damped(a, b, base)
          : kind == "log_boosted" ? Modulus::log_boosted(a, b, base)
                                  : Modulus::log_pd(a, b, base);
    } else {
      fail("unknown modulus '" + kind + "'");
    }
    expect(')');
    return w;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

constexpr std::string_view kFieldKinds[] = {"lipschitz", "sqrt", "brownian"};

std::uint32_t kind_code(const std::string& kind) {
  for (std::uint32_t i = 0; i < std::size(kFieldKinds); ++i)
    if (kFieldKinds[i] == kind) return i;
  throw UsageError("unknown field kind '" + kind + "' (lipschitz, sqrt, brownian)");
}

}  // namespace

Modulus parse_modulus(std::string_view text) {
  try {
    return ModulusReader(text).parse();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError("weight '" + std::string(text) + "': " + e.what());
  }
}

bool is_field_kind(const std::string& kind) {
  return std::find(std::begin(kFieldKinds), std::end(kFieldKinds), kind) != std::end(kFieldKinds);
}

SampledField make_field(const MetricSpace& space, const std::string& kind, std::uint64_t seed, std::uint64_t index) {
  const std::uint32_t code = kind_code(kind);
  if (!space.has_coordinates()) throw ParameterError("generated fields need a coordinate space");
  RandomStream rng(seed, substream(index, code));
  const std::size_t n = space.size();
  const std::size_t dim = space.coordinate_dim();
  std::vector<double> values(n, 0.0);

  if (kind == "lipschitz") {
    constexpr int kWaves = 5;
    std::vector<double> amp(kWaves), phase(kWaves), freq(kWaves * dim);
    for (int m = 0; m < kWaves; ++m) {
      amp[m] = rng.normal();
      phase[m] = 2.0 * std::numbers::pi * rng.uniform();
      for (std::size_t d = 0; d < dim; ++d) freq[m * dim + d] = 8.0 * rng.normal();
    }
    for (PointId i = 0; i < n; ++i) {
      const auto x = space.coordinates(i);
      for (int m = 0; m < kWaves; ++m) {
        double arg = phase[m];
        for (std::size_t d = 0; d < dim; ++d) arg += freq[m * dim + d] * x[d];
        values[i] += amp[m] * std::cos(arg);
      }
    }
  } else if (kind == "sqrt") {
    const PointId center = static_cast<PointId>(rng.next_u64() % n);
    for (PointId i = 0; i < n; ++i) values[i] = std::sqrt(space.distance(i, center));
  } else {
    std::vector<PointId> order(n);
    std::iota(order.begin(), order.end(), PointId{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](PointId a, PointId b) { return space.coordinates(a)[0] < space.coordinates(b)[0]; });
    double level = 0.0;
    double previous = space.coordinates(order[0])[0];
    for (PointId i : order) {
      const double x = space.coordinates(i)[0];
      if (x > previous) level += std::sqrt(x - previous) * rng.normal();
      previous = x;
      values[i] = level;
    }
  }
  return SampledField::scalar(space, std::move(values));
}

}  // namespace chainbound::cli
