#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "chainbound/holder.hpp"
#include "chainbound/metric.hpp"
#include "chainbound/modulus.hpp"

namespace chainbound::cli {

// "power(0.3)", "scaled(2, power(0.5))", "log_damped(1, 1, power(0.5))",
// "log_boosted(b, g, w)", "log_pd(p, d, w)", "constant(1)". Arguments may carry a
// "name=" label as printed by Modulus::describe. Throws UsageError.
Modulus parse_modulus(std::string_view text);

// Random test fields on a coordinate space:
//   lipschitz  sum of five random plane waves,
//   sqrt       |x - c|^{1/2} around a random cloud point c,
//   brownian   a Brownian path along the first coordinate.
// Field `index` of a kind draws from stream substream(index, kind).
SampledField make_field(const MetricSpace& space, const std::string& kind, std::uint64_t seed, std::uint64_t index);

bool is_field_kind(const std::string& kind);

}  // namespace chainbound::cli
