#include "chainbound/random.hpp"

#include <cmath>

namespace chainbound {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(Philox4x32::Block& c, std::uint32_t k0, std::uint32_t k1) noexcept {
  const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
  const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
  c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0, static_cast<std::uint32_t>(p1),
       static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1, static_cast<std::uint32_t>(p0)};
}

constexpr int kLayers = 128;
constexpr double kTailStart = 3.442619855899;
constexpr double kLayerArea = 9.91256303526217e-3;

struct ZigguratTables {
  std::array<double, kLayers + 1> x{};
  std::array<double, kLayers> ratio{};

  ZigguratTables() {
    double f = std::exp(-0.5 * kTailStart * kTailStart);
    x[0] = kLayerArea / f;
    x[1] = kTailStart;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kLayerArea / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigguratTables& ziggurat() {
  static const ZigguratTables tables;
  return tables;
}

inline double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Block Philox4x32::generate(std::uint64_t key, std::uint64_t stream,
                                       std::uint64_t position) noexcept {
  Block c{static_cast<std::uint32_t>(position), static_cast<std::uint32_t>(position >> 32),
          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    philox_round(c, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return c;
}

void RandomStream::refill() noexcept {
  const auto block = Philox4x32::generate(seed_, stream_, position_++);
  buffer_[0] = (std::uint64_t{block[1]} << 32) | block[0];
  buffer_[1] = (std::uint64_t{block[3]} << 32) | block[2];
  buffered_ = 2;
}

std::uint64_t RandomStream::next_u64() noexcept {
  if (buffered_ == 0) refill();
  return buffer_[2 - buffered_--];
}

double RandomStream::uniform() noexcept { return to_unit(next_u64()); }

double RandomStream::uniform_open_low() noexcept { return 1.0 - uniform(); }

double RandomStream::rademacher() noexcept { return (next_u64() >> 63) ? 1.0 : -1.0; }

double RandomStream::normal() noexcept {
  const auto& z = ziggurat();
  for (;;) {
    const std::uint64_t bits = next_u64();
    const int layer = static_cast<int>(bits & (kLayers - 1));
    const double u = 2.0 * to_unit(bits) - 1.0;
    if (std::fabs(u) < z.ratio[layer]) return u * z.x[layer];
    if (layer == 0) {
      double tail = 0.0;
      double y = 0.0;
      do {
        tail = std::log(uniform_open_low()) / kTailStart;
        y = std::log(uniform_open_low());
      } while (-2.0 * y < tail * tail);
      return u < 0.0 ? tail - kTailStart : kTailStart - tail;
    }
    const double candidate = u * z.x[layer];
    const double f0 = std::exp(-0.5 * (z.x[layer] * z.x[layer] - candidate * candidate));
    const double f1 = std::exp(-0.5 * (z.x[layer + 1] * z.x[layer + 1] - candidate * candidate));
    if (f1 + uniform() * (f0 - f1) < 1.0) return candidate;
  }
}

}  // namespace chainbound
