#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace chainbound {

struct GrowthConstants {
  double c_w = 0.0;  // sup of w(x)/w(x/2)
  double d_w = 0.0;  // inf of w(x)/w(x/2)
};

// Grid resolution used when growth constants are estimated numerically:
// x = 2^{-i/points_per_octave} for i = 0 .. octaves * points_per_octave.
inline constexpr int kDefaultGridDepth = 14;
inline constexpr int kPointsPerOctave = 64;

// A modulus of continuity w : (0, 1] -> (0, inf). Values are immutable and cheap
// to copy; composite kinds share their base.
class Modulus {
 public:
  enum class Kind { power, scaled, log_damped, log_boosted, log_pd, custom };

  // x^alpha, alpha in (0, 1].
  static Modulus power(double alpha);
  // lambda * base(x).
  static Modulus scaled(double lambda, Modulus base);
  // (1 - beta log x)^{-gamma} base(x).
  static Modulus log_damped(double beta, double gamma, Modulus base);
  // (1 - beta log x)^{gamma} base(x).
  static Modulus log_boosted(double beta, double gamma, Modulus base);
  // (p - d log x)^{-1/2} base(x).
  static Modulus log_pd(double p, double d, Modulus base);
  // User-supplied weight; never certified.
  static Modulus custom(std::string name, std::function<double(double)> weight);
  static Modulus constant(double value = 1.0);

  Kind kind() const noexcept;
  // First and second scalar parameter of the kind (alpha; lambda; beta, gamma; p, d).
  double first_parameter() const noexcept;
  double second_parameter() const noexcept;
  const Modulus* base() const noexcept;
  const std::string& custom_name() const noexcept;

  double operator()(double x) const;
  // True when every node of the expression is one of the closed-form kinds.
  bool certifiable() const noexcept;
  std::string describe() const;

  // Growth constants at the default grid depth, computed once and cached.
  GrowthConstants constants() const;

 private:
  struct Node;
  explicit Modulus(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  double evaluate(double x) const;

  std::shared_ptr<const Node> node_;
};

double eval(const Modulus& w, double x);

GrowthConstants growth_constants(const Modulus& w, int depth = kDefaultGridDepth);

struct AdmissibilityReport {
  bool monotone = false;
  std::optional<double> first_decrease;  // grid point where w decreased, if any
  std::optional<GrowthConstants> constants;
  bool pass = false;
  // Only the closed-form catalog is certified; continuity is never verified by the grid scan.
  bool certified = false;
  std::string note;
};

AdmissibilityReport check_admissible(const Modulus& w, int depth = kDefaultGridDepth, double tol = 1e-6);

struct TailBound {
  double lhs = 0.0;
  double rhs = 0.0;
};

// lhs = sum_{k >= m} w(x / 2^k) until terms drop below double precision relative
// to the partial sum; rhs = d_w / (d_w - 1) * w(x / 2^m).
TailBound dyadic_tail_bound(const Modulus& w, double x, int m);

}  // namespace chainbound
