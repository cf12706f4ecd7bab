#include "chainbound/modulus.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "chainbound/errors.hpp"

namespace chainbound {

struct Modulus::Node {
  Kind kind;
  double a = 0.0;
  double b = 0.0;
  std::optional<Modulus> base;
  std::string name;
  std::function<double(double)> weight;
  mutable std::once_flag constants_once;
  mutable GrowthConstants cached{};
};

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw ParameterError(message);
}

}  // namespace

Modulus Modulus::power(double alpha) {
  require(alpha > 0.0 && alpha <= 1.0, "power modulus needs alpha in (0, 1]");
  auto node = std::make_shared<Node>();
  node->kind = Kind::power;
  node->a = alpha;
  return Modulus(std::move(node));
}

Modulus Modulus::scaled(double lambda, Modulus base) {
  require(lambda > 0.0 && std::isfinite(lambda), "scaled modulus needs lambda > 0");
  auto node = std::make_shared<Node>();
  node->kind = Kind::scaled;
  node->a = lambda;
  node->base = std::move(base);
  return Modulus(std::move(node));
}

Modulus Modulus::log_damped(double beta, double gamma, Modulus base) {
  require(beta > 0.0 && gamma > 0.0, "log-damped modulus needs beta, gamma > 0");
  auto node = std::make_shared<Node>();
  node->kind = Kind::log_damped;
  node->a = beta;
  node->b = gamma;
  node->base = std::move(base);
  return Modulus(std::move(node));
}

Modulus Modulus::log_boosted(double beta, double gamma, Modulus base) {
  require(beta > 0.0 && gamma > 0.0, "log-boosted modulus needs beta, gamma > 0");
  auto node = std::make_shared<Node>();
  node->kind = Kind::log_boosted;
  node->a = beta;
  node->b = gamma;
  node->base = std::move(base);
  return Modulus(std::move(node));
}

Modulus Modulus::log_pd(double p, double d, Modulus base) {
  require(p >= 1.0 && d > 0.0, "log_pd modulus needs p >= 1 and d > 0");
  auto node = std::make_shared<Node>();
  node->kind = Kind::log_pd;
  node->a = p;
  node->b = d;
  node->base = std::move(base);
  return Modulus(std::move(node));
}

Modulus Modulus::custom(std::string name, std::function<double(double)> weight) {
  require(static_cast<bool>(weight), "custom modulus needs a callable weight");
  auto node = std::make_shared<Node>();
  node->kind = Kind::custom;
  node->name = std::move(name);
  node->weight = std::move(weight);
  return Modulus(std::move(node));
}

Modulus Modulus::constant(double value) {
  return custom("constant", [value](double) { return value; });
}

Modulus::Kind Modulus::kind() const noexcept { return node_->kind; }
double Modulus::first_parameter() const noexcept { return node_->a; }
double Modulus::second_parameter() const noexcept { return node_->b; }
const Modulus* Modulus::base() const noexcept { return node_->base ? &*node_->base : nullptr; }
const std::string& Modulus::custom_name() const noexcept { return node_->name; }

double Modulus::evaluate(double x) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::power:
      return n.a == 1.0 ? x : std::pow(x, n.a);
    case Kind::scaled:
      return n.a * n.base->evaluate(x);
    case Kind::log_damped:
      return std::pow(1.0 - n.a * std::log(x), -n.b) * n.base->evaluate(x);
    case Kind::log_boosted:
      return std::pow(1.0 - n.a * std::log(x), n.b) * n.base->evaluate(x);
    case Kind::log_pd:
      return n.base->evaluate(x) / std::sqrt(n.a - n.b * std::log(x));
    case Kind::custom:
      return n.weight(x);
  }
  return 0.0;
}

double Modulus::operator()(double x) const {
  if (!(x > 0.0 && x <= 1.0)) {
    std::ostringstream msg;
    msg << "modulus argument " << x << " outside (0, 1]";
    throw DomainError(msg.str());
  }
  return evaluate(x);
}

double eval(const Modulus& w, double x) { return w(x); }

bool Modulus::certifiable() const noexcept {
  if (node_->kind == Kind::custom) return false;
  return node_->base ? node_->base->certifiable() : true;
}

std::string Modulus::describe() const {
  std::ostringstream out;
  out.precision(17);
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::power:
      out << "power(alpha=" << n.a << ")";
      break;
    case Kind::scaled:
      out << "scaled(lambda=" << n.a << ", " << n.base->describe() << ")";
      break;
    case Kind::log_damped:
      out << "log_damped(beta=" << n.a << ", gamma=" << n.b << ", " << n.base->describe() << ")";
      break;
    case Kind::log_boosted:
      out << "log_boosted(beta=" << n.a << ", gamma=" << n.b << ", " << n.base->describe() << ")";
      break;
    case Kind::log_pd:
      out << "log_pd(p=" << n.a << ", d=" << n.b << ", " << n.base->describe() << ")";
      break;
    case Kind::custom:
      out << "custom(" << n.name << ")";
      break;
  }
  return out.str();
}

namespace {

double grid_point(int i) { return std::exp2(-static_cast<double>(i) / kPointsPerOctave); }

double positive_value(const Modulus& w, double x) {
  const double v = w(x);
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << w.describe() << " evaluates to " << v << " at x = " << x;
    throw InvalidModulusError(msg.str());
  }
  return v;
}

std::optional<GrowthConstants> closed_form(const Modulus& w) {
  switch (w.kind()) {
    case Modulus::Kind::power: {
      const double ratio = std::exp2(w.first_parameter());
      return GrowthConstants{ratio, ratio};
    }
    case Modulus::Kind::scaled:
      return closed_form(*w.base());
    default:
      return std::nullopt;
  }
}

GrowthConstants scan_ratios(const Modulus& w, int depth) {
  GrowthConstants out{0.0, std::numeric_limits<double>::infinity()};
  const int count = depth * kPointsPerOctave;
  for (int i = 0; i <= count; ++i) {
    const double x = grid_point(i);
    const double ratio = positive_value(w, x) / positive_value(w, 0.5 * x);
    out.c_w = std::max(out.c_w, ratio);
    out.d_w = std::min(out.d_w, ratio);
  }
  return out;
}

}  // namespace

GrowthConstants growth_constants(const Modulus& w, int depth) {
  if (depth < 8) throw ParameterError("growth constant grid depth must be >= 8");
  if (auto exact = closed_form(w)) return *exact;
  return scan_ratios(w, depth);
}

GrowthConstants Modulus::constants() const {
  std::call_once(node_->constants_once, [this] { node_->cached = growth_constants(*this); });
  return node_->cached;
}

AdmissibilityReport check_admissible(const Modulus& w, int depth, double tol) {
  if (depth < 8) throw ParameterError("admissibility grid depth must be >= 8");
  if (!(tol > 0.0)) throw ParameterError("admissibility tolerance must be positive");
  AdmissibilityReport report;
  report.certified = w.certifiable();
  try {
    report.monotone = true;
    const int count = (depth + 1) * kPointsPerOctave;
    double previous = positive_value(w, grid_point(0));
    for (int i = 1; i <= count; ++i) {
      const double current = positive_value(w, grid_point(i));
      if (current > previous) {
        report.monotone = false;
        report.first_decrease = grid_point(i - 1);
        break;
      }
      previous = current;
    }
    report.constants = growth_constants(w, depth);
  } catch (const InvalidModulusError& e) {
    report.monotone = false;
    report.note = e.what();
    report.pass = false;
    report.certified = false;
    return report;
  }
  const auto& k = *report.constants;
  report.pass = report.monotone && k.d_w >= 1.0 + tol && std::isfinite(k.c_w);
  report.certified = report.certified && report.pass;
  report.note = report.certified ? "closed-form catalog member; continuity on (0,1] is not checked by the grid scan"
                                 : (w.certifiable() ? "grid scan failed" : "custom modulus, grid evidence only");
  return report;
}

TailBound dyadic_tail_bound(const Modulus& w, double x, int m) {
  if (!(x > 0.0 && x <= 1.0)) throw DomainError("tail bound needs x in (0, 1]");
  if (m < 0) throw ParameterError("tail bound needs m >= 0");
  const double d_w = w.constants().d_w;
  if (!(d_w > 1.0)) throw NotAdmissibleError(w.describe() + " has d_w <= 1");

  constexpr double kRelative = std::numeric_limits<double>::epsilon() / 2.0;
  constexpr double kSmallest = 1e-300;
  TailBound out;
  const double start = std::ldexp(x, -m);
  out.rhs = d_w / (d_w - 1.0) * w(start);
  double sum = 0.0;
  for (double point = start; point >= kSmallest; point *= 0.5) {
    const double term = w(point);
    if (sum > 0.0 && term < kRelative * sum) break;
    sum += term;
  }
  out.lhs = sum;
  return out;
}

}  // namespace chainbound
