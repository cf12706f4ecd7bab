#include "cli/run.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>

#include "chainbound/chaining.hpp"
#include "chainbound/errors.hpp"
#include "chainbound/holder.hpp"
#include "chainbound/metric.hpp"
#include "chainbound/modulus.hpp"
#include "chainbound/pam.hpp"
#include "chainbound/stochastic.hpp"
#include "cli/fields.hpp"
#include "cli/io.hpp"

namespace chainbound::cli {

namespace fs = std::filesystem;

namespace {

struct Outcome {
  std::vector<std::pair<std::string, std::string>> texts;
  std::vector<std::pair<std::string, std::function<void(const fs::path&)>>> binaries;
  std::vector<Contract> contracts;
  CsvTable summary{{"key", "value"}};

  void text(std::string name, std::string content) { texts.emplace_back(std::move(name), std::move(content)); }

  void check(std::string name, bool passed, std::string table = {}, std::int64_t row = -1, std::string detail = {}) {
    contracts.push_back({std::move(name), passed, std::move(table), row, std::move(detail)});
  }

  void note(const std::string& key, double value) { summary.row() << key << value; }
  void note(const std::string& key, const std::string& value) { summary.row() << key << value; }
};

struct Context {
  const ExperimentConfig& config;
  Params& params;
  std::uint64_t seed;
  Workers workers;
};

MetricSpace load_input(Context& ctx) { return load_point_cloud(ctx.config.resolve(ctx.params.text("input"))); }

DimensionInfo choose_dims(const MetricSpace& space, const std::string& mode, std::uint64_t fit_levels) {
  if (mode == "euclidean" || (mode == "auto" && space.kind() == MetricSpace::Kind::euclidean)) {
    if (space.kind() != MetricSpace::Kind::euclidean) throw UsageError("dims = \"euclidean\" needs a Euclidean cloud");
    return euclidean_dimension_info(static_cast<int>(space.coordinate_dim()));
  }
  if (mode == "fit" || mode == "auto") return fit_dimension(space, static_cast<int>(fit_levels)).info;
  throw UsageError("dims must be \"auto\", \"euclidean\" or \"fit\"");
}

struct NetOptions {
  std::optional<std::string> net_path;
  std::string dims;
  std::uint64_t fit_levels;
  std::uint64_t depth;
};

NetOptions net_options(Params& params) {
  NetOptions o;
  o.net_path = params.optional_text("net");
  o.dims = params.text("dims", "auto");
  o.fit_levels = params.count("fit_levels", 10);
  o.depth = params.count("depth", 0);
  return o;
}

ChainingNet obtain_net(const Context& ctx, const MetricSpace& space, const NetOptions& o) {
  if (o.net_path) {
    std::ifstream in(ctx.config.resolve(*o.net_path));
    if (!in) throw Error("cannot read net " + *o.net_path);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("net JSON: ") + e.what());
    }
    return net_from_json(doc, space);
  }
  std::optional<int> depth;
  if (o.depth > 0) depth = static_cast<int>(o.depth);
  return build_net(space, choose_dims(space, o.dims, o.fit_levels), depth);
}

void record_invariants(Outcome& out, const ChainingNet& net) {
  const InvariantReport report = verify_net(net);
  for (const auto& check : report.checks) out.check("net:" + check.name, check.passed, {}, -1, check.witness);
}

std::vector<std::string> field_kinds(Params& params) {
  auto kinds = params.texts("fields", std::vector<std::string>{"lipschitz", "sqrt", "brownian"});
  for (const auto& k : kinds)
    if (!is_field_kind(k)) throw UsageError("unknown field kind '" + k + "'");
  return kinds;
}

std::vector<Modulus> weights(Params& params, const std::string& key, std::vector<std::string> fallback) {
  std::vector<Modulus> out;
  for (const auto& text : params.texts(key, fallback)) out.push_back(parse_modulus(text));
  return out;
}

std::function<double(std::size_t)> power_weight(double exponent) {
  return [exponent](std::size_t k) { return std::pow(static_cast<double>(k), -exponent); };
}

void add_comparison(CsvTable::Row& row, const Comparison& c) {
  row << c.lhs.lp_value << c.lhs.standard_error << c.rhs << c.rhs_standard_error << c.holds();
}

// ---- commands ---------------------------------------------------------------------------

Outcome net_build(Context& ctx) {
  const MetricSpace space = load_input(ctx);
  const NetOptions o = net_options(ctx.params);
  if (o.net_path) throw UsageError("net-build: param 'net' is not accepted");
  ctx.params.finish();
  Outcome out;
  const ChainingNet net = obtain_net(ctx, space, o);
  out.text("net.json", net_to_json(net).dump(1) + "\n");
  CsvTable levels({"level", "radius", "points", "edges", "theta_edges_end", "theta_dummy_end"});
  for (int n = 0; n <= net.depth; ++n)
    levels.row() << n << std::ldexp(1.0, -n) << std::uint64_t(net.levels[n].size()) << std::uint64_t(net.edges[n].size())
                 << std::uint64_t(net.theta[2 * n + 1]) << std::uint64_t(net.theta[2 * n + 2]);
  out.text("levels.csv", levels.str());
  out.note("points", double(space.size()));
  out.note("source_diameter", net.source_diameter);
  out.note("depth", double(net.depth));
  out.note("dims_d", net.dims.d);
  out.note("dims_c", net.dims.c);
  out.note("dims_n2", double(net.dims.n2));
  out.note("dims_source", net.dims.label());
  record_invariants(out, net);
  return out;
}

Outcome seminorm(Context& ctx) {
  const MetricSpace space = load_input(ctx);
  const std::string kind = ctx.params.text("field", "lipschitz");
  const std::uint64_t index = ctx.params.count("field_index", 0);
  const Modulus w = parse_modulus(ctx.params.text("weight", "power(0.5)"));
  const bool embedded = ctx.params.flag("embedded", false);
  const NetOptions o = net_options(ctx.params);
  if (!is_field_kind(kind)) throw UsageError("unknown field kind '" + kind + "'");
  ctx.params.finish();

  Outcome out;
  const SampledField f = make_field(space, kind, ctx.seed, index);
  CsvTable table({"method", "weight", "value", "witness_a", "witness_b", "sequence_index"});
  auto emit = [&](const std::string& method, const SeminormResult& r) {
    auto row = table.row();
    row << method << r.weight << r.value;
    if (r.witness) row << std::uint64_t(r.witness->first) << std::uint64_t(r.witness->second);
    else row << "" << "";
    if (r.sequence_index) row << *r.sequence_index;
    else row << "";
    out.check(method + ":finite", std::isfinite(r.value), "seminorm.csv", std::int64_t(table.size()));
  };
  emit("exact", seminorm_exact(f, w, ctx.workers));
  if (embedded) {
    const ChainingNet net = obtain_net(ctx, space, o);
    emit("embedded", seminorm_embedded(f, net, w));
  }
  out.text("seminorm.csv", table.str());
  return out;
}

Outcome sandwich(Context& ctx) {
  const MetricSpace space = load_input(ctx);
  const NetOptions o = net_options(ctx.params);
  const auto kinds = field_kinds(ctx.params);
  const std::uint64_t count = ctx.params.count("count", 10);
  const auto ws = weights(ctx.params, "weights", {"power(0.3)", "power(0.7)", "log_damped(1, 1, power(0.5))"});
  ctx.params.finish();

  Outcome out;
  const ChainingNet net = obtain_net(ctx, space, o);
  record_invariants(out, net);
  CsvTable table({"field", "index", "weight", "exact", "embedded", "lower_constant", "upper_constant", "lower_holds",
                  "upper_holds"});
  for (const auto& kind : kinds)
    for (std::uint64_t i = 0; i < count; ++i) {
      const SampledField f = make_field(space, kind, ctx.seed, i);
      for (const Modulus& w : ws) {
        const GrowthConstants g = w.constants();
        const EmbeddingConstants c = embedding_constants(g.c_w, g.d_w, net.dims);
        const double exact = seminorm_exact(f, w, ctx.workers).value;
        const double emb = seminorm_embedded(f, net, w).value;
        const bool lower = exact <= c.lower * emb;
        const bool upper = emb <= c.upper * exact;
        table.row() << kind << i << w.describe() << exact << emb << c.lower << c.upper << lower << upper;
        out.check("sandwich", lower && upper, "sandwich.csv", std::int64_t(table.size()),
                  kind + " #" + std::to_string(i) + " " + w.describe());
      }
    }
  out.text("sandwich.csv", table.str());
  return out;
}

Outcome blowup(Context& ctx) {
  const MetricSpace space = load_input(ctx);
  const auto kinds = field_kinds(ctx.params);
  const std::uint64_t count = ctx.params.count("count", 10);
  const double alpha_star = ctx.params.real("alpha_star", 0.5);
  const double gamma = ctx.params.real("gamma", 1.0);
  const double beta = ctx.params.real("beta", 0.4);
  const auto grid = static_cast<int>(ctx.params.count("grid", 200));
  const double tolerance = ctx.params.real("grid_tolerance", 0.05);
  ctx.params.finish();

  Outcome out;
  CsvTable table({"field", "index", "lhs", "middle", "rhs", "best_alpha", "holds"});
  for (const auto& kind : kinds)
    for (std::uint64_t i = 0; i < count; ++i) {
      LogBlowup b = log_blowup_equivalence(make_field(space, kind, ctx.seed, i), alpha_star, gamma, beta, grid,
                                           ctx.workers);
      b.grid_tolerance = tolerance;
      table.row() << kind << i << b.lhs << b.middle << b.rhs << b.best_alpha << b.holds();
      out.check("blowup", b.holds(), "blowup.csv", std::int64_t(table.size()), kind + " #" + std::to_string(i));
    }
  out.text("blowup.csv", table.str());
  return out;
}

Outcome sup_integrals(Context& ctx) {
  const auto n_list = ctx.params.counts("n_list", std::vector<std::uint64_t>{16, 64, 256, 1024, 4096});
  const double exponent = ctx.params.real("sigma_exponent", 0.0);
  const double p = ctx.params.real("p", 2.0);
  const double T = ctx.params.real("T", 1.0);
  const std::uint64_t replicates = ctx.params.count("replicates", 2000);
  const std::uint64_t steps = ctx.params.count("steps", 0);
  const bool check_slope = ctx.params.has("slope_target");
  const double slope_target = ctx.params.real("slope_target", 0.5);
  const double slope_tolerance = ctx.params.real("slope_tolerance", 0.15);
  ctx.params.finish();

  const std::vector<std::size_t> ns(n_list.begin(), n_list.end());
  const SupIntegralsResult r =
      experiment_sup_integrals(ns, power_weight(exponent), p, T, replicates, ctx.seed, steps, ctx.workers);
  Outcome out;
  CsvTable table({"n", "lhs", "lhs_se", "rhs", "rhs_se", "holds"});
  for (const auto& row : r.rows) {
    auto csv = table.row();
    csv << std::uint64_t(row.n);
    add_comparison(csv, row.comparison);
    out.check("lhs<=rhs", row.comparison.holds(), "sup_integrals.csv", std::int64_t(table.size()));
  }
  out.text("sup_integrals.csv", table.str());
  out.note("grid_steps", double(r.steps));
  out.note("slope", r.scaling.slope);
  out.note("intercept", r.scaling.intercept);
  out.note("r_squared", r.scaling.r_squared);
  if (check_slope)
    out.check("slope", std::abs(r.scaling.slope - slope_target) <= slope_tolerance, "summary.csv", -1,
              "slope " + format_double(r.scaling.slope));
  return out;
}

Outcome ou_longterm(Context& ctx) {
  const double a = ctx.params.real("a", 1.0);
  const auto horizons = ctx.params.reals("horizons", std::vector<double>{4, 16, 64, 256, 1024});
  const double p = ctx.params.real("p", 2.0);
  const std::uint64_t replicates = ctx.params.count("replicates", 2000);
  const std::string forcing = ctx.params.text("forcing", "one");
  const double max_dt = ctx.params.real("max_dt", 0.01);
  const double max_steps = ctx.params.real("max_steps", 1e5);
  const bool check_r2 = ctx.params.has("min_r_squared");
  const double min_r2 = ctx.params.real("min_r_squared", 0.9);
  ctx.params.finish();

  OUParams tmpl;
  tmpl.a = a;
  if (forcing == "one") tmpl.forcing = [](double, double) { return 1.0; };
  else if (forcing == "sine") tmpl.forcing = [](double t, double) { return std::sin(t); };
  else if (forcing == "cosine") tmpl.forcing = [](double t, double) { return std::cos(t); };
  else throw UsageError("ou-longterm: forcing must be \"one\", \"sine\" or \"cosine\"");

  const OULongtermResult r =
      experiment_ou_longterm(a, horizons, p, replicates, ctx.seed, tmpl, max_dt, max_steps, ctx.workers);
  Outcome out;
  CsvTable table({"T", "dt", "estimate", "estimate_se", "bound", "holds"});
  for (const auto& row : r.rows) {
    const bool holds = row.estimate.lp_value <= row.bound;
    table.row() << row.T << row.dt << row.estimate.lp_value << row.estimate.standard_error << row.bound << holds;
    out.check("estimate<=bound", holds, "ou_longterm.csv", std::int64_t(table.size()));
  }
  out.text("ou_longterm.csv", table.str());
  out.note("growth_slope", r.growth.slope);
  out.note("growth_intercept", r.growth.intercept);
  out.note("growth_r_squared", r.growth.r_squared);
  if (check_r2)
    out.check("growth_r_squared", r.growth.r_squared >= min_r2, "summary.csv", -1,
              "R^2 " + format_double(r.growth.r_squared));
  return out;
}

Outcome martingale_sup(Context& ctx) {
  const auto n_list = ctx.params.counts("n", std::vector<std::uint64_t>{16, 256});
  const std::uint64_t steps = ctx.params.count("steps", 1024);
  const MartingaleScheme scheme = parse_martingale_scheme(ctx.params.text("scheme", "rademacher"));
  const double exponent = ctx.params.real("weight_exponent", 0.0);
  const double p = ctx.params.real("p", 2.0);
  const std::uint64_t replicates = ctx.params.count("replicates", 2000);
  ctx.params.finish();

  Outcome out;
  CsvTable table({"n", "lhs", "lhs_se", "rhs", "rhs_se", "holds", "jump_term", "variance_term"});
  for (std::uint64_t n : n_list) {
    const MartingaleSupResult r =
        experiment_martingale_sup(n, steps, scheme, power_weight(exponent), p, replicates, ctx.seed, ctx.workers);
    auto row = table.row();
    row << n;
    add_comparison(row, r.comparison);
    row << r.jump_term.lp_value << r.variance_term.lp_value;
    out.check("lhs<=rhs", r.comparison.holds(), "martingale_sup.csv", std::int64_t(table.size()));
  }
  out.text("martingale_sup.csv", table.str());
  return out;
}

Outcome good_lambda(Context& ctx) {
  const double beta = ctx.params.real("beta", 2.0);
  const auto deltas = ctx.params.reals("delta", std::vector<double>{0.1, 0.3});
  const auto lambdas = ctx.params.reals("lambdas");
  const GoodLambdaIntegrand integrand = parse_good_lambda_integrand(ctx.params.text("integrand", "random_stop"));
  const double T = ctx.params.real("T", 1.0);
  const std::uint64_t replicates = ctx.params.count("replicates", 100000);
  const std::uint64_t steps = ctx.params.count("steps", 0);
  const std::uint64_t min_eligible = ctx.params.count("min_eligible", 0);
  ctx.params.finish();

  Outcome out;
  CsvTable table({"delta", "lambda", "joint_probability", "joint_se", "tail_probability", "bound", "eligible", "holds"});
  for (double delta : deltas) {
    const GoodLambdaResult r =
        experiment_good_lambda(beta, delta, lambdas, integrand, T, replicates, ctx.seed, steps, ctx.workers);
    for (const auto& row : r.rows) {
      table.row() << delta << row.lambda << row.joint_probability << row.joint_standard_error << row.tail_probability
                  << row.bound << row.eligible << row.holds;
      if (row.eligible) out.check("good_lambda", row.holds, "good_lambda.csv", std::int64_t(table.size()));
    }
    out.note("factor_delta_" + format_double(delta), r.factor);
    out.check("eligible_count", r.eligible_count() >= min_eligible, "good_lambda.csv", -1,
              "delta " + format_double(delta) + ": " + std::to_string(r.eligible_count()) + " eligible");
  }
  out.text("good_lambda.csv", table.str());
  return out;
}

Outcome levy(Context& ctx) {
  const std::uint64_t steps = ctx.params.count("steps", std::uint64_t{1} << 20);
  const auto h_list = ctx.params.reals("h_list", std::vector<double>{std::ldexp(1.0, -16)});
  const std::uint64_t replicates = ctx.params.count("replicates", 50);
  const auto weighted_p = ctx.params.reals("weighted_p", std::vector<double>{1, 2, 4, 8});
  const std::uint64_t weighted_points = ctx.params.count("weighted_points", 8193);
  const auto band = ctx.params.reals("statistic_band", std::vector<double>{0.8, 1.15});
  const double max_spread = ctx.params.real("max_constant_spread", 0.25);
  ctx.params.finish();
  if (band.size() != 2) throw UsageError("levy: statistic_band needs two numbers");

  const LevyResult r = experiment_levy_modulus(steps, h_list, replicates, ctx.seed, weighted_p, weighted_points,
                                               ctx.workers);
  Outcome out;
  CsvTable table({"h", "window", "raw_sup_mean", "statistic", "statistic_se"});
  for (const auto& row : r.rows) {
    table.row() << row.h << std::uint64_t(row.window) << row.raw_sup_mean << row.statistic.mean
                << row.statistic.standard_error;
    out.check("statistic_band", row.statistic.mean >= band[0] && row.statistic.mean <= band[1], "levy.csv",
              std::int64_t(table.size()));
  }
  CsvTable weighted({"p", "estimate", "estimate_se", "constant"});
  for (std::size_t k = 0; k < r.weighted.size(); ++k)
    weighted.row() << weighted_p[k] << r.weighted[k].lp_value << r.weighted[k].standard_error << r.constants[k];
  out.text("levy.csv", table.str());
  out.text("levy_weighted.csv", weighted.str());
  out.note("constant_fit", r.constant_fit);
  out.note("constant_spread", r.constant_spread);
  out.note("weighted_points", double(r.weighted_points));
  out.check("constant_spread", r.constant_spread <= max_spread, "levy_weighted.csv", -1,
            "spread " + format_double(r.constant_spread));
  return out;
}

Outcome kc(Context& ctx) {
  const double alpha = ctx.params.real("alpha", 0.5);
  const auto betas = ctx.params.reals("beta", std::vector<double>{0.25, 0.35});
  const double p = ctx.params.real("p", 8.0);
  const std::uint64_t grid = ctx.params.count("grid", 1025);
  const std::uint64_t replicates = ctx.params.count("replicates", 500);
  const std::string process = ctx.params.text("process", "brownian");
  ctx.params.finish();
  KcProcess kind;
  if (process == "brownian") kind = KcProcess::brownian;
  else if (process == "constant") kind = KcProcess::constant;
  else throw UsageError("kc: process must be \"brownian\" or \"constant\"");

  Outcome out;
  CsvTable table({"beta", "lhs", "lhs_se", "rhs", "rhs_se", "holds", "embedding_constant", "moment_constant"});
  for (double beta : betas) {
    const KcResult r = experiment_kc_bound(alpha, beta, p, grid, replicates, ctx.seed, kind, ctx.workers);
    auto row = table.row();
    row << beta;
    add_comparison(row, r.comparison);
    row << r.embedding_constant << r.moment_constant;
    out.check("lhs<=rhs", r.comparison.holds(), "kc.csv", std::int64_t(table.size()));
  }
  out.text("kc.csv", table.str());
  return out;
}

PAMParams pam_params(Params& params, std::uint64_t seed) {
  PAMParams p;
  p.eta = params.real("eta", 1.0);
  p.T = params.real("T", 0.1);
  p.K = static_cast<int>(params.count("K", 63));
  p.Mx = static_cast<int>(params.count("Mx", 64));
  p.Nt = static_cast<int>(params.count("Nt", 4096));
  p.slices = static_cast<int>(params.count("slices", 64));
  p.u0 = params.reals("u0", std::vector<double>{1.0});
  p.p = params.real("p", 6.0);
  p.replicates = params.count("replicates", 10);
  p.seed = seed;
  return p;
}

void note_regime(Outcome& out, const PAMParams& p) {
  out.note("existence_regime", p.existence_regime() ? "p>4" : "p<=4 (outside the existence hypothesis)");
  out.note("step_resolves_modes", p.step_resolves_modes() ? "true" : "false");
}

Outcome pam_solve_command(Context& ctx) {
  const PAMParams p = pam_params(ctx.params, ctx.seed);
  const bool snapshots = ctx.params.flag("snapshots", true);
  ctx.params.finish();

  auto ensemble = std::make_shared<PAMEnsemble>(pam_solve(p, ctx.workers));
  Outcome out;
  note_regime(out, p);
  CsvTable table({"t", "x", "mean", "stderr", "heat"});
  bool boundary = true;
  bool finite = true;
  const double n = double(ensemble->replicates);
  for (std::size_t i = 0; i <= ensemble->slices; ++i)
    for (std::size_t j = 0; j < ensemble->points; ++j) {
      double sum = 0.0, sq = 0.0;
      for (std::size_t r = 0; r < ensemble->replicates; ++r) {
        const double v = ensemble->at(r, i, j);
        finite = finite && std::isfinite(v);
        if (j == 0 || j + 1 == ensemble->points) boundary = boundary && v == 0.0;
        sum += v;
        sq += v * v;
      }
      const double mean = sum / n;
      const double se = n > 1 ? std::sqrt(std::max(0.0, sq / n - mean * mean) / (n - 1.0)) : 0.0;
      const double t = ensemble->time(i), x = ensemble->position(j);
      double heat = 0.0;
      for (std::size_t k = 0; k < std::min<std::size_t>(p.u0.size(), std::size_t(p.K)); ++k) {
        const double wave = std::numbers::pi * double(k + 1);
        heat += p.u0[k] * std::exp(-wave * wave * t) * std::sin(wave * x);
      }
      table.row() << t << x << mean << se << heat;
    }
  out.text("mean.csv", table.str());
  out.check("boundary_zero", boundary);
  out.check("finite", finite);
  if (snapshots) {
    json manifest;
    manifest["format"] = "CBPAM001";
    manifest["layout"] = "magic[8] u64 replicates, u64 slices, u64 points, u64 seed, f64 T, f64 p, f64 values "
                         "[replicate][slice][point], little-endian";
    manifest["replicates"] = ensemble->replicates;
    manifest["slices"] = ensemble->slices;
    manifest["points"] = ensemble->points;
    manifest["T"] = p.T;
    manifest["p"] = p.p;
    manifest["eta"] = p.eta;
    manifest["K"] = p.K;
    manifest["Mx"] = p.Mx;
    manifest["Nt"] = p.Nt;
    manifest["u0"] = p.u0;
    manifest["seed"] = p.seed;
    out.text("snapshots.json", manifest.dump(1) + "\n");
    out.binaries.emplace_back("snapshots.bin", [ensemble](const fs::path& path) { write_snapshots(path, *ensemble); });
  }
  return out;
}

Outcome pam_modulus(Context& ctx) {
  const auto snapshot_path = ctx.params.optional_text("snapshots");
  const double time_exponent = ctx.params.real("time_exponent", 0.25);
  const bool diagnostic = ctx.params.has("diagnostic_exponent");
  const double diagnostic_exponent = ctx.params.real("diagnostic_exponent", 0.35);
  const auto band = ctx.params.reals("ratio_band", std::vector<double>{0.5, 2.0});
  if (band.size() != 2) throw UsageError("pam-modulus: ratio_band needs two numbers");

  std::vector<PAMParams> levels;
  std::optional<double> snapshot_p;
  if (snapshot_path) {
    if (ctx.params.has("p")) snapshot_p = ctx.params.real("p");
  } else {
    const PAMParams base = pam_params(ctx.params, ctx.seed);
    if (const json* refinements = ctx.params.raw("refinements")) {
      if (!refinements->is_array() || refinements->empty())
        throw UsageError("pam-modulus: refinements must be an array of [Mx, Nt] pairs");
      for (const auto& pair : *refinements) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer())
          throw UsageError("pam-modulus: refinements must be an array of [Mx, Nt] pairs");
        PAMParams level = base;
        level.Mx = pair[0].get<int>();
        level.Nt = pair[1].get<int>();
        level.K = level.Mx - 1;
        level.slices = level.Mx;
        levels.push_back(level);
      }
    } else {
      levels.push_back(base);
    }
  }
  ctx.params.finish();

  Outcome out;
  std::vector<std::string> header = {"Mx", "Nt", "K", "slices", "statistic", "statistic_se", "ratio"};
  if (diagnostic) {
    header.push_back("diagnostic");
    header.push_back("diagnostic_ratio");
  }
  CsvTable table(header);
  double previous = 0.0, previous_diagnostic = 0.0;
  auto evaluate = [&](const PAMEnsemble& e, std::int64_t Mx, std::int64_t Nt, std::int64_t K, double p) {
    const McEstimate m = pam_modulus_statistic(e, p, time_exponent, ctx.workers);
    const double ratio = previous > 0.0 ? m.lp_value / previous : std::nan("");
    auto row = table.row();
    row << Mx << Nt << K << std::uint64_t(e.slices) << m.lp_value << m.standard_error << ratio;
    if (diagnostic) {
      const McEstimate d = pam_modulus_statistic(e, p, diagnostic_exponent, ctx.workers);
      row << d.lp_value << (previous_diagnostic > 0.0 ? d.lp_value / previous_diagnostic : std::nan(""));
      previous_diagnostic = d.lp_value;
    }
    if (previous > 0.0)
      out.check("refinement_ratio", ratio >= band[0] && ratio <= band[1], "pam_modulus.csv",
                std::int64_t(table.size()), "ratio " + format_double(ratio));
    previous = m.lp_value;
  };

  if (snapshot_path) {
    const PAMEnsemble e = read_snapshots(ctx.config.resolve(*snapshot_path));
    evaluate(e, std::int64_t(e.points) - 1, -1, -1, snapshot_p.value_or(e.p));
    out.note("existence_regime", snapshot_p.value_or(e.p) > 4.0 ? "p>4" : "p<=4 (outside the existence hypothesis)");
  } else {
    note_regime(out, levels.front());
    for (const PAMParams& level : levels)
      evaluate(pam_solve(level, ctx.workers), level.Mx, level.Nt, level.K, level.p);
  }
  out.text("pam_modulus.csv", table.str());
  return out;
}

Outcome green_constant(Context& ctx) {
  GreenGrid grid;
  grid.s = ctx.params.reals("s", std::vector<double>{0.0, 0.01, 0.02, 0.05, 0.1, 0.2});
  grid.t = ctx.params.reals("t", std::vector<double>{0.05, 0.1, 0.2, 0.3, 0.4, 0.5});
  grid.x = ctx.params.reals("x", std::vector<double>{0.0, 0.1, 0.25, 0.5, 0.75, 0.9});
  grid.y = ctx.params.reals("y", std::vector<double>{0.05, 0.1, 0.3, 0.5, 0.8, 1.0});
  const auto K = static_cast<int>(ctx.params.count("K", 64));
  const auto points = static_cast<int>(ctx.params.count("points_per_panel", 16));
  const double tolerance = ctx.params.real("tolerance", 0.05);
  ctx.params.finish();

  Outcome out;
  try {
    const GreenConstant c = green_regularity_constant(grid, K, points, tolerance, ctx.workers);
    CsvTable table({"s", "t", "x", "y", "energy", "scale", "ratio"});
    for (const auto& u : c.tuples) table.row() << u.s << u.t << u.x << u.y << u.energy << u.scale << u.ratio;
    out.text("green_tuples.csv", table.str());
    out.note("c_fit", c.c_fit);
    out.note("c_fit_coarse", c.c_fit_coarse);
    out.note("relative_change", c.relative_change);
    out.note("points_per_panel", double(c.points_per_panel));
    out.check("quadrature_stable", c.relative_change <= tolerance, "summary.csv", -1,
              "change " + format_double(c.relative_change));
  } catch (const AccuracyError& e) {
    out.check("quadrature_converged", false, {}, -1, e.what());
  }
  return out;
}

using Command = Outcome (*)(Context&);

Command lookup(const std::string& name) {
  if (name == "net-build") return net_build;
  if (name == "seminorm") return seminorm;
  if (name == "sandwich") return sandwich;
  if (name == "blowup") return blowup;
  if (name == "sup-integrals") return sup_integrals;
  if (name == "ou-longterm") return ou_longterm;
  if (name == "martingale-sup") return martingale_sup;
  if (name == "good-lambda") return good_lambda;
  if (name == "levy") return levy;
  if (name == "kc") return kc;
  if (name == "pam-solve") return pam_solve_command;
  if (name == "pam-modulus") return pam_modulus;
  if (name == "green-constant") return green_constant;
  throw UsageError("unknown command '" + name + "'");
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

bool RunResult::passed() const noexcept { return first_failure() == nullptr; }

const Contract* RunResult::first_failure() const noexcept {
  for (const auto& c : contracts)
    if (!c.passed) return &c;
  return nullptr;
}

RunResult run(ExperimentConfig config, const RunOptions& options) {
  if (options.seed) config.seed = *options.seed;
  fs::path out_dir;
  if (options.out) out_dir = *options.out;
  else if (config.output) out_dir = config.resolve(*config.output);
  else throw UsageError("no output directory (set 'output' in the config or pass --out)");

  const Command command = lookup(config.command);
  Params params(config.params, config.command);
  Context ctx{config, params, config.seed, options.workers};
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    outcome = command(ctx);
  } catch (const ParameterError& e) {
    throw UsageError(config.command + ": " + e.what());
  } catch (const SizeError& e) {
    throw UsageError(config.command + ": " + e.what());
  } catch (const NotAdmissibleError& e) {
    throw UsageError(config.command + ": " + e.what());
  } catch (const InvalidModulusError& e) {
    throw UsageError(config.command + ": " + e.what());
  }
  const auto stop = std::chrono::steady_clock::now();

  RunResult result;
  result.command = config.command;
  result.seed = config.seed;
  result.config_hash = config.hash();
  result.out_dir = out_dir;
  result.contracts = outcome.contracts;
  result.wall_seconds = std::chrono::duration<double>(stop - start).count();

  fs::create_directories(out_dir);
  for (const auto& [name, content] : outcome.texts) {
    write_text(out_dir / name, content);
    result.outputs.push_back(name);
  }
  for (const auto& [name, writer] : outcome.binaries) {
    writer(out_dir / name);
    result.outputs.push_back(name);
  }
  if (outcome.summary.size() > 0) {
    write_text(out_dir / "summary.csv", outcome.summary.str());
    result.outputs.push_back("summary.csv");
  }
  CsvTable contracts({"name", "passed", "table", "row", "detail"});
  for (const auto& c : outcome.contracts) contracts.row() << c.name << c.passed << c.table << c.row << c.detail;
  write_text(out_dir / "contracts.csv", contracts.str());
  result.outputs.push_back("contracts.csv");

  json manifest;
  manifest["command"] = result.command;
  manifest["config_hash"] = result.config_hash;
  manifest["library_version"] = CHAINBOUND_VERSION;
  manifest["seed"] = result.seed;
  manifest["created_at"] = utc_now();
  manifest["wall_time_seconds"] = result.wall_seconds;
  manifest["outputs"] = result.outputs;
  manifest["contracts_passed"] = result.passed();
  write_text(out_dir / "manifest.json", manifest.dump(1) + "\n");
  result.outputs.push_back("manifest.json");
  return result;
}

int run_and_report(const ExperimentConfig& config, const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const RunResult r = run(config, options);
    if (const Contract* failed = r.first_failure()) {
      err << "contract failed: " << failed->name;
      if (!failed->table.empty()) {
        err << " (" << failed->table;
        if (failed->row > 0) err << " row " << failed->row;
        err << ")";
      }
      if (!failed->detail.empty()) err << ": " << failed->detail;
      err << "\n";
      return kExitContract;
    }
    out << r.command << ": ok, " << r.outputs.size() << " files in " << r.out_dir.string() << "\n";
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace chainbound::cli
