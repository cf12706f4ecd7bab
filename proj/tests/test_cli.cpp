#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chainbound/errors.hpp"
#include "chainbound/metric.hpp"
#include "cli/config.hpp"
#include "cli/fields.hpp"
#include "cli/io.hpp"
#include "cli/run.hpp"
#include "support/fixtures.hpp"

using namespace chainbound;
using namespace chainbound::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = CHAINBOUND_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("chainbound_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

MetricSpace cloud_from(const std::string& text) {
  std::istringstream in(text);
  return read_point_cloud(in, "cloud");
}

struct Ran {
  int code;
  std::string out;
  std::string err;
};

Ran run_text(const std::string& config_text, const fs::path& out_dir, unsigned workers = 1) {
  std::ostringstream out, err;
  RunOptions options;
  options.out = out_dir;
  options.workers = Workers{workers};
  int code;
  try {
    code = run_and_report(parse_config(config_text, kFixtures), options, out, err);
  } catch (const UsageError& e) {
    err << e.what();
    code = kExitUsage;
  }
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Toml, TablesArraysAndScalars) {
  const json doc = parse_toml(R"(
# experiment
command = "kc"   # trailing comment
seed = 42

[params]
alpha = 0.5
beta = [0.25,
        0.35,]  # multi-line
grid = 1_025
name = 'literal\path'
quoted = "a\"bé"
flag = true
nested = { a = 1, b = [1, 2] }
big = 1e5
neg = -3
[params.sub]
x = -inf
)");
  EXPECT_EQ(doc["command"], "kc");
  EXPECT_TRUE(doc["seed"].is_number_integer());
  EXPECT_EQ(doc["seed"], 42);
  EXPECT_TRUE(doc["params"]["alpha"].is_number_float());
  EXPECT_EQ(doc["params"]["beta"].size(), 2u);
  EXPECT_EQ(doc["params"]["grid"], 1025);
  EXPECT_EQ(doc["params"]["name"], "literal\\path");
  EXPECT_EQ(doc["params"]["quoted"], "a\"b\xC3\xA9");
  EXPECT_EQ(doc["params"]["flag"], true);
  EXPECT_EQ(doc["params"]["nested"]["b"][1], 2);
  EXPECT_TRUE(doc["params"]["big"].is_number_float());
  EXPECT_EQ(doc["params"]["neg"], -3);
  EXPECT_TRUE(std::isinf(doc["params"]["sub"]["x"].get<double>()));
}

TEST(Toml, ErrorsCarryLineNumbers) {
  try {
    parse_toml("a = 1\nb = [1, 2\nc = 3\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_toml("a = 1\na = 2\n"), ParseError);
  EXPECT_THROW(parse_toml("a = 1 2\n"), ParseError);
  EXPECT_THROW(parse_toml("a = \"open\n"), ParseError);
  EXPECT_THROW(parse_toml("= 4\n"), ParseError);
}

TEST(Config, DefaultsAndValidation) {
  const auto c = parse_config("command = \"levy\"\n");
  EXPECT_EQ(c.seed, 0u);
  EXPECT_TRUE(c.params.empty());
  EXPECT_THROW(parse_config("command = \"levy\"\nseed = \"seven\"\n"), UsageError);
  EXPECT_THROW(parse_config("command = \"levy\"\nseed = -1\n"), UsageError);
  EXPECT_THROW(parse_config("command = \"levy\"\nseed = 1.5\n"), UsageError);
  EXPECT_THROW(parse_config("command = \"fly\"\n"), UsageError);
  EXPECT_THROW(parse_config("seed = 1\n"), UsageError);
  EXPECT_THROW(parse_config("command = \"levy\"\ncolour = 1\n"), UsageError);
  EXPECT_THROW(parse_config("command = \"levy\"\nparams = 3\n"), UsageError);
  EXPECT_THROW(parse_config("{\"command\": \"levy\", "), UsageError);
}

TEST(Config, HashIgnoresFormatAndKeyOrder) {
  const auto toml = parse_config("seed = 3\ncommand = \"kc\"\n[params]\np = 8\nalpha = 0.5\n");
  const auto json_config = parse_config(R"({"command": "kc", "params": {"alpha": 0.5, "p": 8}, "seed": 3})");
  EXPECT_EQ(toml.hash(), json_config.hash());
  EXPECT_EQ(toml.hash().size(), 16u);
  const auto other = parse_config(R"({"command": "kc", "params": {"alpha": 0.5, "p": 8}, "seed": 4})");
  EXPECT_NE(toml.hash(), other.hash());
}

TEST(Params, TypedAccessAndUnknownKeys) {
  const json object = {{"n", 4}, {"x", 2}, {"name", "a"}, {"list", {1, 2.5}}, {"extra", true}};
  Params p(object, "cmd");
  EXPECT_EQ(p.count("n"), 4u);
  EXPECT_DOUBLE_EQ(p.real("x"), 2.0);
  EXPECT_EQ(p.text("name"), "a");
  EXPECT_EQ(p.reals("list").size(), 2u);
  EXPECT_EQ(p.real("missing", 7.0), 7.0);
  EXPECT_THROW(p.text("n"), UsageError);
  EXPECT_THROW(p.counts("list"), UsageError);
  EXPECT_THROW(p.real("absent"), UsageError);
  EXPECT_THROW(p.finish(), UsageError);
  EXPECT_TRUE(p.flag("extra"));
  EXPECT_NO_THROW(p.finish());
}

TEST(PointCloud, TwoPointsHaveCoordinateDiameter) {
  const auto space = cloud_from("# chainbound-pointcloud v1\n0 0\n3, 4\n");
  EXPECT_EQ(space.size(), 2u);
  EXPECT_DOUBLE_EQ(space.diameter(), 5.0);
}

TEST(PointCloud, NanIsParseErrorAtLine) {
  try {
    cloud_from("# chainbound-pointcloud v1\n0 0\n1 nan\n2 2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("cloud:3:"), std::string::npos) << e.what();
  }
}

TEST(PointCloud, Rejections) {
  EXPECT_THROW(cloud_from("0 0\n1 1\n"), ParseError);
  EXPECT_THROW(cloud_from("# chainbound-pointcloud v1\n0 0\n"), NontrivialSpaceError);
  EXPECT_THROW(cloud_from("# chainbound-pointcloud v1\n"), NontrivialSpaceError);
  EXPECT_THROW(cloud_from("# chainbound-pointcloud v1\n0 0\n1 1 1\n"), ParseError);
  EXPECT_THROW(cloud_from("# chainbound-pointcloud v1\n0 0\n1 x\n"), ParseError);
  EXPECT_THROW(cloud_from("# chainbound-pointcloud v1\n# metric: taxicab\n0\n1\n"), ParseError);
}

TEST(PointCloud, MetricTag) {
  const auto cheb = cloud_from("# chainbound-pointcloud v1\n# metric: chebyshev\n0 0\n3 4\n");
  EXPECT_DOUBLE_EQ(cheb.diameter(), 4.0);
  const auto para = cloud_from("# chainbound-pointcloud v1\n# metric: parabolic\n0 0.5\n0.25 0.5\n");
  EXPECT_EQ(para.kind(), MetricSpace::Kind::parabolic);
  EXPECT_DOUBLE_EQ(para.diameter(), 0.5);
}

TEST(PointCloud, ExplicitDistanceMatrix) {
  const auto table = cloud_from("# chainbound-pointcloud v1\n# metric: explicit\n0, 1, 2\n1, 0, 1\n2, 1, 0\n");
  EXPECT_EQ(table.kind(), MetricSpace::Kind::explicit_table);
  EXPECT_EQ(table.size(), 3u);
  EXPECT_DOUBLE_EQ(table.distance(0, 2), 2.0);
  EXPECT_THROW(cloud_from("# chainbound-pointcloud v1\n# metric: explicit\n0 1 2\n1 0 1\n"), ParseError);
  EXPECT_THROW(cloud_from("# chainbound-pointcloud v1\n# metric: explicit\n0 1\n2 0\n"), ParseError);
  EXPECT_THROW(cloud_from("# chainbound-pointcloud v1\n# metric: explicit\n0 1 5\n1 0 1\n5 1 0\n"), ParseError);
}

TEST(PointCloud, BundledFixtureLoads) {
  const auto space = load_point_cloud(kFixtures / "unit_square_500.txt");
  const auto reference = fixtures::uniform_cloud(500, 2, 2);
  ASSERT_EQ(space.size(), 500u);
  for (PointId i = 0; i < 500; ++i) {
    EXPECT_EQ(space.coordinates(i)[0], reference.coordinates(i)[0]);
    EXPECT_EQ(space.coordinates(i)[1], reference.coordinates(i)[1]);
  }
}

TEST(PointCloud, TenThousandPointsLoadAndFit) {
  const auto path = fs::temp_directory_path() / "chainbound_cloud_10k.txt";
  {
    const auto cloud = fixtures::uniform_cloud(10000, 2, 77);
    std::ofstream out(path);
    out << kPointCloudHeader << "\n";
    for (PointId i = 0; i < cloud.size(); ++i)
      out << format_double(cloud.coordinates(i)[0]) << " " << format_double(cloud.coordinates(i)[1]) << "\n";
  }
  const auto start = std::chrono::steady_clock::now();
  const auto space = load_point_cloud(path);
  const auto fit = fit_dimension(space, 8);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(space.size(), 10000u);
  EXPECT_GT(fit.info.d, 1.0);
  EXPECT_LT(fit.info.d, 3.0);
  EXPECT_LT(seconds, 60.0);
  fs::remove(path);
}

TEST(NetJson, RoundTrip) {
  const auto cloud = fixtures::uniform_cloud(120, 2, 5);
  const auto net = build_net(cloud, euclidean_dimension_info(2));
  const auto back = net_from_json(json::parse(net_to_json(net).dump()), cloud);
  EXPECT_EQ(back.depth, net.depth);
  EXPECT_EQ(back.levels, net.levels);
  EXPECT_EQ(back.edges, net.edges);
  EXPECT_EQ(back.theta, net.theta);
  EXPECT_EQ(back.dummy, net.dummy);
  EXPECT_EQ(back.nearest, net.nearest);
  EXPECT_EQ(back.dims.n2, net.dims.n2);
  EXPECT_TRUE(verify_net(back).all_passed());
  EXPECT_THROW(net_from_json(net_to_json(net), fixtures::uniform_cloud(121, 2, 5)), ShapeError);
  EXPECT_THROW(net_from_json(json{{"format", "other"}}, cloud), ParseError);
}

TEST(Csv, ShortestRoundTripAndQuoting) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  CsvTable t({"a", "b"});
  t.row() << std::string("x,y") << 2.0;
  t.row() << std::string("q\"") << true;
  EXPECT_EQ(t.str(), "a,b\n\"x,y\",2\n\"q\"\"\",true\n");
}

TEST(Weights, ParseCatalog) {
  EXPECT_EQ(parse_modulus("power(0.3)").describe(), Modulus::power(0.3).describe());
  EXPECT_EQ(parse_modulus(" log_damped(1, 1, power(0.5)) ").describe(),
            Modulus::log_damped(1, 1, Modulus::power(0.5)).describe());
  const Modulus w = Modulus::log_pd(2, 1, Modulus::scaled(3, Modulus::power(0.25)));
  EXPECT_EQ(parse_modulus(w.describe()).describe(), w.describe());
  EXPECT_THROW(parse_modulus("power(0.3"), UsageError);
  EXPECT_THROW(parse_modulus("wiggle(1)"), UsageError);
  EXPECT_THROW(parse_modulus("power(0.3) x"), UsageError);
}

TEST(Fields, DeterministicPerIndexAndKind) {
  const auto cloud = fixtures::uniform_cloud(50, 2, 3);
  for (const std::string kind : {"lipschitz", "sqrt", "brownian"}) {
    const auto a = make_field(cloud, kind, 9, 2);
    const auto b = make_field(cloud, kind, 9, 2);
    const auto c = make_field(cloud, kind, 9, 3);
    EXPECT_EQ(a.values(), b.values());
    EXPECT_NE(a.values(), c.values());
  }
  EXPECT_THROW(make_field(cloud, "smooth", 0, 0), UsageError);
}

TEST(Fields, BrownianIncrementsFollowFirstCoordinate) {
  const auto grid = fixtures::unit_grid(2049);
  const auto f = make_field(grid, "brownian", 4, 0);
  double quadratic = 0.0;
  for (PointId i = 1; i < grid.size(); ++i) quadratic += std::pow(f.values()[i] - f.values()[i - 1], 2);
  EXPECT_NEAR(quadratic, 1.0, 0.15);
}

TEST(Run, NetBuildOnBundledCloud) {
  const auto dir = scratch("net_build");
  const Ran r = run_text("command = \"net-build\"\n[params]\ninput = \"unit_square_500.txt\"\n", dir);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* name : {"net.json", "levels.csv", "summary.csv", "contracts.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["command"], "net-build");
  EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 16u);
  EXPECT_TRUE(manifest["contracts_passed"].get<bool>());
  const auto net = net_from_json(json::parse(slurp(dir / "net.json")), load_point_cloud(kFixtures / "unit_square_500.txt"));
  EXPECT_TRUE(verify_net(net).all_passed());
}

TEST(Run, MalformedConfigWritesNothing) {
  const auto dir = scratch("malformed");
  const Ran r = run_text("command = \"net-build\"\nseed = \"abc\"\n", dir);
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_FALSE(fs::exists(dir));
  const Ran unknown = run_text("command = \"kc\"\n[params]\nalhpa = 0.5\n", dir);
  EXPECT_EQ(unknown.code, kExitUsage);
  EXPECT_NE(unknown.err.find("alhpa"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir));
  const Ran invalid = run_text("command = \"pam-solve\"\n[params]\nK = 80\nMx = 64\n", dir);
  EXPECT_EQ(invalid.code, kExitUsage);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Run, SandwichWithAdversarialNetFails) {
  const auto dir = scratch("adversarial");
  const Ran r = run_text(R"toml(command = "sandwich"
[params]
input = "unit_square_500.txt"
net = "adversarial_net.json"
count = 1
fields = ["lipschitz"]
weights = ["power(0.5)"]
)toml",
                         dir);
  EXPECT_EQ(r.code, kExitContract);
  EXPECT_NE(r.err.find("net:covering"), std::string::npos) << r.err;
  const std::string contracts = slurp(dir / "contracts.csv");
  EXPECT_NE(contracts.find("net:covering,false"), std::string::npos);
  EXPECT_FALSE(json::parse(slurp(dir / "manifest.json"))["contracts_passed"].get<bool>());
}

TEST(Run, SandwichOnBuiltNetPasses) {
  const auto dir = scratch("sandwich");
  const Ran r = run_text(R"(command = "sandwich"
seed = 5
[params]
input = "unit_square_500.txt"
count = 2
)",
                         dir);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string table = slurp(dir / "sandwich.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 1 + 3 * 2 * 3);
}

TEST(Run, WorkerCountDoesNotChangeTables) {
  const std::string config = R"(command = "sup-integrals"
seed = 11
[params]
n_list = [4, 16]
replicates = 64
steps = 128
)";
  const auto one = scratch("workers_1");
  const auto three = scratch("workers_3");
  ASSERT_EQ(run_text(config, one, 1).code, kExitOk);
  ASSERT_EQ(run_text(config, three, 3).code, kExitOk);
  EXPECT_EQ(slurp(one / "sup_integrals.csv"), slurp(three / "sup_integrals.csv"));
  EXPECT_EQ(slurp(one / "summary.csv"), slurp(three / "summary.csv"));
}

TEST(Run, PamSolveThenModulusFromSnapshots) {
  const auto solve_dir = scratch("pam_solve");
  const Ran solved = run_text(R"(command = "pam-solve"
seed = 2
[params]
K = 15
Mx = 16
Nt = 256
slices = 16
replicates = 8
)",
                              solve_dir);
  ASSERT_EQ(solved.code, kExitOk) << solved.err;
  EXPECT_TRUE(fs::exists(solve_dir / "snapshots.bin"));
  const json manifest = json::parse(slurp(solve_dir / "snapshots.json"));
  EXPECT_EQ(manifest["points"], 17);

  const auto modulus_dir = scratch("pam_modulus");
  const Ran modulus = run_text("command = \"pam-modulus\"\n[params]\nsnapshots = \"" +
                                   (solve_dir / "snapshots.bin").string() + "\"\n",
                               modulus_dir);
  ASSERT_EQ(modulus.code, kExitOk) << modulus.err;
  EXPECT_NE(slurp(modulus_dir / "pam_modulus.csv").find("16,-1,-1,16,"), std::string::npos);
}

TEST(Run, PamModulusRefinementRows) {
  const auto dir = scratch("pam_refine");
  const Ran r = run_text(R"(command = "pam-modulus"
[params]
replicates = 4
refinements = [[8, 64], [16, 256]]
diagnostic_exponent = 0.35
)",
                         dir);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string table = slurp(dir / "pam_modulus.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
  EXPECT_NE(table.find("diagnostic_ratio"), std::string::npos);
}

TEST(Run, GreenConstantAccuracyFailureIsContract) {
  const auto ok_dir = scratch("green_ok");
  const Ran ok = run_text(R"(command = "green-constant"
[params]
s = [0.0, 0.1]
t = [0.2]
x = [0.3]
y = [0.3, 0.6]
K = 16
)",
                          ok_dir);
  EXPECT_EQ(ok.code, kExitOk) << ok.err;
  const auto bad_dir = scratch("green_bad");
  const Ran bad = run_text(R"(command = "green-constant"
[params]
s = [0.0]
t = [0.1]
x = [0.3]
y = [0.7]
K = 64
points_per_panel = 2
tolerance = 1e-12
)",
                           bad_dir);
  EXPECT_EQ(bad.code, kExitContract);
  EXPECT_NE(bad.err.find("quadrature"), std::string::npos);
}

TEST(Run, StochasticCommandsSmoke) {
  const std::pair<const char*, const char*> configs[] = {
      {"ou", "command = \"ou-longterm\"\n[params]\nhorizons = [1, 4]\nreplicates = 32\n"},
      {"mart", "command = \"martingale-sup\"\n[params]\nn = [4]\nsteps = 64\nreplicates = 32\n"},
      {"good", "command = \"good-lambda\"\n[params]\nlambdas = [0.5, 1.0]\nreplicates = 500\nsteps = 64\n"},
      {"kc", "command = \"kc\"\n[params]\ngrid = 65\nreplicates = 32\n"},
      {"levy", "command = \"levy\"\n[params]\nsteps = 4096\nh_list = [0.0625]\nreplicates = 4\nweighted_points = 257\n"},
      {"blowup", "command = \"blowup\"\n[params]\ninput = \"unit_square_500.txt\"\ncount = 1\ngrid = 50\n"},
      {"seminorm", "command = \"seminorm\"\n[params]\ninput = \"unit_square_500.txt\"\nembedded = true\n"},
  };
  for (const auto& [name, text] : configs) {
    const auto dir = scratch(std::string("smoke_") + name);
    const Ran r = run_text(text, dir);
    EXPECT_TRUE(r.code == kExitOk || r.code == kExitContract) << name << ": " << r.err;
    EXPECT_TRUE(fs::exists(dir / "manifest.json")) << name;
    EXPECT_TRUE(fs::exists(dir / "contracts.csv")) << name;
  }
}

TEST(Executable, ExitCodes) {
  const auto dir = scratch("exe");
  fs::create_directories(dir);
  const auto bad = dir / "bad.toml";
  std::ofstream(bad) << "command = \"kc\"\nseed = \"x\"\n";
  const std::string exe = CHAINBOUND_CLI_PATH;
  int status = std::system((exe + " --config " + bad.string() + " --out " + (dir / "o").string() + " 2>/dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(status), kExitUsage);
  EXPECT_FALSE(fs::exists(dir / "o"));
  status = std::system((exe + " --bogus 2>/dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(status), kExitUsage);
  const auto good = dir / "good.json";
  std::ofstream(good) << R"({"command": "net-build", "params": {"input": ")" << (kFixtures / "unit_square_500.txt").string()
                      << R"("}})";
  status = std::system((exe + " --config " + good.string() + " --out " + (dir / "o").string() + " >/dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(status), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "o" / "net.json"));
}
