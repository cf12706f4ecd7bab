#include "cli/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "chainbound/errors.hpp"
#include "chainbound/pam.hpp"

namespace chainbound::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
  throw ParseError(source + ":" + std::to_string(line) + ": " + what);
}

const char* source_name(DimensionInfo::Source s) {
  switch (s) {
    case DimensionInfo::Source::fitted: return "fitted";
    case DimensionInfo::Source::euclidean_closed_form: return "euclidean";
    case DimensionInfo::Source::carried: return "carried";
    case DimensionInfo::Source::user: return "user";
  }
  return "user";
}

DimensionInfo::Source parse_source(const std::string& s) {
  if (s == "fitted") return DimensionInfo::Source::fitted;
  if (s == "euclidean") return DimensionInfo::Source::euclidean_closed_form;
  if (s == "carried") return DimensionInfo::Source::carried;
  if (s == "user") return DimensionInfo::Source::user;
  throw ParseError("net JSON: unknown dimension source '" + s + "'");
}

}  // namespace

MetricSpace read_point_cloud(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || trim(line) != kPointCloudHeader)
    parse_fail(source, 1, "expected header '" + std::string(kPointCloudHeader) + "'");
  ++line_no;

  MetricSpace::Kind kind = MetricSpace::Kind::euclidean;
  std::vector<double> coordinates;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty()) continue;
    if (body[0] == '#') {
      const std::string_view tag = "# metric:";
      if (body.rfind(tag, 0) == 0) {
        const std::string name = trim(std::string_view(body).substr(tag.size()));
        if (name == "euclidean") kind = MetricSpace::Kind::euclidean;
        else if (name == "chebyshev") kind = MetricSpace::Kind::chebyshev;
        else if (name == "parabolic") kind = MetricSpace::Kind::parabolic;
        else if (name == "explicit") kind = MetricSpace::Kind::explicit_table;
        else parse_fail(source, line_no, "unknown metric '" + name + "'");
      }
      continue;
    }
    std::size_t fields = 0;
    const char* p = body.data();
    const char* end = body.data() + body.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t' || *p == ',')) ++p;
      if (p == end) break;
      double v = 0.0;
      const auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t' && *next != ','))
        parse_fail(source, line_no, "malformed coordinate");
      if (!std::isfinite(v)) parse_fail(source, line_no, "non-finite coordinate");
      coordinates.push_back(v);
      ++fields;
      p = next;
    }
    if (dim == 0) dim = fields;
    if (fields != dim)
      parse_fail(source, line_no, "expected " + std::to_string(dim) + " coordinates, found " + std::to_string(fields));
  }
  const std::size_t points = dim == 0 ? 0 : coordinates.size() / dim;
  if (points < 2) throw NontrivialSpaceError(source + ": a point cloud needs at least two points");
  switch (kind) {
    case MetricSpace::Kind::explicit_table:
      if (points != dim) throw ParseError(source + ": a distance matrix needs as many rows as columns");
      try {
        return MetricSpace::explicit_table(std::move(coordinates), points);
      } catch (const ParameterError& e) {
        throw ParseError(source + ": " + e.what());
      }
    case MetricSpace::Kind::chebyshev:
      return MetricSpace::chebyshev(std::move(coordinates), dim);
    case MetricSpace::Kind::parabolic:
      if (dim != 2) throw ParseError(source + ": the parabolic metric needs (t, x) rows");
      return MetricSpace::from_function(MetricSpace::Kind::parabolic, std::move(coordinates), 2,
                                        [](std::span<const double> a, std::span<const double> b) {
                                          return parabolic_metric(a[0], a[1], b[0], b[1]);
                                        });
    default:
      return MetricSpace::euclidean(std::move(coordinates), dim);
  }
}

MetricSpace load_point_cloud(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read point cloud " + path.string());
  return read_point_cloud(in, path.string());
}

json net_to_json(const ChainingNet& net) {
  json doc;
  doc["format"] = "chainbound-net v1";
  doc["points"] = net.space.size();
  doc["source_diameter"] = net.source_diameter;
  doc["depth"] = net.depth;
  doc["dims"] = {{"d", net.dims.d}, {"c", net.dims.c}, {"n2", net.dims.n2}, {"source", source_name(net.dims.source)}};
  doc["levels"] = net.levels;
  json edges = json::array();
  for (const auto& level : net.edges) {
    json pairs = json::array();
    for (const Edge& e : level) pairs.push_back({e.a, e.b});
    edges.push_back(std::move(pairs));
  }
  doc["edges"] = std::move(edges);
  doc["theta"] = net.theta;
  doc["dummy"] = net.dummy;
  return doc;
}

ChainingNet net_from_json(const json& doc, const MetricSpace& space) {
  try {
    if (doc.at("format") != "chainbound-net v1") throw ParseError("net JSON: unknown format");
    if (doc.at("points").get<std::size_t>() != space.size())
      throw ShapeError("net JSON was built on " + std::to_string(doc.at("points").get<std::size_t>()) +
                       " points, the cloud has " + std::to_string(space.size()));
    ChainingNet net{rescale(space, 1.0 / space.diameter())};
    net.source_diameter = doc.at("source_diameter").get<double>();
    net.depth = doc.at("depth").get<int>();
    const json& dims = doc.at("dims");
    net.dims.d = dims.at("d").get<double>();
    net.dims.c = dims.at("c").get<double>();
    net.dims.n2 = dims.at("n2").get<std::uint64_t>();
    net.dims.source = parse_source(dims.at("source").get<std::string>());
    net.levels = doc.at("levels").get<std::vector<std::vector<PointId>>>();
    for (const auto& level : doc.at("edges")) {
      std::vector<Edge> pairs;
      for (const auto& e : level) pairs.push_back({e.at(0).get<PointId>(), e.at(1).get<PointId>()});
      net.edges.push_back(std::move(pairs));
    }
    net.theta = doc.at("theta").get<std::vector<std::uint64_t>>();
    net.dummy = doc.at("dummy").get<PointId>();
    if (net.depth < 0 || net.levels.size() != std::size_t(net.depth) + 1 || net.edges.size() != net.levels.size())
      throw ParseError("net JSON: level count does not match depth");
    for (const auto& level : net.levels)
      for (PointId x : level)
        if (x >= space.size()) throw MembershipError("net JSON: point id " + std::to_string(x) + " out of range");
    refresh_nearest(net);
    return net;
  } catch (const json::exception& e) {
    throw ParseError(std::string("net JSON: ") + e.what());
  }
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

CsvTable::Row& CsvTable::Row::operator<<(double v) {
  cells_.push_back(format_double(v));
  return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(std::uint64_t v) {
  cells_.push_back(std::to_string(v));
  return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(std::int64_t v) {
  cells_.push_back(std::to_string(v));
  return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(bool v) {
  cells_.push_back(v ? "true" : "false");
  return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) {
    cells_.push_back(v);
    return *this;
  }
  std::string quoted = "\"";
  for (char c : v) {
    if (c == '"') quoted.push_back('"');
    quoted.push_back(c);
  }
  quoted.push_back('"');
  cells_.push_back(std::move(quoted));
  return *this;
}

CsvTable::Row CsvTable::row() {
  rows_.emplace_back();
  return Row(rows_.back());
}

std::string CsvTable::str() const {
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  emit(header_);
  for (const auto& r : rows_) {
    if (r.size() != header_.size()) throw Error("CSV row width does not match the header");
    emit(r);
  }
  return out.str();
}

}  // namespace chainbound::cli
