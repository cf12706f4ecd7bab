#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chainbound/chaining.hpp"
#include "chainbound/metric.hpp"

namespace chainbound::cli {

using json = nlohmann::json;

inline constexpr std::string_view kPointCloudHeader = "# chainbound-pointcloud v1";

// First line is the header; an optional "# metric: euclidean|chebyshev|parabolic|explicit" may
// follow. With "explicit" the rows form a square distance matrix. Other '#' lines and blank lines are skipped. Coordinates are separated by blanks or commas.
// Throws ParseError with the line number, NontrivialSpaceError below two points.
MetricSpace read_point_cloud(std::istream& in, const std::string& source = "<stream>");
MetricSpace load_point_cloud(const std::filesystem::path& path);

json net_to_json(const ChainingNet& net);
// `space` is the cloud the net was built on (any scale).
ChainingNet net_from_json(const json& doc, const MetricSpace& space);

// Shortest representation that round-trips; "nan", "inf", "-inf" otherwise.
std::string format_double(double value);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(double v);
    Row& operator<<(std::uint64_t v);
    Row& operator<<(std::int64_t v);
    Row& operator<<(int v) { return *this << static_cast<std::int64_t>(v); }
    Row& operator<<(unsigned v) { return *this << static_cast<std::uint64_t>(v); }
    Row& operator<<(bool v);
    Row& operator<<(const std::string& v);
    Row& operator<<(const char* v) { return *this << std::string(v); }

   private:
    friend class CsvTable;
    explicit Row(std::vector<std::string>& cells) : cells_(cells) {}
    std::vector<std::string>& cells_;
  };

  // Cells are appended with <<; the row must end up with one cell per column.
  Row row();
  std::size_t size() const noexcept { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace chainbound::cli
