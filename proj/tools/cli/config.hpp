#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace chainbound::cli {

using json = nlohmann::json;

inline constexpr std::string_view kCommands[] = {
    "net-build",   "seminorm",        "sandwich",    "blowup", "sup-integrals", "ou-longterm",   "martingale-sup",
    "good-lambda", "levy",            "kc",          "pam-solve", "pam-modulus", "green-constant"};

struct ExperimentConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::optional<std::string> output;
  json params = json::object();
  // Directory of the config file; relative input paths resolve against it.
  std::filesystem::path base_dir;

  // {"command", "params", "seed"} dumped with sorted keys.
  std::string canonical() const;
  // FNV-1a 64 of canonical(), as 16 hex digits.
  std::string hash() const;
  std::filesystem::path resolve(const std::string& path) const;
};

// TOML subset: tables, dotted headers, key = value with strings, integers, floats,
// booleans, arrays and inline tables. Throws ParseError with the line number.
json parse_toml(std::string_view text);

// JSON when the first non-blank character is '{', TOML otherwise. Schema violations
// (unknown command, non-integer seed, non-table params) throw UsageError.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Typed view of a command's params. Every getter throws UsageError on a type mismatch;
// finish() rejects keys no getter asked for.
class Params {
 public:
  explicit Params(const json& object, std::string command);

  bool has(const std::string& key) const;
  double real(const std::string& key, std::optional<double> fallback = std::nullopt);
  std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt);
  std::uint64_t count(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt);
  bool flag(const std::string& key, std::optional<bool> fallback = std::nullopt);
  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt);
  std::vector<double> reals(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt);
  std::vector<std::uint64_t> counts(const std::string& key,
                                    std::optional<std::vector<std::uint64_t>> fallback = std::nullopt);
  std::vector<std::string> texts(const std::string& key, std::optional<std::vector<std::string>> fallback = std::nullopt);
  std::optional<std::string> optional_text(const std::string& key);
  const json* raw(const std::string& key);

  void finish() const;

 private:
  const json* lookup(const std::string& key);
  [[noreturn]] void fail(const std::string& key, const char* expected) const;

  const json& object_;
  std::string command_;
  std::set<std::string> seen_;
};

}  // namespace chainbound::cli
