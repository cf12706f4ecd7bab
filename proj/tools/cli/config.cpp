#include "cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "chainbound/errors.hpp"

namespace chainbound::cli {

namespace {

class TomlReader {
 public:
  explicit TomlReader(std::string_view text) : text_(text) {}

  json document() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (done()) break;
      if (peek() == '[') {
        table = &open_table(root);
      } else {
        key_value(*table);
      }
      end_of_line();
    }
    return root;
  }

 private:
  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }

  char next() {
    const char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("config line " + std::to_string(line_) + ": " + what);
  }

  void skip_spaces() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#')
      while (!done() && peek() != '\n') ++pos_;
  }

  void skip_blank_lines() {
    while (true) {
      skip_spaces();
      skip_comment();
      if (done()) return;
      if (peek() == '\n' || peek() == '\r') {
        next();
        continue;
      }
      return;
    }
  }

  // Inside arrays: spaces, comments and newlines are all insignificant.
  void skip_layout() { skip_blank_lines(); }

  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (done()) return;
    if (peek() == '\r') next();
    if (done()) return;
    if (peek() != '\n') fail(std::string("unexpected '") + peek() + "'");
    next();
  }

  json& open_table(json& root) {
    next();
    skip_spaces();
    std::vector<std::string> path = dotted_key();
    skip_spaces();
    if (peek() != ']') fail("expected ']' after table name");
    next();
    json* table = &root;
    for (const auto& part : path) {
      json& child = (*table)[part];
      if (child.is_null()) child = json::object();
      if (!child.is_object()) fail("'" + part + "' is not a table");
      table = &child;
    }
    return *table;
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{simple_key()};
    while (true) {
      skip_spaces();
      if (peek() != '.') break;
      next();
      skip_spaces();
      parts.push_back(simple_key());
    }
    return parts;
  }

  std::string simple_key() {
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    const std::size_t start = pos_;
    while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  void key_value(json& table) {
    const std::vector<std::string> path = dotted_key();
    skip_spaces();
    if (peek() != '=') fail("expected '=' after key");
    next();
    skip_spaces();
    json* target = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      json& child = (*target)[path[i]];
      if (child.is_null()) child = json::object();
      if (!child.is_object()) fail("'" + path[i] + "' is not a table");
      target = &child;
    }
    if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*target)[path.back()] = value();
  }

  json value() {
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') return inline_table();
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return number();
  }

  std::string basic_string() {
    next();
    std::string out;
    while (true) {
      if (done() || peek() == '\n') fail("unterminated string");
      const char c = next();
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (done()) fail("unterminated escape");
      switch (const char e = next()) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'u': {
          if (pos_ + 4 > text_.size()) fail("short \\u escape");
          unsigned code = 0;
          const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + pos_ + 4, code, 16);
          if (ec != std::errc() || ptr != text_.data() + pos_ + 4) fail("bad \\u escape");
          pos_ += 4;
          if (code < 0x80) {
            out.push_back(static_cast<char>(code));
          } else if (code < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (code >> 6)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
          } else {
            out.push_back(static_cast<char>(0xE0 | (code >> 12)));
            out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
          }
          break;
        }
        default:
          fail(std::string("unknown escape \\") + e);
      }
    }
  }

  std::string literal_string() {
    next();
    const std::size_t start = pos_;
    while (!done() && peek() != '\'' && peek() != '\n') ++pos_;
    if (peek() != '\'') fail("unterminated string");
    std::string out(text_.substr(start, pos_ - start));
    next();
    return out;
  }

  json array() {
    next();
    json out = json::array();
    while (true) {
      skip_layout();
      if (done()) fail("unterminated array");
      if (peek() == ']') {
        next();
        return out;
      }
      out.push_back(value());
      skip_layout();
      if (peek() == ',') {
        next();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  json inline_table() {
    next();
    json out = json::object();
    skip_spaces();
    if (peek() == '}') {
      next();
      return out;
    }
    while (true) {
      skip_spaces();
      key_value(out);
      skip_spaces();
      if (peek() == ',') {
        next();
        continue;
      }
      if (peek() == '}') {
        next();
        return out;
      }
      fail("expected ',' or '}' in inline table");
    }
  }

  json number() {
    const std::size_t start = pos_;
    while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                       peek() == '.' || peek() == '_'))
      ++pos_;
    std::string token(text_.substr(start, pos_ - start));
    if (token.empty()) fail("expected a value");
    token.erase(std::remove(token.begin(), token.end(), '_'), token.end());
    std::string body = token;
    bool negative = false;
    if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
      negative = body[0] == '-';
      body.erase(0, 1);
    }
    if (body == "inf") return negative ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    if (body == "nan") return std::numeric_limits<double>::quiet_NaN();
    const bool is_float = body.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      std::int64_t v = 0;
      const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
      if (ec != std::errc() || ptr != body.data() + body.size()) fail("bad value '" + token + "'");
      return negative ? -v : v;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec != std::errc() || ptr != body.data() + body.size()) fail("bad value '" + token + "'");
    return negative ? -v : v;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

std::string describe_type(const json& v) {
  if (v.is_string()) return "string";
  if (v.is_boolean()) return "boolean";
  if (v.is_number_float()) return "float";
  if (v.is_number()) return "integer";
  if (v.is_array()) return "array";
  if (v.is_object()) return "table";
  return "null";
}

}  // namespace

json parse_toml(std::string_view text) { return TomlReader(text).document(); }

std::string ExperimentConfig::canonical() const {
  json doc = json::object();
  doc["command"] = command;
  doc["params"] = params;
  doc["seed"] = seed;
  return doc.dump();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path ExperimentConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  const auto first = text.find_first_not_of(" \t\r\n");
  json doc;
  if (first != std::string_view::npos && text[first] == '{') {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
  } else {
    try {
      doc = parse_toml(text);
    } catch (const ParseError& e) {
      throw UsageError(e.what());
    }
  }
  if (!doc.is_object()) throw UsageError("config must be a table");

  ExperimentConfig config;
  config.base_dir = base_dir;
  for (const auto& [key, value] : doc.items()) {
    if (key == "command") {
      if (!value.is_string()) throw UsageError("config 'command' must be a string");
      config.command = value.get<std::string>();
    } else if (key == "seed") {
      if (value.is_number_unsigned()) {
        config.seed = value.get<std::uint64_t>();
      } else if (value.is_number_integer() && value.get<std::int64_t>() >= 0) {
        config.seed = static_cast<std::uint64_t>(value.get<std::int64_t>());
      } else {
        throw UsageError("config 'seed' must be a non-negative integer, got " + describe_type(value));
      }
    } else if (key == "output") {
      if (!value.is_string()) throw UsageError("config 'output' must be a string");
      config.output = value.get<std::string>();
    } else if (key == "params") {
      if (!value.is_object()) throw UsageError("config 'params' must be a table");
      config.params = value;
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
  if (config.command.empty()) throw UsageError("config has no 'command'");
  if (std::find(std::begin(kCommands), std::end(kCommands), config.command) == std::end(kCommands))
    throw UsageError("unknown command '" + config.command + "'");
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

Params::Params(const json& object, std::string command) : object_(object), command_(std::move(command)) {}

bool Params::has(const std::string& key) const { return object_.is_object() && object_.contains(key); }

const json* Params::lookup(const std::string& key) {
  seen_.insert(key);
  if (!has(key)) return nullptr;
  return &object_.at(key);
}

void Params::fail(const std::string& key, const char* expected) const {
  throw UsageError(command_ + ": param '" + key + "' must be " + expected);
}

double Params::real(const std::string& key, std::optional<double> fallback) {
  const json* v = lookup(key);
  if (v == nullptr) {
    if (!fallback) fail(key, "given (a number)");
    return *fallback;
  }
  if (!v->is_number()) fail(key, "a number");
  return v->get<double>();
}

std::int64_t Params::integer(const std::string& key, std::optional<std::int64_t> fallback) {
  const json* v = lookup(key);
  if (v == nullptr) {
    if (!fallback) fail(key, "given (an integer)");
    return *fallback;
  }
  if (!v->is_number_integer()) fail(key, "an integer");
  return v->get<std::int64_t>();
}

std::uint64_t Params::count(const std::string& key, std::optional<std::uint64_t> fallback) {
  const json* v = lookup(key);
  if (v == nullptr) {
    if (!fallback) fail(key, "given (a non-negative integer)");
    return *fallback;
  }
  if (v->is_number_unsigned()) return v->get<std::uint64_t>();
  if (!v->is_number_integer() || v->get<std::int64_t>() < 0) fail(key, "a non-negative integer");
  return static_cast<std::uint64_t>(v->get<std::int64_t>());
}

bool Params::flag(const std::string& key, std::optional<bool> fallback) {
  const json* v = lookup(key);
  if (v == nullptr) {
    if (!fallback) fail(key, "given (a boolean)");
    return *fallback;
  }
  if (!v->is_boolean()) fail(key, "a boolean");
  return v->get<bool>();
}

std::string Params::text(const std::string& key, std::optional<std::string> fallback) {
  const json* v = lookup(key);
  if (v == nullptr) {
    if (!fallback) fail(key, "given (a string)");
    return *fallback;
  }
  if (!v->is_string()) fail(key, "a string");
  return v->get<std::string>();
}

std::optional<std::string> Params::optional_text(const std::string& key) {
  if (!has(key)) {
    seen_.insert(key);
    return std::nullopt;
  }
  return text(key);
}

std::vector<double> Params::reals(const std::string& key, std::optional<std::vector<double>> fallback) {
  const json* v = lookup(key);
  if (v == nullptr) {
    if (!fallback) fail(key, "given (an array of numbers)");
    return *fallback;
  }
  if (!v->is_array()) fail(key, "an array of numbers");
  std::vector<double> out;
  for (const auto& item : *v) {
    if (!item.is_number()) fail(key, "an array of numbers");
    out.push_back(item.get<double>());
  }
  return out;
}

std::vector<std::uint64_t> Params::counts(const std::string& key, std::optional<std::vector<std::uint64_t>> fallback) {
  const json* v = lookup(key);
  if (v == nullptr) {
    if (!fallback) fail(key, "given (an array of non-negative integers)");
    return *fallback;
  }
  if (!v->is_array()) fail(key, "an array of non-negative integers");
  std::vector<std::uint64_t> out;
  for (const auto& item : *v) {
    if (item.is_number_unsigned()) {
      out.push_back(item.get<std::uint64_t>());
    } else if (item.is_number_integer() && item.get<std::int64_t>() >= 0) {
      out.push_back(static_cast<std::uint64_t>(item.get<std::int64_t>()));
    } else {
      fail(key, "an array of non-negative integers");
    }
  }
  return out;
}

std::vector<std::string> Params::texts(const std::string& key, std::optional<std::vector<std::string>> fallback) {
  const json* v = lookup(key);
  if (v == nullptr) {
    if (!fallback) fail(key, "given (an array of strings)");
    return *fallback;
  }
  if (!v->is_array()) fail(key, "an array of strings");
  std::vector<std::string> out;
  for (const auto& item : *v) {
    if (!item.is_string()) fail(key, "an array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

const json* Params::raw(const std::string& key) { return lookup(key); }

void Params::finish() const {
  if (!object_.is_object()) return;
  for (const auto& [key, value] : object_.items())
    if (!seen_.count(key)) throw UsageError(command_ + ": unknown param '" + key + "'");
}

}  // namespace chainbound::cli
