#include "zsl/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "zsl/error.hpp"
#include "zsl/text_io.hpp"

namespace zsl {

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& source) {
  KeyValueConfig cfg;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    cfg.values_[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void KeyValueConfig::set(const std::string& key, std::string value) {
  values_[key] = std::move(value);
}

void KeyValueConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || trim(assignment.substr(0, eq)).empty()) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
}

std::optional<std::string> KeyValueConfig::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  try {
    return parse_double(*s);
  } catch (const FormatError&) {
    throw ConfigError("config key '" + key + "': '" + *s + "' is not a number");
  }
}

std::optional<std::uint64_t> KeyValueConfig::get_uint(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc() || end != s->data() + s->size()) {
    throw ConfigError("config key '" + key + "': '" + *s + "' is not a nonnegative integer");
  }
  return v;
}

std::optional<bool> KeyValueConfig::get_bool(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  if (*s == "true" || *s == "1" || *s == "yes") return true;
  if (*s == "false" || *s == "0" || *s == "no") return false;
  throw ConfigError("config key '" + key + "': '" + *s + "' is not a boolean");
}

void KeyValueConfig::require_all_used() const {
  std::string unknown;
  for (const auto& [k, v] : values_) {
    if (!used_.contains(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  }
  if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
}

std::string KeyValueConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace zsl
