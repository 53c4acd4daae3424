#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace zsl {

/// Flat `key = value` configuration. '#' starts a comment; blank lines are
/// ignored; later assignments override earlier ones. Getters record which
/// keys were read so callers can reject typos with require_all_used().
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, const std::string& source = "config");
  static KeyValueConfig load(const std::string& path);

  void set(const std::string& key, std::string value);
  /// Applies a "key=value" override.
  void set_assignment(std::string_view assignment);
  bool has(const std::string& key) const { return values_.contains(key); }

  std::optional<std::string> get_string(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<std::uint64_t> get_uint(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;

  /// Throws ConfigError listing every key no getter asked for.
  void require_all_used() const;

  /// Keys in sorted order, one "key = value" per line.
  std::string to_text() const;
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace zsl
