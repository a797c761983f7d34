#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace fracslice {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key = value text grouped into [section] blocks.  '#' starts a
/// comment.  Values are kept verbatim; typed getters parse on demand and
/// report the offending section/key in their diagnostics.  Numeric getters
/// accept plain literals and p/q fractions so ratios like 1/3 stay exact.
class Config {
 public:
  Config() = default;

  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text, const std::string& origin = "<text>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int64_t get_int(const std::string& section, const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  /// Keys the caller never read; used to reject misspelled configuration.
  std::map<std::string, std::string> entries() const;

  /// Deterministic text form (sections and keys sorted) for echoing into run records.
  std::string echo() const;

 private:
  // section -> key -> value
  std::map<std::string, std::map<std::string, std::string>> data_;
};

double parse_number(const std::string& text);  // accepts "0.25" and "1/4"

}  // namespace fracslice
