#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ips {

// Flat key = value experiment configuration.  One assignment per line; blank
// lines and lines starting with '#' are skipped; keys are single tokens and
// may not repeat.  Every complaint (syntax, duplicate, missing key, bad
// number, unknown key) is a ConfigError carrying the origin name and the
// line number, so a bad experiment file points at itself.
class Config {
public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text,
                           const std::string& origin = "<config>");

  const std::string& origin() const { return origin_; }
  bool has(const std::string& key) const;
  std::vector<std::string> keys() const { return order_; }  // file order
  int line_of(const std::string& key) const;                // 1-based

  // Typed getters.  The one-argument forms throw ConfigError when the key is
  // absent; the two-argument forms return the fallback instead.  All forms
  // throw on malformed values.
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Whitespace- or comma-separated list of numbers.
  std::vector<double> get_double_list(const std::string& key) const;

  // Rejects any key outside `allowed` (ConfigError naming key and line), so
  // misspelled parameters fail loudly instead of silently using defaults.
  void expect_only(const std::vector<std::string>& allowed) const;

private:
  struct Entry {
    std::string value;
    int line = 0;
  };

  [[noreturn]] void fail(const std::string& key, const std::string& message) const;
  const Entry& entry(const std::string& key) const;

  std::string origin_;
  std::vector<std::string> order_;
  std::map<std::string, Entry> entries_;
};

}  // namespace ips
