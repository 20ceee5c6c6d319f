#include "ips/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "ips/errors.hpp"

namespace ips {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool single_token(const std::string& s) {
  return !s.empty() &&
         std::none_of(s.begin(), s.end(),
                      [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

}  // namespace

Config Config::parse_text(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line) +
                        ": expected `key = value`, got `" + s + "`");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (!single_token(key))
      throw ConfigError(origin + ":" + std::to_string(line) + ": malformed key `" + key +
                        "`");
    auto found = cfg.entries_.find(key);
    if (found != cfg.entries_.end())
      throw ConfigError(origin + ":" + std::to_string(line) + ": duplicate key `" + key +
                        "` (first set on line " + std::to_string(found->second.line) + ")");
    cfg.entries_.emplace(key, Entry{value, line});
    cfg.order_.push_back(key);
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file `" + path + "`");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str(), path);
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

int Config::line_of(const std::string& key) const { return entry(key).line; }

const Config::Entry& Config::entry(const std::string& key) const {
  auto found = entries_.find(key);
  if (found == entries_.end())
    throw ConfigError(origin_ + ": missing required key `" + key + "`");
  return found->second;
}

void Config::fail(const std::string& key, const std::string& message) const {
  const Entry& e = entry(key);
  throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": key `" + key + "`: " +
                    message + " (value `" + e.value + "`)");
}

std::string Config::get_string(const std::string& key) const { return entry(key).value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? entry(key).value : fallback;
}

long Config::get_int(const std::string& key) const {
  const std::string& v = entry(key).value;
  try {
    std::size_t used = 0;
    long parsed = std::stol(v, &used, 10);
    if (used != v.size()) fail(key, "expected an integer");
    return parsed;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(key, "expected an integer");
  }
}

long Config::get_int(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const std::string& v = entry(key).value;
  try {
    std::size_t used = 0;
    unsigned long long parsed = std::stoull(v, &used, 10);
    if (used != v.size() || v.empty() || v[0] == '-')
      fail(key, "expected an unsigned integer");
    return static_cast<std::uint64_t>(parsed);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(key, "expected an unsigned integer");
  }
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? get_u64(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  const std::string& v = entry(key).value;
  try {
    std::size_t used = 0;
    double parsed = std::stod(v, &used);
    if (used != v.size()) fail(key, "expected a number");
    return parsed;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(key, "expected a number");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = entry(key).value;
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(key, "expected true/false/1/0");
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  std::string v = entry(key).value;
  std::replace(v.begin(), v.end(), ',', ' ');
  std::istringstream in(v);
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(token, &used));
      if (used != token.size()) fail(key, "expected numbers, got `" + token + "`");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      fail(key, "expected numbers, got `" + token + "`");
    }
  }
  if (out.empty()) fail(key, "expected at least one number");
  return out;
}

void Config::expect_only(const std::vector<std::string>& allowed) const {
  for (const std::string& key : order_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(key, "unknown key for this command");
  }
}

}  // namespace ips
