#include "rfd/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace rfd {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

}  // namespace

Config Config::parse(std::string_view text, std::string source) {
  Config cfg;
  cfg.source_ = std::move(source);
  std::string section;
  std::size_t line_no = 0;
  std::stringstream ss{std::string(text)};
  std::string raw;
  while (std::getline(ss, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(cfg.source_ + ":" + std::to_string(line_no) + ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(cfg.source_ + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(cfg.source_ + ":" + std::to_string(line_no) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (cfg.entries_.count(key)) {
      throw ConfigError(cfg.source_ + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                        "' (first set on line " + std::to_string(cfg.entries_[key].line) + ")");
    }
    cfg.entries_[key] = Entry{trim(line.substr(eq + 1)), line_no};
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

void Config::set(const std::string& key, std::string value) {
  entries_[key] = Entry{std::move(value), 0};
}

const Config::Entry& Config::entry(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
  used_.insert(key);
  return it->second;
}

void Config::fail(const std::string& key, const std::string& why) const {
  const auto it = entries_.find(key);
  const std::string where =
      it != entries_.end() && it->second.line ? ":" + std::to_string(it->second.line) : "";
  throw ConfigError(source_ + where + ": key '" + key + "': " + why);
}

std::string Config::get_string(const std::string& key) const { return entry(key).value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  double v = 0.0;
  if (!parse_number(entry(key).value, v)) fail(key, "expected a number, got '" + entry(key).value + "'");
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::size_t Config::get_count(const std::string& key) const {
  std::size_t v = 0;
  if (!parse_number(entry(key).value, v)) {
    fail(key, "expected a nonnegative integer, got '" + entry(key).value + "'");
  }
  return v;
}

std::size_t Config::get_count(const std::string& key, std::size_t fallback) const {
  return has(key) ? get_count(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  std::uint64_t v = 0;
  if (!parse_number(entry(key).value, v)) {
    fail(key, "expected a nonnegative integer, got '" + entry(key).value + "'");
  }
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = entry(key).value;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(key, "expected true/false, got '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string& key, std::vector<double> fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const std::string& item : split_list(entry(key).value)) {
    double v = 0.0;
    if (!parse_number(item, v)) fail(key, "expected a list of numbers, got item '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> Config::get_counts(const std::string& key,
                                            std::vector<std::size_t> fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::size_t> out;
  for (const std::string& item : split_list(entry(key).value)) {
    std::size_t v = 0;
    if (!parse_number(item, v)) fail(key, "expected a list of integers, got item '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& key,
                                             std::vector<std::string> fallback) const {
  if (!has(key)) return fallback;
  return split_list(entry(key).value);
}

void Config::reject_unused() const {
  std::string unknown;
  for (const auto& [key, e] : entries_) {
    if (used_.count(key)) continue;
    unknown += "\n  " + key + (e.line ? " (line " + std::to_string(e.line) + ")" : "");
  }
  if (!unknown.empty()) throw ConfigError(source_ + ": unknown keys:" + unknown);
}

}  // namespace rfd
