#pragma once

// Key=value run configuration: an optional plain-text config file (one
// key=value per line, '#' comments) merged with command-line flags, flags
// winning. Unknown keys are rejected per command so typos fail loudly, and
// the fully resolved set is embedded in every output file.

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "seglid/checkpoint.hpp"  // parse_double

namespace seglid {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::map<std::string, std::string> kv;

  bool has(const std::string& key) const { return kv.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { kv[key] = value; }

  std::string get_str(const std::string& key, const std::string& fallback = "") const {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  }

  std::string require_str(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw UsageError("missing required setting: " + key);
    return it->second;
  }

  long long get_int(const std::string& key, long long fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
      size_t used = 0;
      long long v = std::stoll(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw UsageError("setting " + key + " is not an integer: '" + it->second + "'");
    }
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
      size_t used = 0;
      unsigned long long v = std::stoull(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw UsageError("setting " + key + " is not an unsigned integer: '" + it->second + "'");
    }
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
      return parse_double(it->second);
    } catch (const std::exception&) {
      throw UsageError("setting " + key + " is not a number: '" + it->second + "'");
    }
  }

  // Parses config-file text; existing keys are NOT overwritten so that flags
  // (applied first) take precedence over the file.
  void merge_file_text(const std::string& text) {
    size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
      size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) {
        if (pos == text.size()) break;
        nl = text.size();
      }
      std::string line = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      auto trim = [](std::string s) {
        size_t b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return std::string();
        size_t e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw UsageError("config line " + std::to_string(line_no) + ": expected key=value, got '" + line +
                         "'");
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw UsageError("config line " + std::to_string(line_no) + ": empty key");
      if (value.empty()) throw UsageError("config line " + std::to_string(line_no) + ": empty value for '" + key + "'");
      kv.emplace(key, value);  // no overwrite: flag values win
    }
  }

  void require_keys_in(const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : kv)
      if (!allowed.count(key)) throw UsageError("unknown setting: " + key);
  }

  // One "key=value" string per entry, sorted — for embedding in outputs.
  std::vector<std::string> render() const {
    std::vector<std::string> out;
    out.reserve(kv.size());
    for (const auto& [key, value] : kv) out.push_back(key + "=" + value);
    return out;
  }
};

}  // namespace seglid
