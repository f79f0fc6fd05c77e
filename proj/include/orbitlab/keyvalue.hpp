#pragma once

// Plain-text stanza format shared by region files and experiment configs:
//
//   # comment
//   [region]
//   name = central
//   arc = -1 1
//
// A stanza starts at a "[section]" header; keys may repeat within a stanza.

#include <cstdlib>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "orbitlab/error.hpp"

namespace orbitlab {

struct Stanza {
  std::string section;
  std::vector<std::pair<std::string, std::string>> entries;
  int line = 0;

  /// Last value for key, or nullptr.
  const std::string* find(const std::string& key) const {
    const std::string* found = nullptr;
    for (const auto& [k, v] : entries)
      if (k == key) found = &v;
    return found;
  }

  std::vector<std::string> all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries)
      if (k == key) out.push_back(v);
    return out;
  }
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<Stanza> parse_stanzas(std::istream& in) {
  std::vector<Stanza> out;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      out.push_back({trim(line.substr(1, line.size() - 2)), {}, lineno});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (out.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside of a [section]");
    out.back().entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

inline std::vector<Stanza> parse_stanzas(const std::string& text) {
  std::istringstream in(text);
  return parse_stanzas(in);
}

/// Strict floating-point parse; accepts "inf", "-inf", "+inf".
inline double parse_double(const std::string& text) {
  const std::string s = trim(text);
  if (s == "inf" || s == "+inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ConfigError("not a number: '" + text + "'");
  return v;
}

inline long long parse_int(const std::string& text) {
  const std::string s = trim(text);
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) throw ConfigError("not an integer: '" + text + "'");
  return v;
}

/// Splits on whitespace and commas.
inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(item));
  return out;
}

}  // namespace orbitlab
