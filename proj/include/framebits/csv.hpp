#pragma once

#include <charconv>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "framebits/errors.hpp"

namespace framebits {

// Shortest round-trip decimal form; keeps repeated runs byte-identical.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    raise(ErrorKind::ParseError, context + ": bad number '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s, const std::string& context) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    raise(ErrorKind::ParseError, context + ": bad integer '" + std::string(s) + "'");
  return v;
}

inline std::optional<long long> parse_optional_int(std::string_view s, const std::string& context) {
  if (s.empty()) return std::nullopt;
  return parse_int(s, context);
}

}  // namespace framebits
