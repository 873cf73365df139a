#pragma once

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <string>

namespace dpstat {

// Formats a double with 17 significant digits, enough to round-trip any IEEE
// binary64 value.  Every number this library writes to a report goes through
// here so that reruns produce byte-identical artifacts.
inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string format_count(std::uint64_t n) { return std::to_string(n); }

inline std::string format_bool(bool b) { return b ? "true" : "false"; }

/// RFC 4180 field quoting: quotes are doubled, and any field containing a
// comma, quote, CR or LF is wrapped in quotes.
inline std::string csv_escape(const std::string& field) {
  bool needs_quotes = false;
  for (char c : field) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quotes = true;
      break;
    }
  }
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace dpstat
