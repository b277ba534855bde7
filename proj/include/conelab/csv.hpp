#pragma once

// CSV output with 17 significant digits (exact double round-trip) and a
// locale-independent formatter, so repeated runs are byte-identical.

#include <charconv>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>

namespace conelab::csv {

inline std::string format_double(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_header(std::ostream& os, std::span<const std::string> names) {
  for (std::size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
  os << '\n';
}

inline void write_row(std::ostream& os, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << format_double(values[i]);
  os << '\n';
}

}  // namespace conelab::csv
