#include "ligas/format.hpp"

#include <charconv>
#include <cstdio>

namespace ligas {

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

std::string format_fixed(double value, int digits) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, digits);
  if (ec != std::errc{}) {
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    return buf;
  }
  return std::string(buf, end);
}

}  // namespace ligas
