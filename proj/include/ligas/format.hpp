#pragma once

#include <string>

namespace ligas {

// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);
// Fixed notation with `digits` decimals ("C" locale).
std::string format_fixed(double value, int digits);

}  // namespace ligas
