#pragma once

#include <string>
#include <string_view>

namespace driftlab {

// RFC 4180 quoting when needed.
std::string csv_escape(std::string_view s);

// Shortest stable text for CSV payloads: 12 significant digits, NaN as empty.
std::string format_real(double v);

}  // namespace driftlab
