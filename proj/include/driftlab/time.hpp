#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace driftlab {

// UTC, second resolution.
using Timestamp = std::chrono::sys_seconds;
using Days = std::chrono::days;

// Accepts "YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|+HHMM|-HH:MM|-HHMM)"; a space
// may replace the 'T'. A zone designator is mandatory. Fractional seconds are
// truncated.
std::optional<Timestamp> parse_timestamp(std::string_view text);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp t);

// "YYYY-MM-DD"
std::string format_date(std::chrono::sys_days d);

std::chrono::sys_days day_of(Timestamp t);

// Monday of the ISO-8601 week containing t.
std::chrono::sys_days iso_week_start(Timestamp t);

}  // namespace driftlab
