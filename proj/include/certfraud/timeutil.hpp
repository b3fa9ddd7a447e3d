#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace certfraud {

using UtcTime = std::chrono::sys_seconds;

UtcTime utc_from_civil(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                       int second = 0);

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string to_rfc3339(UtcTime t);

/// Accepts "Z" or numeric offsets and optional fractional seconds (truncated).
std::optional<UtcTime> parse_rfc3339(std::string_view text);

UtcTime utc_now();

inline constexpr std::chrono::seconds kDay{86400};

}  // namespace certfraud
