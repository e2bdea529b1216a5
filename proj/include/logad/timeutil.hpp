#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace logad {

/// UTC instant at second resolution.
using Instant = std::chrono::sys_seconds;

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_iso(Instant t);

/// Accepts `YYYY-MM-DD[T| ]HH:MM:SS[.frac][Z|+hh:mm|-hh:mm]`. Missing zone means UTC.
/// Fractional seconds are truncated.
std::optional<Instant> parse_iso(std::string_view text);

/// Legacy BSD timestamp `Mmm dd hh:mm:ss` (no year, no zone).
std::optional<Instant> parse_bsd(std::string_view text, int year);

/// Parses a duration such as "10m", "30min", "24h", "7d", "90s" or a bare number of minutes.
std::optional<std::chrono::seconds> parse_duration(std::string_view text);

}  // namespace logad
