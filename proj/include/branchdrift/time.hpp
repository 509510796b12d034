#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace branchdrift {

/// UTC instant with millisecond precision.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

struct ParsedTimestamp {
  Timestamp instant;
  bool had_offset = true;  // false when the literal carried no zone designator
};

/// Parses ISO-8601 date-times such as `2012-08-31T10:00:00+02:00`,
/// `2012-08-31T08:00:00.123Z` or `2012-08-31 08:00:00`. Fractional seconds
/// beyond milliseconds are truncated. Returns nullopt on malformed input.
std::optional<ParsedTimestamp> parse_iso8601(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MM:SS.mmmZ`.
std::string format_iso8601(Timestamp t);

/// Formats as `YYYY-MM-DD`.
std::string format_date(Timestamp t);

}  // namespace branchdrift
