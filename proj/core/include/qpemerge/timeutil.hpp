#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace qpemerge {

using TimePoint = std::chrono::sys_seconds;

/// Parses `YYYY-MM-DDTHH:MM:SSZ`. Throws DataError on anything else.
TimePoint parse_timestamp(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_timestamp(TimePoint t);

inline bool is_top_of_hour(TimePoint t) {
  return t.time_since_epoch().count() % 3600 == 0;
}

}  // namespace qpemerge
