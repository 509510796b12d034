#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "branchdrift/diagnostics.hpp"
#include "branchdrift/time.hpp"

namespace branchdrift {

struct Event {
  std::string activity;  // value of concept:name
  Timestamp timestamp;
  std::map<std::string, std::string> attrs;  // every other simple attribute, verbatim
};

struct Trace {
  std::string case_id;
  std::vector<Event> events;
};

/// An event that could not be turned into an Event.
struct EventError {
  std::size_t trace_index;  // document position of the trace
  std::size_t event_index;  // document position within the trace
  long line;
  std::string reason;
};

struct EventLog {
  std::vector<Trace> traces;
  std::map<std::string, std::string> attrs;  // simple attributes directly under <log>
  std::string source_name;
  std::vector<EventError> event_errors;
  Warnings warnings;

  std::size_t event_count() const;
};

/// Parses the XES subset: trace `concept:name` becomes the case id, event
/// `concept:name` the activity and `time:timestamp` the instant (normalized
/// to UTC). Events are stably sorted by timestamp within each trace.
/// Throws xml-level errors as InputError carrying line and column.
EventLog parse_xes(std::string_view document, std::string source_name = {});

/// Reads `.xes` or gzip-compressed `.xes.gz` (detected by magic bytes).
EventLog read_xes_file(const std::filesystem::path& path);

/// Serializes to XES. Output parses back to an equal log under the
/// (case_id, activity, timestamp) projection.
std::string write_xes(const EventLog& log);

struct LogStats {
  std::size_t trace_count = 0;
  std::size_t event_count = 0;
  std::size_t empty_trace_count = 0;
  std::size_t event_error_count = 0;
  std::vector<std::string> activities;  // sorted lexicographically
  std::optional<Timestamp> first;
  std::optional<Timestamp> last;
};

LogStats log_stats(const EventLog& log);

std::string log_stats_json(const LogStats& stats);

/// Whole-file read with transparent gzip decompression.
std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace branchdrift
