#include "branchdrift/event_log.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <unordered_map>

#include "xml.hpp"

namespace branchdrift {

std::size_t EventLog::event_count() const {
  std::size_t n = 0;
  for (const auto& t : traces) n += t.events.size();
  return n;
}

namespace {

bool is_simple_attribute(const std::string& tag) {
  return tag == "string" || tag == "date" || tag == "int" || tag == "float" ||
         tag == "boolean" || tag == "id";
}

std::string gunzip(const std::string& compressed) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw InputError("zlib initialization failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());
  std::string out;
  char buf[1 << 16];
  int rc;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw InputError("corrupt gzip stream");
    }
    out.append(buf, sizeof buf - zs.avail_out);
  } while (rc != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

}  // namespace

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string bytes = ss.str();
  if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f &&
      static_cast<unsigned char>(bytes[1]) == 0x8b)
    return gunzip(bytes);
  return bytes;
}

EventLog parse_xes(std::string_view document, std::string source_name) {
  std::unique_ptr<xml::Node> root;
  try {
    root = xml::parse(document);
  } catch (const xml::ParseError& e) {
    throw XmlSyntaxError(e.what(), e.line(), e.column());
  }
  if (root->name != "log") throw InputError("root element is <" + root->name + ">, expected <log>");

  EventLog log;
  log.source_name = std::move(source_name);
  std::unordered_map<std::string, int> seen_ids;
  for (const auto& a : root->children)
    if (is_simple_attribute(a->name) && a->attr("key") && a->attr("value")) log.attrs[*a->attr("key")] = *a->attr("value");

  auto traces = root->children_named("trace");
  for (std::size_t ti = 0; ti < traces.size(); ++ti) {
    const xml::Node& tnode = *traces[ti];
    Trace trace;
    for (const auto& a : tnode.children) {
      if (a->name == "string" && a->attr("key") && *a->attr("key") == "concept:name" && a->attr("value"))
        trace.case_id = *a->attr("value");
    }
    if (trace.case_id.empty()) {
      trace.case_id = "trace_" + std::to_string(ti);
      log.warnings.push_back({"event_log", "missing_case_id",
                              "trace at line " + std::to_string(tnode.line) +
                                  " has no concept:name; using " + trace.case_id});
    }
    if (int dup = seen_ids[trace.case_id]++; dup > 0) {
      std::string renamed = trace.case_id + "#" + std::to_string(dup + 1);
      log.warnings.push_back({"event_log", "duplicate_case_id",
                              "case id " + trace.case_id + " repeated; renamed to " + renamed});
      trace.case_id = renamed;
    }

    auto events = tnode.children_named("event");
    for (std::size_t ei = 0; ei < events.size(); ++ei) {
      const xml::Node& enode = *events[ei];
      Event ev;
      bool have_name = false, have_time = false;
      std::string bad_time;
      for (const auto& a : enode.children) {
        if (!is_simple_attribute(a->name)) continue;
        const std::string* key = a->attr("key");
        const std::string* value = a->attr("value");
        if (!key || !value) continue;
        if (*key == "concept:name") {
          ev.activity = *value;
          have_name = !value->empty();
        } else if (*key == "time:timestamp") {
          if (auto parsed = parse_iso8601(*value)) {
            ev.timestamp = parsed->instant;
            have_time = true;
            if (!parsed->had_offset)
              log.warnings.push_back({"event_log", "timestamp_without_zone",
                                      "timestamp '" + *value + "' at line " +
                                          std::to_string(a->line) + " treated as UTC"});
          } else {
            bad_time = *value;
          }
        } else {
          ev.attrs[*key] = *value;
        }
      }
      if (have_name && have_time) {
        trace.events.push_back(std::move(ev));
        continue;
      }
      std::string reason = !have_name ? "missing concept:name"
                           : bad_time.empty() ? "missing time:timestamp"
                                              : "unparseable time:timestamp '" + bad_time + "'";
      log.event_errors.push_back({ti, ei, enode.line, reason});
    }

    if (!events.empty() && trace.events.empty()) {
      log.warnings.push_back({"event_log", "trace_dropped",
                              "trace " + trace.case_id + " dropped: all " +
                                  std::to_string(events.size()) + " events invalid"});
      continue;
    }
    if (events.empty())
      log.warnings.push_back({"event_log", "empty_trace", "trace " + trace.case_id + " has no events"});

    std::stable_sort(trace.events.begin(), trace.events.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
    log.traces.push_back(std::move(trace));
  }
  if (log.traces.empty()) log.warnings.push_back({"event_log", "no_traces", "log contains no traces"});
  return log;
}

EventLog read_xes_file(const std::filesystem::path& path) {
  return parse_xes(read_file_bytes(path), path.filename().string());
}

std::string write_xes(const EventLog& log) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<log xes.version=\"1.0\" xmlns=\"http://www.xes-standard.org/\">\n"
      << "  <extension name=\"Concept\" prefix=\"concept\" uri=\"http://www.xes-standard.org/concept.xesext\"/>\n"
      << "  <extension name=\"Time\" prefix=\"time\" uri=\"http://www.xes-standard.org/time.xesext\"/>\n";
  for (const auto& [k, v] : log.attrs)
    out << "  <string key=\"" << xml::escape(k) << "\" value=\"" << xml::escape(v) << "\"/>\n";
  for (const auto& t : log.traces) {
    out << "  <trace>\n    <string key=\"concept:name\" value=\"" << xml::escape(t.case_id) << "\"/>\n";
    for (const auto& e : t.events) {
      out << "    <event>\n      <string key=\"concept:name\" value=\"" << xml::escape(e.activity)
          << "\"/>\n      <date key=\"time:timestamp\" value=\"" << format_iso8601(e.timestamp) << "\"/>\n";
      for (const auto& [k, v] : e.attrs)
        out << "      <string key=\"" << xml::escape(k) << "\" value=\"" << xml::escape(v) << "\"/>\n";
      out << "    </event>\n";
    }
    out << "  </trace>\n";
  }
  out << "</log>\n";
  return out.str();
}

LogStats log_stats(const EventLog& log) {
  LogStats s;
  s.trace_count = log.traces.size();
  s.event_error_count = log.event_errors.size();
  std::set<std::string> vocab;
  for (const auto& t : log.traces) {
    if (t.events.empty()) ++s.empty_trace_count;
    s.event_count += t.events.size();
    for (const auto& e : t.events) {
      vocab.insert(e.activity);
      if (!s.first || e.timestamp < *s.first) s.first = e.timestamp;
      if (!s.last || e.timestamp > *s.last) s.last = e.timestamp;
    }
  }
  s.activities.assign(vocab.begin(), vocab.end());
  return s;
}

std::string log_stats_json(const LogStats& stats) {
  nlohmann::json j;
  j["traces"] = stats.trace_count;
  j["events"] = stats.event_count;
  j["empty_traces"] = stats.empty_trace_count;
  j["event_errors"] = stats.event_error_count;
  j["activities"] = stats.activities;
  j["time_span"] = {{"start", stats.first ? nlohmann::json(format_iso8601(*stats.first)) : nlohmann::json()},
                    {"end", stats.last ? nlohmann::json(format_iso8601(*stats.last)) : nlohmann::json()}};
  return j.dump(2);
}

}  // namespace branchdrift
