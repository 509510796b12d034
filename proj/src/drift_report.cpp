#include "branchdrift/drift_report.hpp"

#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "xml.hpp"

namespace branchdrift {

using nlohmann::json;

std::vector<int> PlaceSequence::label_values() const {
  std::vector<int> out;
  out.reserve(elements.size());
  for (const auto& e : elements) out.push_back(e.label);
  return out;
}

PlaceSequence describe(const ChoiceSequence& seq, const PetriNet& net) {
  PlaceSequence out;
  out.place_id = net.place(seq.place.place).id;
  out.place_name = net.place(seq.place.place).name;
  for (std::size_t i = 0; i < seq.place.outgoing.size(); ++i) {
    TransitionIndex t = seq.place.outgoing[i];
    out.labels.push_back({static_cast<int>(i + 1), net.transition(t).id, display_name(net, t)});
  }
  out.elements = seq.elements;
  out.diagnostics = seq.diagnostics;
  return out;
}

namespace {

std::map<std::string, std::size_t> diagnostics_map(const ExtractionDiagnostics& d) {
  return {{"traces_seen", d.traces_seen},
          {"traces_touching_place", d.traces_touching_place},
          {"fallback_timestamps", d.fallback_timestamps},
          {"skipped_empty_traces", d.skipped_empty_traces},
          {"ambiguous_traversals", d.ambiguous_traversals},
          {"tokens_produced", d.tokens_produced},
          {"tokens_consumed", d.tokens_consumed},
          {"missed_traversals", d.missed_traversals}};
}

}  // namespace

PlaceReport summarize(const PlaceSequence& seq, const changepoint::Segmentation& segmentation, double gamma,
                      Warnings* warnings) {
  PlaceReport r;
  r.place_id = seq.place_id;
  r.place_name = seq.place_name;
  r.labels = seq.labels;
  r.sequence_length = seq.elements.size();
  r.gamma = gamma;
  r.total_cost = segmentation.total_cost;
  r.diagnostics = diagnostics_map(seq.diagnostics);
  if (seq.elements.empty()) {
    if (warnings)
      warnings->push_back({"drift_report", "empty_sequence", "place " + seq.place_id + " has an empty choice sequence"});
    return r;
  }
  if (static_cast<std::size_t>(segmentation.n) != seq.elements.size())
    throw PreconditionError("segmentation length does not match the choice sequence");

  auto bounds = segmentation.bounds();
  for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
    SegmentStats st;
    st.index = s;
    st.start = static_cast<std::size_t>(bounds[s]);
    st.end = static_cast<std::size_t>(bounds[s + 1]);
    st.start_ts = seq.elements[st.start].timestamp;
    st.end_ts = seq.elements[st.end - 1].timestamp;
    for (const auto& l : seq.labels) st.counts[l.label] = 0;
    for (std::size_t i = st.start; i < st.end; ++i) ++st.counts[seq.elements[i].label];
    const double len = static_cast<double>(st.end - st.start);
    for (const auto& [label, count] : st.counts) st.frequencies[label] = static_cast<double>(count) / len;
    r.segments.push_back(std::move(st));
  }
  for (std::size_t s = 1; s < r.segments.size(); ++s) {
    ChangePoint cp;
    cp.element_index = r.segments[s].start;
    cp.timestamp = r.segments[s].start_ts;
    for (const auto& [label, f] : r.segments[s].frequencies)
      cp.delta_pp[label] = 100.0 * (f - r.segments[s - 1].frequencies.at(label));
    r.changes.push_back(std::move(cp));
  }
  return r;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "svg") return ReportFormat::svg;
  throw ParameterError("unknown report format '" + std::string(name) + "' (expected json, csv or svg)");
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------- JSON

namespace {

json int_keyed(const std::map<int, double>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = v;
  return j;
}

json int_keyed(const std::map<int, std::size_t>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = v;
  return j;
}

template <typename V>
std::map<int, V> int_keyed_from(const json& j) {
  std::map<int, V> m;
  for (const auto& [k, v] : j.items()) m[std::stoi(k)] = v.template get<V>();
  return m;
}

Timestamp ts_from(const json& j) {
  auto p = parse_iso8601(j.get<std::string>());
  if (!p) throw InputError("bad timestamp in report: " + j.get<std::string>());
  return p->instant;
}

json to_json(const DriftReport& report) {
  json places = json::array();
  for (const PlaceReport& p : report.places) {
    json labels = json::array();
    for (const auto& l : p.labels) labels.push_back({{"label", l.label}, {"transition", l.transition_id}, {"name", l.name}});
    json segments = json::array();
    for (const auto& s : p.segments)
      segments.push_back({{"index", s.index},
                          {"start", s.start},
                          {"end", s.end},
                          {"start_ts", format_iso8601(s.start_ts)},
                          {"end_ts", format_iso8601(s.end_ts)},
                          {"counts", int_keyed(s.counts)},
                          {"frequencies", int_keyed(s.frequencies)}});
    json changes = json::array();
    for (const auto& c : p.changes)
      changes.push_back({{"element_index", c.element_index},
                         {"timestamp", format_iso8601(c.timestamp)},
                         {"delta_pp", int_keyed(c.delta_pp)}});
    places.push_back({{"place", p.place_id},
                      {"place_name", p.place_name},
                      {"labels", labels},
                      {"sequence_length", p.sequence_length},
                      {"gamma", p.gamma},
                      {"total_cost", p.total_cost},
                      {"segments", segments},
                      {"change_points", changes},
                      {"diagnostics", p.diagnostics}});
  }
  const RunMetadata& m = report.metadata;
  return {{"metadata",
           {{"tool", "branchdrift"},
            {"tool_version", m.tool_version},
            {"search", m.search},
            {"penalty", m.penalty},
            {"min_size", m.min_size},
            {"costs", m.costs},
            {"input_digests", m.input_digests}}},
          {"places", places}};
}

// ---------------------------------------------------------------- CSV

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string to_csv(const DriftReport& report) {
  std::ostringstream out;
  out << "place,segment,start_ts,end_ts,label,transition,count,frequency\n";
  for (const PlaceReport& p : report.places)
    for (const SegmentStats& s : p.segments)
      for (const LabelInfo& l : p.labels) {
        char freq[32];
        std::snprintf(freq, sizeof freq, "%.17g", s.frequencies.at(l.label));
        out << csv_field(p.place_id) << ',' << s.index << ',' << format_iso8601(s.start_ts) << ','
            << format_iso8601(s.end_ts) << ',' << l.label << ',' << csv_field(l.name) << ',' << s.counts.at(l.label)
            << ',' << freq << '\n';
      }
  return out.str();
}

// ---------------------------------------------------------------- SVG

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b",
                          "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#d62728"};

std::string to_svg(const DriftReport& report) {
  constexpr double width = 960, panel_h = 320, left = 70, right = 200, top = 50, plot_h = 200;
  const double plot_w = width - left - right;
  const double height = 20 + panel_h * std::max<std::size_t>(1, report.places.size());
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t pi = 0; pi < report.places.size(); ++pi) {
    const PlaceReport& p = report.places[pi];
    const double y0 = 10 + pi * panel_h;
    o << "<g class=\"place\" id=\"place-" << xml::escape(p.place_id) << "\">\n";
    o << "<text x=\"" << left << "\" y=\"" << fmt("%.1f", y0 + 20) << "\" font-size=\"14\" font-weight=\"bold\">"
      << xml::escape("Place " + p.place_id + (p.place_name.empty() ? "" : " (" + p.place_name + ")")) << " - "
      << p.sequence_length << " choices</text>\n";
    if (!p.segments.empty()) {
      const auto t0 = p.segments.front().start_ts, t1 = p.segments.back().end_ts;
      const double span = std::max<double>(1.0, static_cast<double>((t1 - t0).count()));
      auto x_of = [&](Timestamp t) { return left + plot_w * static_cast<double>((t - t0).count()) / span; };
      const double base = y0 + top + plot_h;
      for (const SegmentStats& s : p.segments) {
        double x0 = x_of(s.start_ts), x1 = std::max(x_of(s.end_ts), x0 + 2.0);
        double y = base;
        o << "<g class=\"segment\" data-index=\"" << s.index << "\">\n";
        for (std::size_t li = 0; li < p.labels.size(); ++li) {
          const LabelInfo& l = p.labels[li];
          double h = plot_h * s.frequencies.at(l.label);
          y -= h;
          o << "<rect x=\"" << fmt("%.2f", x0) << "\" y=\"" << fmt("%.2f", y) << "\" width=\"" << fmt("%.2f", x1 - x0)
            << "\" height=\"" << fmt("%.2f", h) << "\" fill=\"" << kPalette[li % 10] << "\"><title>"
            << xml::escape(l.name) << ": " << fmt("%.3f", s.frequencies.at(l.label)) << " (" << s.counts.at(l.label)
            << ")</title></rect>\n";
        }
        double yt = y0 + top - 4 - 12.0 * static_cast<double>(p.labels.size() - 1);
        for (std::size_t li = 0; li < p.labels.size(); ++li) {
          o << "<text x=\"" << fmt("%.2f", (x0 + x1) / 2) << "\" y=\"" << fmt("%.2f", yt + 12.0 * li)
            << "\" text-anchor=\"middle\" fill=\"" << kPalette[li % 10] << "\">"
            << fmt("%.3f", p.segments[s.index].frequencies.at(p.labels[li].label)) << "</text>\n";
        }
        o << "</g>\n";
      }
      for (const ChangePoint& c : p.changes) {
        double x = x_of(c.timestamp);
        o << "<line class=\"change-point\" x1=\"" << fmt("%.2f", x) << "\" x2=\"" << fmt("%.2f", x) << "\" y1=\""
          << fmt("%.2f", y0 + top - 10) << "\" y2=\"" << fmt("%.2f", base + 5)
          << "\" stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"5 3\"/>\n";
        o << "<text x=\"" << fmt("%.2f", x) << "\" y=\"" << fmt("%.2f", base + 32)
          << "\" text-anchor=\"middle\" fill=\"#d62728\">" << format_date(c.timestamp) << "</text>\n";
      }
      o << "<line x1=\"" << left << "\" x2=\"" << left + plot_w << "\" y1=\"" << fmt("%.2f", base) << "\" y2=\""
        << fmt("%.2f", base) << "\" stroke=\"black\"/>\n";
      o << "<text x=\"" << left << "\" y=\"" << fmt("%.2f", base + 16) << "\">" << format_date(t0) << "</text>\n";
      o << "<text x=\"" << left + plot_w << "\" y=\"" << fmt("%.2f", base + 16) << "\" text-anchor=\"end\">"
        << format_date(t1) << "</text>\n";
    }
    for (std::size_t li = 0; li < p.labels.size(); ++li) {
      double ly = y0 + top + 14.0 * li;
      o << "<rect x=\"" << left + plot_w + 15 << "\" y=\"" << fmt("%.2f", ly) << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[li % 10] << "\"/>\n";
      o << "<text x=\"" << left + plot_w + 30 << "\" y=\"" << fmt("%.2f", ly + 9) << "\">" << p.labels[li].label << ": "
        << xml::escape(p.labels[li].name) << "</text>\n";
    }
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace

std::string render(const DriftReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return to_json(report).dump(2) + "\n";
    case ReportFormat::csv: return to_csv(report);
    case ReportFormat::svg: return to_svg(report);
  }
  throw ParameterError("unknown report format");
}

DriftReport report_from_json(std::string_view text) {
  try {
    json j = json::parse(text);
    DriftReport r;
    const json& m = j.at("metadata");
    r.metadata.tool_version = m.at("tool_version").get<std::string>();
    r.metadata.search = m.at("search").get<std::string>();
    r.metadata.penalty = m.at("penalty").get<double>();
    r.metadata.min_size = m.at("min_size").get<std::int64_t>();
    r.metadata.costs = m.at("costs").get<std::map<std::string, double>>();
    r.metadata.input_digests = m.at("input_digests").get<std::map<std::string, std::string>>();
    for (const json& jp : j.at("places")) {
      PlaceReport p;
      p.place_id = jp.at("place").get<std::string>();
      p.place_name = jp.at("place_name").get<std::string>();
      for (const json& l : jp.at("labels"))
        p.labels.push_back({l.at("label").get<int>(), l.at("transition").get<std::string>(), l.at("name").get<std::string>()});
      p.sequence_length = jp.at("sequence_length").get<std::size_t>();
      p.gamma = jp.at("gamma").get<double>();
      p.total_cost = jp.at("total_cost").get<double>();
      for (const json& s : jp.at("segments")) {
        SegmentStats st;
        st.index = s.at("index").get<std::size_t>();
        st.start = s.at("start").get<std::size_t>();
        st.end = s.at("end").get<std::size_t>();
        st.start_ts = ts_from(s.at("start_ts"));
        st.end_ts = ts_from(s.at("end_ts"));
        st.counts = int_keyed_from<std::size_t>(s.at("counts"));
        st.frequencies = int_keyed_from<double>(s.at("frequencies"));
        p.segments.push_back(std::move(st));
      }
      for (const json& c : jp.at("change_points")) {
        ChangePoint cp;
        cp.element_index = c.at("element_index").get<std::size_t>();
        cp.timestamp = ts_from(c.at("timestamp"));
        cp.delta_pp = int_keyed_from<double>(c.at("delta_pp"));
        p.changes.push_back(std::move(cp));
      }
      p.diagnostics = jp.at("diagnostics").get<std::map<std::string, std::size_t>>();
      r.places.push_back(std::move(p));
    }
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed report: ") + e.what());
  }
}

}  // namespace branchdrift
