#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "branchdrift/changepoint.hpp"
#include "branchdrift/choice_sequence.hpp"
#include "branchdrift/petri_net.hpp"

namespace branchdrift {

struct LabelInfo {
  int label;
  std::string transition_id;
  std::string name;  // display name, see display_name()
  friend bool operator==(const LabelInfo&, const LabelInfo&) = default;
};

/// A choice sequence detached from the net it was extracted from.
struct PlaceSequence {
  std::string place_id;
  std::string place_name;
  std::vector<LabelInfo> labels;  // labels[i].label == i + 1
  std::vector<ChoiceElement> elements;
  ExtractionDiagnostics diagnostics;

  std::vector<int> label_values() const;
};

PlaceSequence describe(const ChoiceSequence& seq, const PetriNet& net);

struct SegmentStats {
  std::size_t index = 0;
  std::size_t start = 0;  // element indices [start, end)
  std::size_t end = 0;
  Timestamp start_ts{};
  Timestamp end_ts{};
  std::map<int, std::size_t> counts;  // every label 1..k
  std::map<int, double> frequencies;
  friend bool operator==(const SegmentStats&, const SegmentStats&) = default;
};

struct ChangePoint {
  std::size_t element_index = 0;  // first element of the new segment
  Timestamp timestamp{};
  std::map<int, double> delta_pp;  // frequency change in percentage points
  friend bool operator==(const ChangePoint&, const ChangePoint&) = default;
};

struct PlaceReport {
  std::string place_id;
  std::string place_name;
  std::vector<LabelInfo> labels;
  std::size_t sequence_length = 0;
  double gamma = 1.0;
  double total_cost = 0.0;
  std::vector<SegmentStats> segments;
  std::vector<ChangePoint> changes;
  std::map<std::string, std::size_t> diagnostics;
  friend bool operator==(const PlaceReport&, const PlaceReport&) = default;
};

struct RunMetadata {
  std::string tool_version = BRANCHDRIFT_VERSION;
  std::string search = "pelt";
  double penalty = 5.0;
  std::int64_t min_size = 2;
  std::map<std::string, double> costs;
  std::map<std::string, std::string> input_digests;  // input name -> fnv1a64 hex
  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

struct DriftReport {
  RunMetadata metadata;
  std::vector<PlaceReport> places;
  friend bool operator==(const DriftReport&, const DriftReport&) = default;
};

/// Per-segment counts and frequencies, change points dated by the first
/// element of each new segment. An empty sequence yields a report with no
/// segments and a warning.
PlaceReport summarize(const PlaceSequence& seq, const changepoint::Segmentation& segmentation, double gamma,
                      Warnings* warnings = nullptr);

enum class ReportFormat { json, csv, svg };

ReportFormat parse_report_format(std::string_view name);

std::string render(const DriftReport& report, ReportFormat format);

/// Inverse of render(report, ReportFormat::json).
DriftReport report_from_json(std::string_view text);

std::string fnv1a64_hex(std::string_view bytes);

}  // namespace branchdrift
