#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "branchdrift/alignment.hpp"
#include "branchdrift/changepoint.hpp"
#include "branchdrift/drift_report.hpp"
#include "branchdrift/event_log.hpp"
#include "branchdrift/petri_net.hpp"

namespace branchdrift {

struct RunConfig {
  std::string log_path;
  std::string model_path;
  std::string sequences_path;      // detect from an extract result instead of log + model
  std::vector<std::string> places;  // PNML place ids; empty selects every decision place
  CostScheme costs;
  double penalty = 5.0;
  changepoint::Index min_size = 2;
  changepoint::SearchMethod search = changepoint::SearchMethod::pelt;
  ReportFormat format = ReportFormat::json;
  std::string output_path;  // empty writes to the output stream
  std::string dump_alignments;
  std::string dump_sequences_dir;
  unsigned jobs = 1;
  std::size_t state_budget = 1'000'000;
  bool strict = false;
  bool fail_fast = false;
  PnmlOptions pnml;

  /// Throws ParameterError / InputError for unreadable paths or bad values.
  void validate() const;
};

/// Extracted choice sequences plus digests of the inputs they came from.
struct SequenceSet {
  std::vector<PlaceSequence> places;
  std::map<std::string, std::string> input_digests;
};

std::string sequences_to_json(const SequenceSet& set);
SequenceSet sequences_from_json(std::string_view text);

/// CSV per place: timestamp_iso,label,case_id.
void dump_sequence_csvs(const SequenceSet& set, const std::string& directory);

/// Decision places named by `ids` (all of them when `ids` is empty). Throws
/// ParameterError listing the valid ids if one is not a decision place.
std::vector<InterestingPlace> select_places(const PetriNet& net, const std::vector<std::string>& ids);

SequenceSet extract_sequences(const PetriNet& net, const EventLog& log, const std::vector<Alignment>& alignments,
                              const std::vector<InterestingPlace>& places, Warnings& warnings);

/// Segments each sequence and summarizes it.
DriftReport detect(const SequenceSet& set, const RunConfig& config, Warnings& warnings);

/// Bandwidth used for a sequence: median heuristic, or 1 for fewer than two points.
double sequence_gamma(const changepoint::EncodedSequence<double>& enc);

changepoint::Segmentation segment_sequence(const PlaceSequence& seq, changepoint::SearchMethod method,
                                           double penalty, changepoint::Index min_size, double* gamma_out = nullptr);

/// Full pipeline: parse, select places, align, extract, detect, render.
/// Returns the process exit code: 0 success, 1 structural findings under
/// `strict`, 2 input or parameter errors. Warnings go to `err` as JSON lines;
/// nothing is written to `out` or the output path unless the run succeeds.
int run_detect(const RunConfig& config, std::ostream& out, std::ostream& err);

void write_warnings(const Warnings& warnings, std::ostream& err);

/// fnv1a64 digest of a file's raw bytes.
std::string file_digest(const std::string& path);

/// Reads BRANCHDRIFT_STATE_BUDGET if set.
std::optional<std::size_t> state_budget_from_env();

}  // namespace branchdrift
