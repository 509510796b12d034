#pragma once

#include <map>
#include <string>
#include <vector>

#include "branchdrift/alignment.hpp"
#include "branchdrift/event_log.hpp"
#include "branchdrift/petri_net.hpp"

namespace branchdrift {

struct ChoiceElement {
  int label;  // 1..k
  Timestamp timestamp;
  std::string case_id;
  std::size_t model_move_position;  // index of the outgoing move in the model projection
  bool ambiguous = false;           // the outgoing move was picked by the alignment tie-break
};

struct ExtractionDiagnostics {
  std::size_t traces_seen = 0;
  std::size_t traces_touching_place = 0;
  std::size_t fallback_timestamps = 0;    // no trace move at/before the incoming move
  std::size_t skipped_empty_traces = 0;   // traversals dropped because the trace has no events
  std::size_t ambiguous_traversals = 0;
  std::size_t tokens_produced = 0;        // initial tokens plus incoming firings
  std::size_t tokens_consumed = 0;        // outgoing firings
  std::size_t missed_traversals = 0;      // tokens produced minus matched traversals
};

struct ChoiceSequence {
  InterestingPlace place;
  std::vector<ChoiceElement> elements;  // sorted by (timestamp, case_id, model_move_position)
  ExtractionDiagnostics diagnostics;
  Warnings warnings;

  std::vector<int> labels() const;
};

/// Scans the model projection of every alignment; each adjacent pair
/// (incoming transition of the place, outgoing transition of the place)
/// yields one element. Its timestamp is that of the closest event-carrying
/// move at or before the incoming move, falling back to the first event of
/// the trace. Alignments whose case id is missing from `log` are ignored
/// with a warning.
ChoiceSequence extract(const InterestingPlace& place, const std::vector<Alignment>& alignments,
                       const EventLog& log);

struct ChoiceSummary {
  std::map<int, std::size_t> label_counts;  // every label 1..k present, possibly 0
  std::size_t length = 0;
  double traversals_per_trace = 0.0;
  std::size_t fallback_timestamps = 0;
  std::size_t ambiguous_traversals = 0;
};

ChoiceSummary diagnostics(const ChoiceSequence& seq);

}  // namespace branchdrift
