#include "branchdrift/choice_sequence.hpp"

#include <algorithm>
#include <unordered_map>

namespace branchdrift {

std::vector<int> ChoiceSequence::labels() const {
  std::vector<int> out;
  out.reserve(elements.size());
  for (const auto& e : elements) out.push_back(e.label);
  return out;
}

ChoiceSequence extract(const InterestingPlace& place, const std::vector<Alignment>& alignments,
                       const EventLog& log) {
  ChoiceSequence seq;
  seq.place = place;
  auto& diag = seq.diagnostics;

  std::unordered_map<std::string_view, const Trace*> by_case;
  for (const Trace& t : log.traces) by_case.emplace(t.case_id, &t);

  for (const Alignment& a : alignments) {
    auto found = by_case.find(a.case_id);
    if (found == by_case.end()) {
      seq.warnings.push_back({"choice_sequence", "unknown_case", "alignment for unknown case " + a.case_id});
      continue;
    }
    const Trace& trace = *found->second;
    ++diag.traces_seen;

    // (move index in alignment, model projection position) of each model move.
    std::vector<std::size_t> model_moves;
    for (std::size_t i = 0; i < a.moves.size(); ++i)
      if (a.moves[i].transition) model_moves.push_back(i);

    bool touched = false;
    diag.tokens_produced += place.initial_tokens;
    for (std::size_t k = 0; k < model_moves.size(); ++k) {
      TransitionIndex t = *a.moves[model_moves[k]].transition;
      if (place.has_incoming(t)) {
        ++diag.tokens_produced;
        touched = true;
      }
      if (place.label_of(t) != 0) {
        ++diag.tokens_consumed;
        touched = true;
      }
    }
    if (touched) ++diag.traces_touching_place;

    for (std::size_t k = 0; k + 1 < model_moves.size(); ++k) {
      const Move& first = a.moves[model_moves[k]];
      const Move& second = a.moves[model_moves[k + 1]];
      int label = place.label_of(*second.transition);
      if (label == 0 || !place.has_incoming(*first.transition)) continue;

      if (trace.events.empty()) {
        ++diag.skipped_empty_traces;
        seq.warnings.push_back({"choice_sequence", "traversal_skipped",
                                "case " + a.case_id + " has no events; traversal skipped"});
        continue;
      }
      std::optional<std::size_t> event;
      for (std::size_t i = model_moves[k] + 1; i-- > 0;) {
        if (a.moves[i].event_index) {
          event = a.moves[i].event_index;
          break;
        }
      }
      Timestamp ts;
      if (event && *event < trace.events.size()) {
        ts = trace.events[*event].timestamp;
      } else {
        ts = trace.events.front().timestamp;
        ++diag.fallback_timestamps;
        seq.warnings.push_back({"choice_sequence", "fallback_timestamp",
                                "case " + a.case_id + ": no trace move before the incoming move; using first event"});
      }
      if (second.tie_broken) ++diag.ambiguous_traversals;
      seq.elements.push_back({label, ts, a.case_id, k + 1, second.tie_broken});
    }
  }
  std::size_t matched = seq.elements.size() + diag.skipped_empty_traces;
  diag.missed_traversals = diag.tokens_produced > matched ? diag.tokens_produced - matched : 0;
  if (diag.missed_traversals > 0)
    seq.warnings.push_back({"choice_sequence", "missed_traversals",
                            std::to_string(diag.missed_traversals) +
                                " tokens entered the place without an adjacent outgoing move"});

  std::stable_sort(seq.elements.begin(), seq.elements.end(), [](const ChoiceElement& x, const ChoiceElement& y) {
    if (x.timestamp != y.timestamp) return x.timestamp < y.timestamp;
    if (x.case_id != y.case_id) return x.case_id < y.case_id;
    return x.model_move_position < y.model_move_position;
  });
  return seq;
}

ChoiceSummary diagnostics(const ChoiceSequence& seq) {
  ChoiceSummary s;
  for (std::size_t l = 1; l <= seq.place.arity(); ++l) s.label_counts[static_cast<int>(l)] = 0;
  for (const auto& e : seq.elements) ++s.label_counts[e.label];
  s.length = seq.elements.size();
  s.traversals_per_trace = seq.diagnostics.traces_seen == 0
                               ? 0.0
                               : static_cast<double>(s.length) / static_cast<double>(seq.diagnostics.traces_seen);
  s.fallback_timestamps = seq.diagnostics.fallback_timestamps;
  s.ambiguous_traversals = seq.diagnostics.ambiguous_traversals;
  return s;
}

}  // namespace branchdrift
