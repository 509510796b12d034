#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "branchdrift/event_log.hpp"
#include "branchdrift/petri_net.hpp"

namespace branchdrift {

enum class MoveKind { sync, log_only, model_only };

std::string to_string(MoveKind kind);

struct Move {
  MoveKind kind;
  std::optional<std::size_t> event_index;       // sync and log_only
  std::optional<TransitionIndex> transition;    // sync and model_only
  double cost = 0.0;
  /// Set when another move would have yielded an equally cheap alignment and
  /// the tie-break picked this one.
  bool tie_broken = false;
};

struct Alignment {
  std::string case_id;
  std::vector<Move> moves;
  double total_cost = 0.0;
};

struct CostScheme {
  double sync = 0.0;
  double hidden_model = 0.0;
  double visible_model = 1.0;
  double log = 1.0;

  /// Throws ParameterError unless all costs are non-negative and sync is the cheapest.
  void validate() const;
};

struct AlignOptions {
  std::size_t state_budget = 1'000'000;  // maximum expanded search states per trace
};

class UnalignableTrace : public std::runtime_error {
 public:
  explicit UnalignableTrace(const std::string& case_id)
      : std::runtime_error("trace " + case_id + " cannot reach the final marking"), case_id_(case_id) {}
  const std::string& case_id() const { return case_id_; }

 private:
  std::string case_id_;
};

/// Optimal alignment of `trace` against `net` by uniform-cost search over
/// (marking, trace position). Among alignments of minimal cost, the one with
/// the fewest moves is chosen, and within those the lexicographically
/// smallest move sequence under sync < hidden model move < visible model
/// move < log move, then transition id.
/// Throws UnalignableTrace or ResourceError (state budget).
Alignment align(const PetriNet& net, const Trace& trace, const CostScheme& costs = {},
                const AlignOptions& options = {});

struct AlignmentFailure {
  std::size_t trace_index;
  std::string case_id;
  std::string kind;  // "unalignable" or "budget_exceeded"
  std::string message;
};

struct BatchOptions {
  AlignOptions align;
  unsigned jobs = 1;
  bool fail_fast = false;  // rethrow the first failure (in trace order)
};

struct BatchAlignment {
  std::vector<Alignment> alignments;  // input trace order, failed traces omitted
  std::vector<AlignmentFailure> failures;
};

BatchAlignment align_log(const PetriNet& net, const EventLog& log, const CostScheme& costs = {},
                         const BatchOptions& options = {});

/// Transitions of sync and model_only moves, in order.
std::vector<TransitionIndex> model_projection(const Alignment& a);

/// One JSON object per alignment (case_id, cost, moves); no trailing newline.
std::string alignment_to_json(const Alignment& a, const PetriNet& net);
Alignment alignment_from_json(const std::string& line, const PetriNet& net);

}  // namespace branchdrift
