#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "branchdrift/diagnostics.hpp"

namespace branchdrift {

template <class Tag>
struct Index {
  std::uint32_t value = 0;
  friend auto operator<=>(Index, Index) = default;
};

using PlaceIndex = Index<struct PlaceTag>;
using TransitionIndex = Index<struct TransitionTag>;

struct Place {
  std::string id;
  std::string name;
};

struct Transition {
  std::string id;
  std::string name;                  // display name, may be empty or "tau"
  std::optional<std::string> label;  // activity label; absent for hidden transitions

  bool hidden() const { return !label.has_value(); }
};

/// Token counts indexed by place.
class Marking {
 public:
  Marking() = default;
  explicit Marking(std::size_t place_count) : tokens_(place_count, 0) {}

  std::uint32_t operator[](PlaceIndex p) const { return tokens_[p.value]; }
  std::uint32_t& operator[](PlaceIndex p) { return tokens_[p.value]; }
  std::size_t size() const { return tokens_.size(); }
  std::uint64_t total() const;
  bool empty() const;

  std::span<const std::uint32_t> tokens() const { return tokens_; }

  friend bool operator==(const Marking&, const Marking&) = default;

 private:
  std::vector<std::uint32_t> tokens_;
};

struct MarkingHash {
  std::size_t operator()(const Marking& m) const noexcept;
};

/// Labeled place/transition net with unit arc weights.
class PetriNet {
 public:
  PlaceIndex add_place(std::string id, std::string name = {}, std::uint32_t initial_tokens = 0);
  TransitionIndex add_transition(std::string id, std::optional<std::string> label,
                                 std::string name = {});
  /// Adds an arc between two existing nodes given by id. Throws InputError for
  /// unknown endpoints or non-bipartite arcs; duplicate arcs are rejected too.
  void add_arc(std::string_view source_id, std::string_view target_id);
  void set_final_marking(Marking m);

  std::size_t place_count() const { return places_.size(); }
  std::size_t transition_count() const { return transitions_.size(); }
  const Place& place(PlaceIndex p) const { return places_[p.value]; }
  const Transition& transition(TransitionIndex t) const { return transitions_[t.value]; }

  std::span<const PlaceIndex> preset(TransitionIndex t) const { return t_in_[t.value]; }
  std::span<const PlaceIndex> postset(TransitionIndex t) const { return t_out_[t.value]; }
  std::span<const TransitionIndex> producers(PlaceIndex p) const { return p_in_[p.value]; }
  std::span<const TransitionIndex> consumers(PlaceIndex p) const { return p_out_[p.value]; }

  const Marking& initial_marking() const { return initial_; }
  const Marking& final_marking() const { return final_; }

  std::optional<PlaceIndex> find_place(std::string_view id) const;
  std::optional<TransitionIndex> find_transition(std::string_view id) const;

  std::size_t arc_count() const { return arc_count_; }

 private:
  std::vector<Place> places_;
  std::vector<Transition> transitions_;
  std::vector<std::vector<PlaceIndex>> t_in_, t_out_;
  std::vector<std::vector<TransitionIndex>> p_in_, p_out_;
  std::unordered_map<std::string, PlaceIndex> place_ids_;
  std::unordered_map<std::string, TransitionIndex> transition_ids_;
  Marking initial_;
  Marking final_;
  std::size_t arc_count_ = 0;
};

struct PnmlOptions {
  /// Transition names matching this pattern (full match, case-insensitive)
  /// are hidden.
  std::string invisible_pattern = "tau|skip_.*";
};

struct PnmlDocument {
  PetriNet net;
  Warnings warnings;
};

PnmlDocument parse_pnml(std::string_view document, const PnmlOptions& options = {});
PnmlDocument read_pnml_file(const std::string& path, const PnmlOptions& options = {});

struct Finding {
  std::string code;  // not_single_source, not_single_sink, disconnected_node, ...
  std::string node;  // offending node id, empty for net-level findings
  std::string message;
};

/// Workflow-net structure checks. An empty result means structurally acceptable.
std::vector<Finding> validate_structure(const PetriNet& net);

/// Transitions enabled in `m`, ascending by index.
std::vector<TransitionIndex> enabled(const PetriNet& net, const Marking& m);
bool is_enabled(const PetriNet& net, const Marking& m, TransitionIndex t);

/// Throws PreconditionError if `t` is not enabled.
Marking fire(const PetriNet& net, const Marking& m, TransitionIndex t);

/// Inverse of fire: consumes the outputs of `t` and restores its inputs.
/// Throws PreconditionError if an output place of `t` is empty.
Marking unfire(const PetriNet& net, const Marking& m, TransitionIndex t);

/// A decision place with its outgoing arcs labeled 1..k.
struct InterestingPlace {
  PlaceIndex place;
  std::vector<TransitionIndex> outgoing;  // outgoing[i] carries label i + 1
  std::vector<TransitionIndex> incoming;  // ascending by index
  std::uint32_t initial_tokens = 0;       // tokens in the place under the initial marking

  std::size_t arity() const { return outgoing.size(); }
  /// Arc label of `t`, or 0 when `t` is not an outgoing transition.
  int label_of(TransitionIndex t) const;
  bool has_incoming(TransitionIndex t) const;
};

/// Every place with two or more outgoing arcs. Outgoing transitions are
/// ordered visible-before-hidden, then by label, then by transition id.
std::vector<InterestingPlace> decision_places(const PetriNet& net);

/// Human-readable name of a transition: its label, or "skip to X" for a
/// hidden transition whose next visible activity is uniquely X, else "τ".
std::string display_name(const PetriNet& net, TransitionIndex t);

}  // namespace branchdrift

template <class Tag>
struct std::hash<branchdrift::Index<Tag>> {
  std::size_t operator()(branchdrift::Index<Tag> i) const noexcept { return i.value; }
};
