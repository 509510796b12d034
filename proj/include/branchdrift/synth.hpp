#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "branchdrift/event_log.hpp"
#include "branchdrift/petri_net.hpp"

namespace branchdrift {

struct Phase {
  std::size_t traces = 0;
  std::vector<double> probabilities;  // over arc labels 1..k
};

struct BranchSchedule {
  std::string place;  // PNML place id
  std::vector<Phase> phases;
  std::uint64_t seed = 0;
};

/// Schedule JSON: {"place": "p", "seed": 42,
///                 "phases": [{"traces": 500, "probabilities": [0.5, 0.5]}, ...]}
BranchSchedule schedule_from_json(std::string_view text);
std::string schedule_to_json(const BranchSchedule& schedule);

struct SynthOptions {
  std::chrono::milliseconds inter_arrival{std::chrono::hours{1}};
  Timestamp epoch = Timestamp{std::chrono::sys_days{std::chrono::year{2020} / 1 / 1}};
  std::optional<std::uint64_t> seed;  // overrides schedule.seed
  std::size_t max_steps_per_trace = 10'000;
};

struct SynthResult {
  EventLog log;
  /// Element index (in the scheduled place's choice sequence) at which each
  /// phase after the first begins.
  std::vector<std::size_t> change_indices;
  /// Branch draws per phase, keyed by arc label.
  std::vector<std::map<int, std::size_t>> tallies;
  std::size_t choices = 0;
  std::uint64_t seed = 0;
};

/// Simulates one trace per scheduled trace count by random firing from the
/// initial to the final marking. When the scheduled place holds a token its
/// branch is drawn from the current phase; any other enabled transition is
/// picked uniformly. Trace i starts at epoch + i * inter_arrival and its
/// events are one second apart.
///
/// Random numbers come from std::mt19937_64 (its output sequence is fixed by
/// the C++ standard) mapped to [0, 1) as (x >> 11) * 2^-53, so logs are
/// identical across platforms for a given seed.
///
/// Throws ParameterError for cyclic nets, unknown places, or probability
/// vectors that do not match the place's arity.
SynthResult generate(const PetriNet& net, const BranchSchedule& schedule, const SynthOptions& options = {});

}  // namespace branchdrift
