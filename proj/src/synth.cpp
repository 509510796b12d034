#include "branchdrift/synth.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <random>

namespace branchdrift {

BranchSchedule schedule_from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    BranchSchedule s;
    s.place = j.at("place").get<std::string>();
    s.seed = j.value("seed", std::uint64_t{0});
    for (const auto& p : j.at("phases"))
      s.phases.push_back({p.at("traces").get<std::size_t>(), p.at("probabilities").get<std::vector<double>>()});
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed schedule: ") + e.what());
  }
}

std::string schedule_to_json(const BranchSchedule& schedule) {
  nlohmann::json j;
  j["place"] = schedule.place;
  j["seed"] = schedule.seed;
  j["phases"] = nlohmann::json::array();
  for (const auto& p : schedule.phases) j["phases"].push_back({{"traces", p.traces}, {"probabilities", p.probabilities}});
  return j.dump(2);
}

namespace {

bool has_cycle(const PetriNet& net) {
  const std::size_t np = net.place_count(), nt = net.transition_count();
  std::vector<std::vector<std::size_t>> succ(np + nt);
  for (std::uint32_t t = 0; t < nt; ++t) {
    for (PlaceIndex p : net.preset(TransitionIndex{t})) succ[p.value].push_back(np + t);
    for (PlaceIndex p : net.postset(TransitionIndex{t})) succ[np + t].push_back(p.value);
  }
  std::vector<int> color(np + nt, 0);  // 0 new, 1 on stack, 2 done
  for (std::size_t root = 0; root < np + nt; ++root) {
    if (color[root]) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    color[root] = 1;
    while (!stack.empty()) {
      auto& [v, i] = stack.back();
      if (i < succ[v].size()) {
        std::size_t w = succ[v][i++];
        if (color[w] == 1) return true;
        if (color[w] == 0) {
          color[w] = 1;
          stack.push_back({w, 0});
        }
      } else {
        color[v] = 2;
        stack.pop_back();
      }
    }
  }
  return false;
}

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

SynthResult generate(const PetriNet& net, const BranchSchedule& schedule, const SynthOptions& options) {
  auto place = net.find_place(schedule.place);
  if (!place) throw ParameterError("schedule references unknown place '" + schedule.place + "'");
  InterestingPlace target;
  bool found = false;
  for (auto& ip : decision_places(net))
    if (ip.place == *place) {
      target = ip;
      found = true;
    }
  if (!found) throw ParameterError("place '" + schedule.place + "' is not a decision place");
  if (schedule.phases.empty()) throw ParameterError("schedule has no phases");
  for (const Phase& ph : schedule.phases) {
    if (ph.traces == 0) throw ParameterError("phase trace counts must be positive");
    if (ph.probabilities.size() != target.arity())
      throw ParameterError("phase has " + std::to_string(ph.probabilities.size()) + " probabilities, place has " +
                           std::to_string(target.arity()) + " branches");
    double sum = 0;
    for (double p : ph.probabilities) {
      if (!(p >= 0.0)) throw ParameterError("probabilities must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ParameterError("phase probabilities must sum to 1");
  }
  if (has_cycle(net)) throw ParameterError("cyclic nets are not supported by the generator");
  if (options.inter_arrival.count() <= 0) throw ParameterError("inter-arrival time must be positive");

  SynthResult result;
  result.seed = options.seed.value_or(schedule.seed);
  result.log.source_name = "synthetic";
  result.log.attrs["branchdrift:seed"] = std::to_string(result.seed);
  result.log.attrs["branchdrift:place"] = schedule.place;
  Uniform rng(result.seed);

  std::size_t trace_no = 0;
  for (std::size_t phase = 0; phase < schedule.phases.size(); ++phase) {
    const Phase& ph = schedule.phases[phase];
    if (phase > 0) result.change_indices.push_back(result.choices);
    result.tallies.emplace_back();
    for (int l = 1; l <= static_cast<int>(target.arity()); ++l) result.tallies.back()[l] = 0;

    for (std::size_t i = 0; i < ph.traces; ++i, ++trace_no) {
      Trace trace;
      char id[32];
      std::snprintf(id, sizeof id, "case_%06zu", trace_no);
      trace.case_id = id;
      const Timestamp start = options.epoch + options.inter_arrival * static_cast<std::int64_t>(trace_no);

      Marking m = net.initial_marking();
      std::size_t steps = 0;
      while (m != net.final_marking()) {
        if (++steps > options.max_steps_per_trace)
          throw ResourceError("trace " + trace.case_id + " did not terminate within the step limit");
        std::optional<TransitionIndex> pick;
        if (m[*place] > 0) {
          double u = rng.next(), acc = 0;
          std::size_t label = target.arity();
          for (std::size_t l = 0; l < target.arity(); ++l) {
            acc += ph.probabilities[l];
            if (u < acc) {
              label = l + 1;
              break;
            }
          }
          while (label > 1 && ph.probabilities[label - 1] == 0.0) --label;  // rounding at the top end
          pick = target.outgoing[label - 1];
          if (!is_enabled(net, m, *pick))
            throw ParameterError("branch " + net.transition(*pick).id + " of the scheduled place is not enabled");
          ++result.tallies.back()[static_cast<int>(label)];
          ++result.choices;
        } else {
          auto en = enabled(net, m);
          if (en.empty()) throw ParameterError("net deadlocks before reaching the final marking");
          auto k = static_cast<std::size_t>(rng.next() * static_cast<double>(en.size()));
          pick = en[std::min(k, en.size() - 1)];
        }
        m = fire(net, m, *pick);
        const Transition& tr = net.transition(*pick);
        if (!tr.hidden()) {
          Event e;
          e.activity = *tr.label;
          e.timestamp = start + std::chrono::seconds(static_cast<std::int64_t>(trace.events.size()));
          trace.events.push_back(std::move(e));
        }
      }
      if (!result.log.traces.empty() && !trace.events.empty() && !result.log.traces.back().events.empty() &&
          result.log.traces.back().events.back().timestamp >= trace.events.front().timestamp)
        throw ParameterError("inter-arrival time too short: traces overlap in time");
      result.log.traces.push_back(std::move(trace));
    }
  }
  return result;
}

}  // namespace branchdrift
