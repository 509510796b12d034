#include "branchdrift/alignment.hpp"

#include <atomic>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <queue>
#include <thread>
#include <unordered_map>

namespace branchdrift {

std::string to_string(MoveKind kind) {
  switch (kind) {
    case MoveKind::sync: return "sync";
    case MoveKind::log_only: return "log";
    case MoveKind::model_only: return "model";
  }
  return "?";
}

void CostScheme::validate() const {
  for (double c : {sync, hidden_model, visible_model, log})
    if (!(c >= 0.0) || !std::isfinite(c)) throw ParameterError("alignment costs must be finite and non-negative");
  if (sync > hidden_model || sync > visible_model || sync > log)
    throw ParameterError("synchronous move cost must not exceed any other move cost");
}

namespace {

struct StateKey {
  Marking marking;
  std::uint32_t pos;
  friend bool operator==(const StateKey&, const StateKey&) = default;
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const noexcept {
    return MarkingHash{}(k.marking) * 31 + k.pos;
  }
};

// Path key: total cost first, then number of moves. Every move adds one to
// the length, so tight predecessors are always settled before their successors.
struct Key {
  double cost;
  std::uint32_t length;
};

constexpr double kCostEps = 1e-9;

bool cost_less(double a, double b) { return a < b - kCostEps * std::max(1.0, std::abs(b)); }
bool cost_equal(double a, double b) { return !cost_less(a, b) && !cost_less(b, a); }
bool key_less(const Key& a, const Key& b) {
  if (cost_less(a.cost, b.cost)) return true;
  if (cost_less(b.cost, a.cost)) return false;
  return a.length < b.length;
}
bool key_equal(const Key& a, const Key& b) { return cost_equal(a.cost, b.cost) && a.length == b.length; }

struct Candidate {
  Move move;
  StateKey next;
  int rank;               // sync 0, hidden model 1, visible model 2, log 3
  std::uint32_t t_order;  // transition rank by id
};

class Search {
 public:
  Search(const PetriNet& net, const Trace& trace, const CostScheme& costs, const AlignOptions& options)
      : net_(net), trace_(trace), costs_(costs), options_(options), id_rank_(net.transition_count()) {
    std::vector<std::uint32_t> order(net.transition_count());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
      return net.transition(TransitionIndex{a}).id < net.transition(TransitionIndex{b}).id;
    });
    for (std::uint32_t r = 0; r < order.size(); ++r) id_rank_[order[r]] = r;
  }

  Alignment run() {
    costs_.validate();
    const std::uint32_t n = static_cast<std::uint32_t>(trace_.events.size());
    const StateKey start{net_.initial_marking(), 0};
    intern(start);
    keys_[0] = {0.0, 0};

    using Entry = std::pair<Key, std::uint32_t>;
    auto greater = [](const Entry& a, const Entry& b) {
      if (key_less(b.first, a.first)) return true;
      if (key_less(a.first, b.first)) return false;
      return a.second > b.second;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(greater)> open(greater);
    open.push({keys_[0], 0});

    std::optional<std::uint32_t> goal;
    std::size_t expanded = 0;
    while (!open.empty()) {
      auto [key, id] = open.top();
      open.pop();
      if (closed_[id] || !key_equal(key, keys_[id])) continue;
      closed_[id] = 1;
      if (states_[id].pos == n && states_[id].marking == net_.final_marking()) {
        goal = id;
        break;
      }
      if (++expanded > options_.state_budget)
        throw ResourceError("alignment of trace " + trace_.case_id + " exceeded the state budget of " +
                            std::to_string(options_.state_budget) + " states");
      for (Candidate& c : successors(states_[id])) {
        std::uint32_t next = intern(c.next);
        if (closed_[next]) continue;
        Key nk{key.cost + c.move.cost, key.length + 1};
        if (!reached_[next] || key_less(nk, keys_[next])) {
          reached_[next] = 1;
          keys_[next] = nk;
          preds_[next].assign(1, id);
          open.push({nk, next});
        } else if (key_equal(nk, keys_[next])) {
          preds_[next].push_back(id);
        }
      }
    }
    if (!goal) throw UnalignableTrace(trace_.case_id);
    return reconstruct(*goal);
  }

 private:
  std::uint32_t intern(const StateKey& k) {
    auto [it, inserted] = index_.try_emplace(k, static_cast<std::uint32_t>(states_.size()));
    if (inserted) {
      states_.push_back(k);
      keys_.push_back({0.0, 0});
      preds_.emplace_back();
      closed_.push_back(0);
      reached_.push_back(states_.size() == 1);
    }
    return it->second;
  }

  std::vector<Candidate> successors(const StateKey& s) const {
    std::vector<Candidate> out;
    const std::uint32_t n = static_cast<std::uint32_t>(trace_.events.size());
    for (TransitionIndex t : enabled(net_, s.marking)) {
      const Transition& tr = net_.transition(t);
      Marking after = fire(net_, s.marking, t);
      if (s.pos < n && !tr.hidden() && *tr.label == trace_.events[s.pos].activity)
        out.push_back({{MoveKind::sync, s.pos, t, costs_.sync, false}, {after, s.pos + 1}, 0, id_rank_[t.value]});
      double c = tr.hidden() ? costs_.hidden_model : costs_.visible_model;
      out.push_back({{MoveKind::model_only, std::nullopt, t, c, false},
                     {std::move(after), s.pos},
                     tr.hidden() ? 1 : 2,
                     id_rank_[t.value]});
    }
    if (s.pos < n)
      out.push_back({{MoveKind::log_only, s.pos, std::nullopt, costs_.log, false}, {s.marking, s.pos + 1}, 3, 0});
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(a.rank, a.t_order) < std::tie(b.rank, b.t_order);
    });
    return out;
  }

  Alignment reconstruct(std::uint32_t goal) {
    // States lying on some optimal path: backward closure over tight predecessors.
    std::vector<char> on_path(states_.size(), 0);
    std::vector<std::uint32_t> stack{goal};
    on_path[goal] = 1;
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      for (auto u : preds_[v])
        if (!on_path[u]) {
          on_path[u] = 1;
          stack.push_back(u);
        }
    }

    Alignment a;
    a.case_id = trace_.case_id;
    std::uint32_t cur = 0;
    while (cur != goal) {
      std::optional<Candidate> chosen;
      std::optional<std::uint32_t> chosen_id;
      int options = 0;
      for (Candidate& c : successors(states_[cur])) {
        auto it = index_.find(c.next);
        if (it == index_.end() || !on_path[it->second]) continue;
        Key via{keys_[cur].cost + c.move.cost, keys_[cur].length + 1};
        if (!key_equal(via, keys_[it->second])) continue;
        ++options;
        if (!chosen) {
          chosen = std::move(c);
          chosen_id = it->second;
        }
      }
      // A tight path to the goal always exists from an on-path state.
      chosen->move.tie_broken = options > 1;
      a.total_cost += chosen->move.cost;
      a.moves.push_back(chosen->move);
      cur = *chosen_id;
    }
    return a;
  }

  const PetriNet& net_;
  const Trace& trace_;
  const CostScheme& costs_;
  const AlignOptions& options_;
  std::vector<std::uint32_t> id_rank_;

  std::unordered_map<StateKey, std::uint32_t, StateKeyHash> index_;
  std::vector<StateKey> states_;
  std::vector<Key> keys_;
  std::vector<std::vector<std::uint32_t>> preds_;
  std::vector<char> closed_;
  std::vector<char> reached_;
};

}  // namespace

Alignment align(const PetriNet& net, const Trace& trace, const CostScheme& costs, const AlignOptions& options) {
  return Search(net, trace, costs, options).run();
}

BatchAlignment align_log(const PetriNet& net, const EventLog& log, const CostScheme& costs,
                         const BatchOptions& options) {
  costs.validate();
  const std::size_t n = log.traces.size();
  std::vector<std::optional<Alignment>> results(n);
  std::vector<std::optional<AlignmentFailure>> failures(n);
  std::vector<std::exception_ptr> errors(n);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      const Trace& t = log.traces[i];
      try {
        results[i] = align(net, t, costs, options.align);
      } catch (const UnalignableTrace& e) {
        failures[i] = AlignmentFailure{i, t.case_id, "unalignable", e.what()};
        errors[i] = std::current_exception();
      } catch (const ResourceError& e) {
        failures[i] = AlignmentFailure{i, t.case_id, "budget_exceeded", e.what()};
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  BatchAlignment out;
  for (std::size_t i = 0; i < n; ++i) {
    if (results[i]) out.alignments.push_back(std::move(*results[i]));
    if (failures[i]) {
      if (options.fail_fast) std::rethrow_exception(errors[i]);
      out.failures.push_back(std::move(*failures[i]));
    }
  }
  return out;
}

std::vector<TransitionIndex> model_projection(const Alignment& a) {
  std::vector<TransitionIndex> out;
  for (const Move& m : a.moves)
    if (m.transition) out.push_back(*m.transition);
  return out;
}

std::string alignment_to_json(const Alignment& a, const PetriNet& net) {
  nlohmann::json moves = nlohmann::json::array();
  for (const Move& m : a.moves) {
    nlohmann::json j;
    j["kind"] = to_string(m.kind);
    if (m.event_index) j["event"] = *m.event_index;
    if (m.transition) j["transition"] = net.transition(*m.transition).id;
    j["cost"] = m.cost;
    if (m.tie_broken) j["tie"] = true;
    moves.push_back(std::move(j));
  }
  nlohmann::json j;
  j["case_id"] = a.case_id;
  j["cost"] = a.total_cost;
  j["moves"] = std::move(moves);
  return j.dump();
}

Alignment alignment_from_json(const std::string& line, const PetriNet& net) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed alignment record: ") + e.what());
  }
  try {
    Alignment a;
    a.case_id = j.at("case_id").get<std::string>();
    a.total_cost = j.at("cost").get<double>();
    for (const auto& jm : j.at("moves")) {
      Move m;
      std::string kind = jm.at("kind").get<std::string>();
      if (kind == "sync") m.kind = MoveKind::sync;
      else if (kind == "log") m.kind = MoveKind::log_only;
      else if (kind == "model") m.kind = MoveKind::model_only;
      else throw InputError("unknown move kind '" + kind + "'");
      if (jm.contains("event")) m.event_index = jm["event"].get<std::size_t>();
      if (jm.contains("transition")) {
        auto id = jm["transition"].get<std::string>();
        auto t = net.find_transition(id);
        if (!t) throw InputError("alignment references unknown transition '" + id + "'");
        m.transition = *t;
      }
      m.cost = jm.at("cost").get<double>();
      m.tie_broken = jm.value("tie", false);
      a.moves.push_back(std::move(m));
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed alignment record: ") + e.what());
  }
}

}  // namespace branchdrift
