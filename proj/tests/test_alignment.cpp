#include <gtest/gtest.h>

#include <random>

#include "branchdrift/alignment.hpp"
#include "support/test_support.hpp"

using namespace branchdrift;
using fixtures::make_trace;

namespace {

// Replays an alignment: model moves must be fireable in order, log moves must
// cover every event exactly once in order, and the final marking must match.
void expect_consistent(const PetriNet& net, const Trace& trace, const Alignment& a, const CostScheme& c) {
  Marking m = net.initial_marking();
  std::size_t next_event = 0;
  double cost = 0;
  for (const Move& mv : a.moves) {
    if (mv.event_index) {
      ASSERT_EQ(*mv.event_index, next_event);
      ++next_event;
    }
    if (mv.transition) {
      ASSERT_TRUE(is_enabled(net, m, *mv.transition));
      m = fire(net, m, *mv.transition);
    }
    const auto& t = mv.transition ? &net.transition(*mv.transition) : nullptr;
    switch (mv.kind) {
      case MoveKind::sync:
        ASSERT_TRUE(t && t->label);
        EXPECT_EQ(*t->label, trace.events[*mv.event_index].activity);
        EXPECT_DOUBLE_EQ(mv.cost, c.sync);
        break;
      case MoveKind::log_only:
        EXPECT_FALSE(mv.transition);
        EXPECT_DOUBLE_EQ(mv.cost, c.log);
        break;
      case MoveKind::model_only:
        EXPECT_FALSE(mv.event_index);
        EXPECT_DOUBLE_EQ(mv.cost, t->hidden() ? c.hidden_model : c.visible_model);
        break;
    }
    cost += mv.cost;
  }
  EXPECT_EQ(next_event, trace.events.size());
  EXPECT_EQ(m, net.final_marking());
  EXPECT_NEAR(cost, a.total_cost, 1e-12);
}

std::vector<std::string> projected_ids(const PetriNet& net, const Alignment& a) {
  std::vector<std::string> out;
  for (auto t : model_projection(a)) out.push_back(net.transition(t).id);
  return out;
}

}  // namespace

TEST(Align, FittingTraceIsAllSync) {
  PetriNet net = fixtures::choice_net();
  Trace t = make_trace("c", {"S", "A", "T"});
  Alignment a = align(net, t);
  EXPECT_DOUBLE_EQ(a.total_cost, 0.0);
  ASSERT_EQ(a.moves.size(), 3u);
  for (const auto& m : a.moves) EXPECT_EQ(m.kind, MoveKind::sync);
  EXPECT_EQ(projected_ids(net, a), (std::vector<std::string>{"tS", "tA", "tT"}));
}

TEST(Align, MissingChoiceInsertsModelMoveWithTie) {
  PetriNet net = fixtures::choice_net();
  Trace t = make_trace("c", {"S", "T"});
  Alignment a = align(net, t);
  EXPECT_DOUBLE_EQ(a.total_cost, 1.0);
  ASSERT_EQ(a.moves.size(), 3u);
  EXPECT_EQ(a.moves[0].kind, MoveKind::sync);
  EXPECT_EQ(a.moves[1].kind, MoveKind::model_only);
  EXPECT_EQ(net.transition(*a.moves[1].transition).id, "tA");
  EXPECT_TRUE(a.moves[1].tie_broken);
  EXPECT_EQ(a.moves[2].kind, MoveKind::sync);
  expect_consistent(net, t, a, {});
}

TEST(Align, ExtraEventBecomesLogMove) {
  PetriNet net = fixtures::choice_net();
  Trace t = make_trace("c", {"S", "X", "A", "T"});
  Alignment a = align(net, t);
  EXPECT_DOUBLE_EQ(a.total_cost, 1.0);
  ASSERT_EQ(a.moves.size(), 4u);
  EXPECT_EQ(a.moves[1].kind, MoveKind::log_only);
  EXPECT_EQ(*a.moves[1].event_index, 1u);
  for (const auto& m : a.moves) EXPECT_FALSE(m.tie_broken);
}

TEST(Align, EmptyTraceFollowsShortestModelRun) {
  PetriNet net = fixtures::choice_net();
  Alignment a = align(net, make_trace("c", {}));
  EXPECT_DOUBLE_EQ(a.total_cost, 3.0);
  EXPECT_EQ(projected_ids(net, a), (std::vector<std::string>{"tS", "tA", "tT"}));
}

TEST(Align, UnreachableFinalMarkingThrows) {
  PetriNet net;
  net.add_place("s", "", 1);
  auto e = net.add_place("e");
  net.add_transition("t", "A");
  net.add_arc("s", "t");
  Marking fin(2);
  fin[e] = 1;
  net.set_final_marking(fin);
  EXPECT_THROW(align(net, make_trace("c", {"A"})), UnalignableTrace);
}

TEST(Align, BudgetExceededThrowsResourceError) {
  PetriNet net = fixtures::choice_net();
  AlignOptions opts;
  opts.state_budget = 2;
  EXPECT_THROW(align(net, make_trace("c", {"X", "Y", "Z", "S", "A", "T"}), {}, opts), ResourceError);
}

TEST(Align, InvalidCostsRejected) {
  CostScheme bad;
  bad.log = -1;
  EXPECT_THROW(align(fixtures::choice_net(), make_trace("c", {"S"}), bad), ParameterError);
}

// The search must agree with an independent Bellman-Ford over the explicit
// synchronous product, and its output must replay consistently.
TEST(Align, MatchesExhaustiveOracleOnRandomNets) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> alphabet{"a", "b", "c", "d", "z"};
  int checked = 0;
  for (int iter = 0; iter < 120; ++iter) {
    PetriNet net = fixtures::RandomNetBuilder(rng, 6).build();
    for (int j = 0; j < 3; ++j) {
      std::vector<std::string> acts;
      std::size_t len = rng() % 7;
      if (j == 0) {
        if (auto run = fixtures::random_run(net, rng)) acts = *run;
      } else {
        for (std::size_t e = 0; e < len; ++e) acts.push_back(alphabet[rng() % alphabet.size()]);
      }
      Trace t = make_trace("c", acts);
      double expected = fixtures::oracle_alignment_cost(net, t);
      Alignment a = align(net, t);
      ASSERT_NEAR(a.total_cost, expected, 1e-9) << "iter " << iter;
      expect_consistent(net, t, a, {});
      if (j == 0 && acts.size() > 0) EXPECT_LE(a.total_cost, 0.0);
      ++checked;
    }
  }
  EXPECT_GE(checked, 300);
}

TEST(Align, CostBoundedByAllLogPlusShortestRun) {
  std::mt19937_64 rng(23);
  for (int iter = 0; iter < 60; ++iter) {
    PetriNet net = fixtures::RandomNetBuilder(rng, 5).build();
    Trace t = make_trace("c", {"a", "q", "b"});
    double empty_cost = align(net, make_trace("e", {})).total_cost;
    EXPECT_LE(align(net, t).total_cost, empty_cost + 3.0 + 1e-12);
  }
}

TEST(Align, CustomCostSchemeMatchesOracle) {
  std::mt19937_64 rng(31);
  CostScheme c;
  c.log = 2;
  c.visible_model = 3;
  c.hidden_model = 0.5;
  for (int iter = 0; iter < 60; ++iter) {
    PetriNet net = fixtures::RandomNetBuilder(rng, 5).build();
    Trace t = make_trace("c", {"a", "b", "z"});
    Alignment a = align(net, t, c);
    EXPECT_NEAR(a.total_cost, fixtures::oracle_alignment_cost(net, t, 2, 3, 0.5), 1e-9);
    expect_consistent(net, t, a, c);
  }
}

TEST(AlignLog, PreservesOrderAndReportsFailures) {
  PetriNet net;
  net.add_place("s", "", 1);
  auto e = net.add_place("e");
  net.add_place("dead");
  net.add_transition("t", "A");
  net.add_arc("s", "t");
  net.add_arc("t", "e");
  EventLog log;
  log.traces = {make_trace("x", {"A"}), make_trace("y", {"B"}), make_trace("z", {})};
  Marking fin(3);
  fin[e] = 1;
  net.set_final_marking(fin);
  auto ok = align_log(net, log);
  ASSERT_EQ(ok.alignments.size(), 3u);
  EXPECT_EQ(ok.alignments[1].case_id, "y");

  Marking unreachable(3);
  unreachable[*net.find_place("dead")] = 1;
  net.set_final_marking(unreachable);
  auto bad = align_log(net, log);
  EXPECT_TRUE(bad.alignments.empty());
  ASSERT_EQ(bad.failures.size(), 3u);
  EXPECT_EQ(bad.failures[0].kind, "unalignable");
  EXPECT_EQ(bad.failures[2].trace_index, 2u);
  BatchOptions ff;
  ff.fail_fast = true;
  EXPECT_THROW(align_log(net, log, {}, ff), UnalignableTrace);
}

TEST(AlignLog, JobsDoNotChangeOutput) {
  auto net = read_pnml_file(fixtures::fixture("helpdesk.pnml")).net;
  std::mt19937_64 rng(2);
  EventLog log;
  for (int i = 0; i < 150; ++i) {
    auto run = fixtures::random_run(net, rng, 20);
    std::vector<std::string> acts = run ? *run : std::vector<std::string>{};
    if (i % 3 == 0 && !acts.empty()) acts.erase(acts.begin() + static_cast<long>(rng() % acts.size()));
    if (i % 5 == 0) acts.push_back("Noise");
    log.traces.push_back(make_trace("c" + std::to_string(i), acts, i * 100));
  }
  BatchOptions one, many;
  many.jobs = 4;
  auto a = align_log(net, log, {}, one);
  auto b = align_log(net, log, {}, many);
  ASSERT_EQ(a.alignments.size(), b.alignments.size());
  for (std::size_t i = 0; i < a.alignments.size(); ++i)
    EXPECT_EQ(alignment_to_json(a.alignments[i], net), alignment_to_json(b.alignments[i], net));
}

TEST(AlignmentJson, RoundTrip) {
  PetriNet net = fixtures::choice_net();
  Alignment a = align(net, make_trace("case 1", {"S", "X", "T"}));
  std::string line = alignment_to_json(a, net);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  Alignment b = alignment_from_json(line, net);
  EXPECT_EQ(alignment_to_json(b, net), line);
  EXPECT_EQ(b.case_id, "case 1");
  EXPECT_DOUBLE_EQ(b.total_cost, a.total_cost);
  EXPECT_THROW(alignment_from_json("{\"case_id\":\"c\",\"cost\":0,\"moves\":[{\"kind\":\"sync\",\"event\":0,"
                                   "\"transition\":\"nope\",\"cost\":0,\"tie\":false}]}",
                                   net),
               InputError);
}
