#include <gtest/gtest.h>

#include "branchdrift/choice_sequence.hpp"
#include "support/test_support.hpp"

using namespace branchdrift;
using fixtures::make_trace;

namespace {

struct Scenario {
  PetriNet net;
  InterestingPlace place;
  EventLog log;
  std::vector<Alignment> alignments;

  void align_all() {
    alignments = align_log(net, log).alignments;
  }
};

Scenario choice_model(std::vector<Trace> traces) {
  Scenario s;
  s.net = fixtures::choice_net();
  s.place = decision_places(s.net).at(0);
  s.log.traces = std::move(traces);
  s.align_all();
  return s;
}

}  // namespace

TEST(Extract, FittingTracesGiveLabelsInTimeOrder) {
  auto s = choice_model({make_trace("c2", {"S", "C", "T"}, 100), make_trace("c1", {"S", "A", "T"}, 0)});
  auto seq = extract(s.place, s.alignments, s.log);
  EXPECT_EQ(seq.labels(), (std::vector<int>{1, 2}));
  EXPECT_EQ(seq.elements[0].case_id, "c1");
  EXPECT_EQ(seq.elements[0].timestamp, fixtures::at_seconds(0));
  EXPECT_EQ(seq.elements[1].timestamp, fixtures::at_seconds(100));
  EXPECT_EQ(seq.elements[0].model_move_position, 1u);
  EXPECT_EQ(seq.diagnostics.traces_seen, 2u);
  EXPECT_EQ(seq.diagnostics.traces_touching_place, 2u);
  EXPECT_EQ(seq.diagnostics.tokens_produced, 2u);
  EXPECT_EQ(seq.diagnostics.tokens_consumed, 2u);
  EXPECT_EQ(seq.diagnostics.missed_traversals, 0u);
  EXPECT_EQ(seq.diagnostics.ambiguous_traversals, 0u);
}

TEST(Extract, SkippedChoiceIsAmbiguous) {
  auto s = choice_model({make_trace("c", {"S", "T"}, 7)});
  auto seq = extract(s.place, s.alignments, s.log);
  ASSERT_EQ(seq.elements.size(), 1u);
  EXPECT_EQ(seq.elements[0].label, 1);
  EXPECT_TRUE(seq.elements[0].ambiguous);
  EXPECT_EQ(seq.elements[0].timestamp, fixtures::at_seconds(7));
  EXPECT_EQ(seq.diagnostics.ambiguous_traversals, 1u);
}

TEST(Extract, TimestampFallsBackToFirstEvent) {
  // Log starts with noise, then skips S: the incoming move tS is a model
  // move with no earlier event-carrying move.
  auto s = choice_model({make_trace("c", {"A", "T"}, 50)});
  auto seq = extract(s.place, s.alignments, s.log);
  ASSERT_EQ(seq.elements.size(), 1u);
  EXPECT_EQ(seq.elements[0].timestamp, fixtures::at_seconds(50));
  EXPECT_EQ(seq.diagnostics.fallback_timestamps, 1u);
}

TEST(Extract, EmptyTracesSkipped) {
  auto s = choice_model({make_trace("e", {}), make_trace("c", {"S", "C", "T"})});
  auto seq = extract(s.place, s.alignments, s.log);
  EXPECT_EQ(seq.labels(), (std::vector<int>{2}));
  EXPECT_EQ(seq.diagnostics.skipped_empty_traces, 1u);
}

TEST(Extract, LoopYieldsOneElementPerVisit) {
  // i -S-> p; p -A-> p (loop back via hidden), p -B-> o
  Scenario s;
  s.net.add_place("i", "", 1);
  s.net.add_place("p");
  s.net.add_place("q");
  auto o = s.net.add_place("o");
  s.net.add_transition("tS", "S");
  s.net.add_transition("tA", "A");
  s.net.add_transition("tB", "B");
  s.net.add_transition("back", std::nullopt);
  s.net.add_arc("i", "tS");
  s.net.add_arc("tS", "p");
  s.net.add_arc("p", "tA");
  s.net.add_arc("tA", "q");
  s.net.add_arc("q", "back");
  s.net.add_arc("back", "p");
  s.net.add_arc("p", "tB");
  s.net.add_arc("tB", "o");
  Marking fin(4);
  fin[o] = 1;
  s.net.set_final_marking(fin);
  s.place = decision_places(s.net).at(0);
  s.log.traces = {make_trace("c", {"S", "A", "A", "B"})};
  s.align_all();
  auto seq = extract(s.place, s.alignments, s.log);
  EXPECT_EQ(seq.labels(), (std::vector<int>{1, 1, 2}));
  EXPECT_EQ(seq.elements[1].timestamp, fixtures::at_seconds(1));
  EXPECT_EQ(seq.diagnostics.tokens_produced, 3u);
  EXPECT_EQ(seq.diagnostics.missed_traversals, 0u);
}

TEST(Extract, InitialTokenCountsAsProduced) {
  PetriNet net;
  net.add_place("p", "", 1);
  auto o = net.add_place("o");
  net.add_transition("tA", "A");
  net.add_transition("tB", "B");
  net.add_arc("p", "tA");
  net.add_arc("p", "tB");
  net.add_arc("tA", "o");
  net.add_arc("tB", "o");
  Marking fin(2);
  fin[o] = 1;
  net.set_final_marking(fin);
  EventLog log;
  log.traces = {make_trace("c", {"B"})};
  auto al = align_log(net, log).alignments;
  auto seq = extract(decision_places(net).at(0), al, log);
  EXPECT_TRUE(seq.elements.empty());
  EXPECT_EQ(seq.diagnostics.tokens_produced, 1u);
  EXPECT_EQ(seq.diagnostics.tokens_consumed, 1u);
  EXPECT_EQ(seq.diagnostics.missed_traversals, 1u);
}

TEST(Extract, RemovingTraceRemovesOnlyItsElements) {
  auto net = read_pnml_file(fixtures::fixture("helpdesk.pnml")).net;
  auto places = decision_places(net);
  auto place = *std::find_if(places.begin(), places.end(),
                             [&](const InterestingPlace& ip) { return net.place(ip.place).id == "p_after_take"; });
  EventLog full;
  full.traces = {make_trace("a", {"Assign seriousness", "Take in charge ticket", "Wait", "Resolve ticket", "Closed"}, 0),
                 make_trace("b", {"Closed"}, 10),
                 make_trace("c", {"Take in charge ticket", "Resolve ticket", "Closed"}, 20)};
  auto seq_full = extract(place, align_log(net, full).alignments, full);
  EventLog reduced = full;
  reduced.traces.erase(reduced.traces.begin() + 1);
  auto seq_red = extract(place, align_log(net, reduced).alignments, reduced);
  std::vector<int> without_b;
  for (const auto& e : seq_full.elements)
    if (e.case_id != "b") without_b.push_back(e.label);
  EXPECT_EQ(without_b, seq_red.labels());
  EXPECT_EQ(seq_red.labels(), (std::vector<int>{2, 3}));
}

TEST(Extract, UnknownCaseWarns) {
  auto s = choice_model({make_trace("c", {"S", "A", "T"})});
  EventLog other;
  auto seq = extract(s.place, s.alignments, other);
  EXPECT_TRUE(seq.elements.empty());
  EXPECT_FALSE(seq.warnings.empty());
}

TEST(Summary, CountsEveryLabel) {
  auto s = choice_model({make_trace("a", {"S", "A", "T"}), make_trace("b", {"S", "A", "T"}, 5)});
  auto sum = diagnostics(extract(s.place, s.alignments, s.log));
  EXPECT_EQ(sum.length, 2u);
  EXPECT_EQ(sum.label_counts.at(1), 2u);
  EXPECT_EQ(sum.label_counts.at(2), 0u);
  EXPECT_DOUBLE_EQ(sum.traversals_per_trace, 1.0);
}
