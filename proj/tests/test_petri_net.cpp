#include <gtest/gtest.h>

#include <random>

#include "branchdrift/petri_net.hpp"
#include "support/test_support.hpp"

using namespace branchdrift;

namespace {

std::string pnml(const std::string& body, const std::string& finals = "") {
  return "<pnml><net id=\"n\"><page id=\"pg\">" + body + "</page>" + finals + "</net></pnml>";
}

bool has_code(const std::vector<Finding>& f, const std::string& code) {
  return std::any_of(f.begin(), f.end(), [&](const Finding& x) { return x.code == code; });
}

}  // namespace

TEST(ParsePnml, ChoiceFixture) {
  auto doc = read_pnml_file(fixtures::fixture("choice.pnml"));
  const PetriNet& net = doc.net;
  EXPECT_EQ(net.place_count(), 4u);
  EXPECT_EQ(net.transition_count(), 4u);
  EXPECT_EQ(net.arc_count(), 8u);
  EXPECT_TRUE(doc.warnings.empty());
  auto o = net.find_place("o");
  ASSERT_TRUE(o);
  EXPECT_EQ(net.final_marking()[*o], 1u);
  EXPECT_EQ(net.initial_marking()[*net.find_place("i")], 1u);

  auto places = decision_places(net);
  ASSERT_EQ(places.size(), 1u);
  EXPECT_EQ(net.place(places[0].place).id, "p");
  ASSERT_EQ(places[0].arity(), 2u);
  EXPECT_EQ(*net.transition(places[0].outgoing[0]).label, "A");  // label 1
  EXPECT_EQ(*net.transition(places[0].outgoing[1]).label, "C");  // label 2
  EXPECT_TRUE(validate_structure(net).empty());
}

TEST(ParsePnml, HelpdeskFixtureDecisionPlace) {
  auto doc = read_pnml_file(fixtures::fixture("helpdesk.pnml"));
  const PetriNet& net = doc.net;
  for (const char* name : {"Take in charge ticket", "Wait", "Require upgrade", "Resolve ticket"}) {
    bool found = false;
    for (std::uint32_t t = 0; t < net.transition_count(); ++t)
      found |= net.transition(TransitionIndex{t}).label == std::optional<std::string>(name);
    EXPECT_TRUE(found) << name;
  }
  EXPECT_TRUE(validate_structure(net).empty());
  auto places = decision_places(net);
  auto it = std::find_if(places.begin(), places.end(),
                         [&](const InterestingPlace& ip) { return net.place(ip.place).id == "p_after_take"; });
  ASSERT_NE(it, places.end());
  ASSERT_EQ(it->arity(), 3u);
  EXPECT_EQ(display_name(net, it->outgoing[0]), "Require upgrade");
  EXPECT_EQ(display_name(net, it->outgoing[1]), "Wait");
  EXPECT_TRUE(net.transition(it->outgoing[2]).hidden());
  EXPECT_EQ(display_name(net, it->outgoing[2]), "skip to Resolve ticket");
  ASSERT_EQ(it->incoming.size(), 1u);
  EXPECT_EQ(*net.transition(it->incoming[0]).label, "Take in charge ticket");
}

TEST(ParsePnml, InvisibleDetection) {
  auto doc = parse_pnml(pnml(
      "<place id=\"s\"><initialMarking><text>1</text></initialMarking></place><place id=\"e\"/>"
      "<transition id=\"t1\"/>"
      "<transition id=\"t2\"><name><text>tau</text></name></transition>"
      "<transition id=\"t3\"><name><text>skip_5</text></name></transition>"
      "<transition id=\"t4\"><name><text>Visible</text></name><toolspecific tool=\"ProM\" activity=\"$invisible$\"/></transition>"
      "<transition id=\"t5\"><name><text>Visible</text></name></transition>"
      "<arc id=\"a\" source=\"s\" target=\"t1\"/><arc id=\"b\" source=\"t1\" target=\"e\"/>"));
  const PetriNet& net = doc.net;
  for (const char* id : {"t1", "t2", "t3", "t4"}) EXPECT_TRUE(net.transition(*net.find_transition(id)).hidden()) << id;
  EXPECT_FALSE(net.transition(*net.find_transition("t5")).hidden());

  PnmlOptions custom;
  custom.invisible_pattern = "silent";
  auto doc2 = parse_pnml(pnml("<place id=\"s\"/><transition id=\"t\"><name><text>tau</text></name></transition>"), custom);
  EXPECT_FALSE(doc2.net.transition(TransitionIndex{0}).hidden());
}

TEST(ParsePnml, FinalMarkingInferredFromSinks) {
  auto doc = parse_pnml(pnml(
      "<place id=\"s\"><initialMarking><text>1</text></initialMarking></place><place id=\"e\"/>"
      "<transition id=\"t\"><name><text>A</text></name></transition>"
      "<arc id=\"a\" source=\"s\" target=\"t\"/><arc id=\"b\" source=\"t\" target=\"e\"/>"));
  EXPECT_EQ(doc.net.final_marking()[*doc.net.find_place("e")], 1u);
  EXPECT_EQ(doc.net.final_marking().total(), 1u);
  ASSERT_EQ(doc.warnings.size(), 1u);
  EXPECT_EQ(doc.warnings[0].code, "inferred_final_marking");
}

TEST(ParsePnml, StructuralErrors) {
  EXPECT_THROW(parse_pnml(pnml("<place id=\"s\"/><arc id=\"a\" source=\"s\" target=\"nope\"/>")), InputError);
  EXPECT_THROW(parse_pnml(pnml("<place id=\"s\"/><place id=\"e\"/><arc id=\"a\" source=\"s\" target=\"e\"/>")),
               InputError);
  EXPECT_THROW(parse_pnml(pnml("<transition id=\"a\"/><transition id=\"b\"/><arc id=\"x\" source=\"a\" target=\"b\"/>")),
               InputError);
  EXPECT_THROW(parse_pnml(pnml("<place id=\"s\"/><transition id=\"t\"/>"
                               "<arc id=\"a\" source=\"s\" target=\"t\"><inscription><text>2</text></inscription></arc>")),
               InputError);
  EXPECT_THROW(parse_pnml("<pnml><net id=\"a\"/><net id=\"b\"/></pnml>"), InputError);
  EXPECT_THROW(parse_pnml("<pnml><net>"), XmlSyntaxError);
}

TEST(ParsePnml, SinglePlaceNoTransitions) {
  auto doc = parse_pnml(pnml("<place id=\"only\"><initialMarking><text>1</text></initialMarking></place>"));
  EXPECT_EQ(doc.net.place_count(), 1u);
  EXPECT_TRUE(validate_structure(doc.net).empty());
  EXPECT_TRUE(decision_places(doc.net).empty());
}

TEST(ValidateStructure, Findings) {
  PetriNet isolated = fixtures::choice_net();
  isolated.add_place("lonely");
  auto f1 = validate_structure(isolated);
  EXPECT_TRUE(has_code(f1, "disconnected_node"));

  PetriNet two_sources;
  two_sources.add_place("s1", "", 1);
  two_sources.add_place("s2");
  auto e = two_sources.add_place("e");
  two_sources.add_transition("t", "A");
  two_sources.add_arc("s1", "t");
  two_sources.add_arc("s2", "t");
  two_sources.add_arc("t", "e");
  Marking fin(3);
  fin[e] = 1;
  two_sources.set_final_marking(fin);
  EXPECT_TRUE(has_code(validate_structure(two_sources), "not_single_source"));

  PetriNet dead_end;
  dead_end.add_place("s", "", 1);
  dead_end.add_place("e");
  dead_end.add_transition("t", "A");
  dead_end.add_transition("u", "B");
  dead_end.add_arc("s", "t");
  dead_end.add_arc("t", "e");
  dead_end.add_arc("s", "u");
  EXPECT_TRUE(has_code(validate_structure(dead_end), "dead_end_transition"));
}

TEST(Firing, EnabledAndFire) {
  PetriNet net = fixtures::choice_net();
  auto en = enabled(net, net.initial_marking());
  ASSERT_EQ(en.size(), 1u);
  EXPECT_EQ(net.transition(en[0]).id, "tS");
  EXPECT_TRUE(enabled(net, Marking(net.place_count())).empty());

  Marking m = fire(net, net.initial_marking(), en[0]);
  EXPECT_EQ(m[*net.find_place("p")], 1u);
  EXPECT_EQ(m.total(), 1u);
  auto choice = enabled(net, m);
  ASSERT_EQ(choice.size(), 2u);
  EXPECT_EQ(net.transition(choice[0]).id, "tA");
  EXPECT_EQ(net.transition(choice[1]).id, "tC");
  EXPECT_EQ(unfire(net, m, en[0]), net.initial_marking());
  EXPECT_THROW(fire(net, net.initial_marking(), *net.find_transition("tT")), PreconditionError);
}

// Random firing on block-structured nets: every arc moves exactly one token,
// markings stay 1-bounded for these safe nets, and unfire inverts fire.
TEST(Firing, RandomSequencesConserveTokensPerArc) {
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 200; ++iter) {
    PetriNet net = fixtures::RandomNetBuilder(rng, 6).build();
    Marking m = net.initial_marking();
    for (int step = 0; step < 20; ++step) {
      auto en = enabled(net, m);
      if (en.empty()) break;
      auto t = en[rng() % en.size()];
      Marking next = fire(net, m, t);
      auto delta = static_cast<std::int64_t>(next.total()) - static_cast<std::int64_t>(m.total());
      EXPECT_EQ(delta, static_cast<std::int64_t>(net.postset(t).size()) - static_cast<std::int64_t>(net.preset(t).size()));
      for (auto c : next.tokens()) EXPECT_LE(c, 1u);
      EXPECT_EQ(unfire(net, next, t), m);
      m = next;
    }
  }
}

// decision_places agrees with an exhaustive out-degree count, and the
// labeling is a bijection onto 1..k that is stable across calls.
TEST(DecisionPlaces, MatchesDegreeCountAndIsDeterministic) {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 200; ++iter) {
    PetriNet net = fixtures::RandomNetBuilder(rng, 6).build();
    std::size_t expected = 0;
    for (std::uint32_t p = 0; p < net.place_count(); ++p) {
      std::size_t out = 0;
      for (std::uint32_t t = 0; t < net.transition_count(); ++t)
        for (PlaceIndex q : net.preset(TransitionIndex{t})) out += q.value == p;
      expected += out >= 2;
    }
    auto a = decision_places(net);
    auto b = decision_places(net);
    ASSERT_EQ(a.size(), expected);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].outgoing, b[i].outgoing);
      for (std::size_t l = 0; l < a[i].arity(); ++l) EXPECT_EQ(a[i].label_of(a[i].outgoing[l]), static_cast<int>(l + 1));
      // visible before hidden
      bool seen_hidden = false;
      for (auto t : a[i].outgoing) {
        if (net.transition(t).hidden()) seen_hidden = true;
        else EXPECT_FALSE(seen_hidden);
      }
    }
  }
}

TEST(DecisionPlaces, SequentialNetHasNone) {
  PetriNet net;
  net.add_place("a", "", 1);
  net.add_place("b");
  net.add_place("c");
  net.add_transition("x", "X");
  net.add_transition("y", "Y");
  net.add_arc("a", "x");
  net.add_arc("x", "b");
  net.add_arc("b", "y");
  net.add_arc("y", "c");
  EXPECT_TRUE(decision_places(net).empty());
}

TEST(DisplayName, AmbiguousHiddenIsTau) {
  PetriNet net;
  net.add_place("s", "", 1);
  net.add_place("m");
  net.add_place("e");
  net.add_transition("h", std::nullopt);
  net.add_transition("x", "X");
  net.add_transition("y", "Y");
  net.add_arc("s", "h");
  net.add_arc("h", "m");
  net.add_arc("m", "x");
  net.add_arc("m", "y");
  net.add_arc("x", "e");
  net.add_arc("y", "e");
  EXPECT_EQ(display_name(net, *net.find_transition("h")), "\xcf\x84");
}
