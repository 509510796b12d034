#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "branchdrift/drift_report.hpp"
#include "support/test_support.hpp"
#include "xml.hpp"

using namespace branchdrift;
namespace cp = branchdrift::changepoint;

namespace {

PlaceSequence make_sequence(const std::vector<int>& labels, int k) {
  PlaceSequence s;
  s.place_id = "p";
  s.place_name = "decide";
  for (int l = 1; l <= k; ++l) s.labels.push_back({l, "t" + std::to_string(l), "L" + std::to_string(l)});
  for (std::size_t i = 0; i < labels.size(); ++i)
    s.elements.push_back({labels[i], fixtures::at_seconds(static_cast<std::int64_t>(i) * 60), "c" + std::to_string(i), 1});
  return s;
}

cp::Segmentation with_breakpoints(std::vector<cp::Index> b, cp::Index n) {
  cp::Segmentation s;
  s.breakpoints = std::move(b);
  s.n = n;
  return s;
}

DriftReport report_of(std::vector<PlaceReport> places) {
  DriftReport r;
  r.metadata.costs = {{"log", 1}, {"model", 1}};
  r.metadata.input_digests = {{"log", fnv1a64_hex("x")}};
  r.places = std::move(places);
  return r;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Summarize, TwoSegments) {
  auto seq = make_sequence({1, 1, 2, 2}, 2);
  auto rep = summarize(seq, with_breakpoints({2}, 4), 0.5);
  ASSERT_EQ(rep.segments.size(), 2u);
  EXPECT_EQ(rep.segments[0].counts, (std::map<int, std::size_t>{{1, 2}, {2, 0}}));
  EXPECT_DOUBLE_EQ(rep.segments[0].frequencies.at(1), 1.0);
  EXPECT_DOUBLE_EQ(rep.segments[1].frequencies.at(2), 1.0);
  EXPECT_EQ(rep.segments[1].start, 2u);
  EXPECT_EQ(rep.segments[1].end, 4u);
  EXPECT_EQ(rep.segments[1].start_ts, fixtures::at_seconds(120));
  EXPECT_EQ(rep.segments[1].end_ts, fixtures::at_seconds(180));
  ASSERT_EQ(rep.changes.size(), 1u);
  EXPECT_EQ(rep.changes[0].element_index, 2u);
  EXPECT_EQ(rep.changes[0].timestamp, fixtures::at_seconds(120));
  EXPECT_DOUBLE_EQ(rep.changes[0].delta_pp.at(1), -100.0);
  EXPECT_DOUBLE_EQ(rep.changes[0].delta_pp.at(2), 100.0);
  EXPECT_EQ(rep.sequence_length, 4u);
  EXPECT_DOUBLE_EQ(rep.gamma, 0.5);
}

TEST(Summarize, FrequenciesSumToOne) {
  std::mt19937_64 rng(4);
  for (int iter = 0; iter < 100; ++iter) {
    int k = 1 + static_cast<int>(rng() % 5);
    std::vector<int> labels(5 + rng() % 200);
    for (auto& l : labels) l = 1 + static_cast<int>(rng() % static_cast<unsigned>(k));
    auto seq = make_sequence(labels, k);
    std::vector<cp::Index> b;
    for (cp::Index t = 2; t + 2 <= static_cast<cp::Index>(labels.size()); t += 2 + static_cast<cp::Index>(rng() % 30))
      b.push_back(t);
    auto rep = summarize(seq, with_breakpoints(b, static_cast<cp::Index>(labels.size())), 1.0);
    std::size_t covered = 0;
    for (const auto& s : rep.segments) {
      double sum = 0;
      for (auto& [l, f] : s.frequencies) sum += f;
      EXPECT_NEAR(sum, 1.0, 1e-12);
      EXPECT_EQ(s.frequencies.size(), static_cast<std::size_t>(k));
      covered += s.end - s.start;
    }
    EXPECT_EQ(covered, labels.size());
    EXPECT_EQ(rep.changes.size(), b.size());
  }
}

TEST(Summarize, EmptySequenceWarns) {
  Warnings w;
  auto rep = summarize(make_sequence({}, 2), with_breakpoints({}, 0), 1.0, &w);
  EXPECT_TRUE(rep.segments.empty());
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].code, "empty_sequence");
  EXPECT_NO_THROW(render(report_of({rep}), ReportFormat::svg));
  EXPECT_NO_THROW(render(report_of({rep}), ReportFormat::csv));
}

TEST(Render, CsvRowPerSegmentAndLabel) {
  auto rep = summarize(make_sequence({1, 2, 3, 1, 1, 1, 3, 3}, 3), with_breakpoints({3, 6}, 8), 1.0);
  std::string csv = render(report_of({rep}), ReportFormat::csv);
  EXPECT_EQ(count(csv, "\n"), 1u + 3u * 3u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "place,segment,start_ts,end_ts,label,transition,count,frequency");
  EXPECT_NE(csv.find("p,0,2020-01-01T00:00:00.000Z,2020-01-01T00:02:00.000Z,1,L1,1,0.33333333333333331"),
            std::string::npos);
}

TEST(Render, JsonRoundTrip) {
  auto a = summarize(make_sequence({1, 1, 2, 2, 1, 2}, 2), with_breakpoints({2, 4}, 6), 0.5);
  auto b = summarize(make_sequence({2, 2, 2}, 3), with_breakpoints({}, 3), 1.0);
  b.place_id = "q";
  b.diagnostics = {{"fallback_timestamps", 2}};
  DriftReport r = report_of({a, b});
  std::string json = render(r, ReportFormat::json);
  DriftReport back = report_from_json(json);
  EXPECT_EQ(back, r);
  EXPECT_EQ(render(back, ReportFormat::json), json);
  EXPECT_THROW(report_from_json("{\"places\": 3}"), InputError);
}

TEST(Render, SvgWellFormedWithMarkers) {
  auto rep = summarize(make_sequence({1, 1, 2, 2, 1, 1, 3, 3}, 3), with_breakpoints({2, 4, 6}, 8), 1.0);
  std::string svg = render(report_of({rep}), ReportFormat::svg);
  auto root = xml::parse(svg);
  EXPECT_EQ(root->name, "svg");
  EXPECT_EQ(count(svg, "class=\"change-point\""), rep.segments.size() - 1);
  EXPECT_NE(svg.find("L3"), std::string::npos);
}

TEST(Render, Deterministic) {
  auto rep = summarize(make_sequence({1, 2, 1, 2, 2, 2}, 2), with_breakpoints({2}, 6), 0.25);
  for (auto fmt : {ReportFormat::json, ReportFormat::csv, ReportFormat::svg})
    EXPECT_EQ(render(report_of({rep}), fmt), render(report_of({rep}), fmt));
}

TEST(Render, FormatNames) {
  EXPECT_EQ(parse_report_format("json"), ReportFormat::json);
  EXPECT_EQ(parse_report_format("csv"), ReportFormat::csv);
  EXPECT_EQ(parse_report_format("svg"), ReportFormat::svg);
  EXPECT_THROW(parse_report_format("pdf"), ParameterError);
}

TEST(Digest, KnownVectors) {
  EXPECT_EQ(fnv1a64_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a64_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a64_hex("foobar"), "85944171f73967e8");
}

TEST(Describe, UsesDisplayNames) {
  auto net = read_pnml_file(fixtures::fixture("helpdesk.pnml")).net;
  auto places = decision_places(net);
  auto it = std::find_if(places.begin(), places.end(),
                         [&](const InterestingPlace& ip) { return net.place(ip.place).id == "p_after_take"; });
  ChoiceSequence cs;
  cs.place = *it;
  auto d = describe(cs, net);
  EXPECT_EQ(d.place_id, "p_after_take");
  ASSERT_EQ(d.labels.size(), 3u);
  EXPECT_EQ(d.labels[0].name, "Require upgrade");
  EXPECT_EQ(d.labels[1].transition_id, "t_wait");
  EXPECT_EQ(d.labels[2].name, "skip to Resolve ticket");
}
