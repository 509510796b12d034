#include "branchdrift/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

namespace branchdrift {

using nlohmann::json;
namespace fs = std::filesystem;

void RunConfig::validate() const {
  if (!(penalty >= 0.0)) throw ParameterError("penalty must be non-negative");
  if (min_size < 1) throw ParameterError("min-size must be at least 1");
  if (jobs < 1) throw ParameterError("jobs must be at least 1");
  costs.validate();
  auto readable = [](const std::string& p, const char* what) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError(std::string(what) + " file not readable: " + p);
  };
  if (sequences_path.empty()) {
    if (log_path.empty() || model_path.empty()) throw ParameterError("need --log and --model, or --sequences");
    readable(model_path, "model");
    readable(log_path, "log");
  } else {
    readable(sequences_path, "sequences");
  }
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64_hex(ss.str());
}

std::optional<std::size_t> state_budget_from_env() {
  const char* v = std::getenv("BRANCHDRIFT_STATE_BUDGET");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  unsigned long long n = std::strtoull(v, &end, 10);
  if (*end != '\0' || n == 0) throw ParameterError(std::string("invalid BRANCHDRIFT_STATE_BUDGET '") + v + "'");
  return static_cast<std::size_t>(n);
}

void write_warnings(const Warnings& warnings, std::ostream& err) {
  for (const Warning& w : warnings)
    err << json{{"level", "warning"}, {"stage", w.stage}, {"code", w.code}, {"message", w.message}}.dump() << '\n';
}

// ---------------------------------------------------------------- sequences

std::string sequences_to_json(const SequenceSet& set) {
  json places = json::array();
  for (const PlaceSequence& p : set.places) {
    json labels = json::array();
    for (const auto& l : p.labels) labels.push_back({{"label", l.label}, {"transition", l.transition_id}, {"name", l.name}});
    json elements = json::array();
    for (const auto& e : p.elements) {
      json je = {{"t", format_iso8601(e.timestamp)}, {"label", e.label}, {"case", e.case_id}, {"pos", e.model_move_position}};
      if (e.ambiguous) je["ambiguous"] = true;
      elements.push_back(std::move(je));
    }
    const auto& d = p.diagnostics;
    places.push_back({{"place", p.place_id},
                      {"place_name", p.place_name},
                      {"labels", labels},
                      {"elements", elements},
                      {"diagnostics",
                       {{"traces_seen", d.traces_seen},
                        {"traces_touching_place", d.traces_touching_place},
                        {"fallback_timestamps", d.fallback_timestamps},
                        {"skipped_empty_traces", d.skipped_empty_traces},
                        {"ambiguous_traversals", d.ambiguous_traversals},
                        {"tokens_produced", d.tokens_produced},
                        {"tokens_consumed", d.tokens_consumed},
                        {"missed_traversals", d.missed_traversals}}}});
  }
  return json{{"input_digests", set.input_digests}, {"places", places}}.dump() + "\n";
}

SequenceSet sequences_from_json(std::string_view text) {
  try {
    json j = json::parse(text);
    SequenceSet set;
    set.input_digests = j.at("input_digests").get<std::map<std::string, std::string>>();
    for (const json& jp : j.at("places")) {
      PlaceSequence p;
      p.place_id = jp.at("place").get<std::string>();
      p.place_name = jp.value("place_name", std::string{});
      for (const json& l : jp.at("labels"))
        p.labels.push_back({l.at("label").get<int>(), l.at("transition").get<std::string>(), l.at("name").get<std::string>()});
      for (std::size_t i = 0; i < p.labels.size(); ++i)
        if (p.labels[i].label != static_cast<int>(i + 1)) throw InputError("labels must be numbered 1..k in order");
      for (const json& je : jp.at("elements")) {
        auto ts = parse_iso8601(je.at("t").get<std::string>());
        if (!ts) throw InputError("bad element timestamp " + je.at("t").get<std::string>());
        int label = je.at("label").get<int>();
        if (label < 1 || label > static_cast<int>(p.labels.size()))
          throw InputError("element label " + std::to_string(label) + " out of range");
        p.elements.push_back({label, ts->instant, je.at("case").get<std::string>(), je.at("pos").get<std::size_t>(),
                              je.value("ambiguous", false)});
      }
      const json& d = jp.at("diagnostics");
      auto& pd = p.diagnostics;
      pd.traces_seen = d.value("traces_seen", std::size_t{0});
      pd.traces_touching_place = d.value("traces_touching_place", std::size_t{0});
      pd.fallback_timestamps = d.value("fallback_timestamps", std::size_t{0});
      pd.skipped_empty_traces = d.value("skipped_empty_traces", std::size_t{0});
      pd.ambiguous_traversals = d.value("ambiguous_traversals", std::size_t{0});
      pd.tokens_produced = d.value("tokens_produced", std::size_t{0});
      pd.tokens_consumed = d.value("tokens_consumed", std::size_t{0});
      pd.missed_traversals = d.value("missed_traversals", std::size_t{0});
      set.places.push_back(std::move(p));
    }
    return set;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed sequences file: ") + e.what());
  }
}

void dump_sequence_csvs(const SequenceSet& set, const std::string& directory) {
  fs::create_directories(directory);
  for (const PlaceSequence& p : set.places) {
    std::string safe = p.place_id;
    for (char& c : safe)
      if (c == '/' || c == '\\' || c == ':') c = '_';
    std::ofstream out(fs::path(directory) / (safe + ".csv"));
    if (!out) throw InputError("cannot write sequence dump in " + directory);
    out << "timestamp_iso,label,case_id\n";
    for (const auto& e : p.elements) out << format_iso8601(e.timestamp) << ',' << e.label << ',' << e.case_id << '\n';
  }
}

// ---------------------------------------------------------------- stages

std::vector<InterestingPlace> select_places(const PetriNet& net, const std::vector<std::string>& ids) {
  auto all = decision_places(net);
  if (ids.empty()) return all;
  std::vector<InterestingPlace> out;
  for (const std::string& id : ids) {
    auto it = std::find_if(all.begin(), all.end(), [&](const InterestingPlace& ip) { return net.place(ip.place).id == id; });
    if (it == all.end()) {
      std::string valid;
      for (const auto& ip : all) valid += (valid.empty() ? "" : ", ") + net.place(ip.place).id;
      throw ParameterError("'" + id + "' is not a decision place; valid ids: " + (valid.empty() ? "(none)" : valid));
    }
    out.push_back(*it);
  }
  return out;
}

SequenceSet extract_sequences(const PetriNet& net, const EventLog& log, const std::vector<Alignment>& alignments,
                              const std::vector<InterestingPlace>& places, Warnings& warnings) {
  SequenceSet set;
  for (const InterestingPlace& ip : places) {
    ChoiceSequence seq = extract(ip, alignments, log);
    warnings.insert(warnings.end(), seq.warnings.begin(), seq.warnings.end());
    set.places.push_back(describe(seq, net));
  }
  return set;
}

double sequence_gamma(const changepoint::EncodedSequence<double>& enc) {
  return enc.size() < 2 ? 1.0 : changepoint::median_gamma(enc.points);
}

changepoint::Segmentation segment_sequence(const PlaceSequence& seq, changepoint::SearchMethod method, double penalty,
                                           changepoint::Index min_size, double* gamma_out) {
  auto labels = seq.label_values();
  auto enc = changepoint::encode<double>(labels, static_cast<int>(std::max<std::size_t>(1, seq.labels.size())));
  double gamma = sequence_gamma(enc);
  if (gamma_out) *gamma_out = gamma;
  changepoint::CategoricalRbfCost<double> cost(enc, gamma);
  return changepoint::segment(cost, method, penalty, min_size);
}

DriftReport detect(const SequenceSet& set, const RunConfig& config, Warnings& warnings) {
  DriftReport report;
  auto& m = report.metadata;
  m.search = config.search == changepoint::SearchMethod::pelt ? "pelt" : "exact";
  m.penalty = config.penalty;
  m.min_size = config.min_size;
  m.costs = {{"sync", config.costs.sync},
             {"hidden_model", config.costs.hidden_model},
             {"visible_model", config.costs.visible_model},
             {"log", config.costs.log}};
  m.input_digests = set.input_digests;
  for (const PlaceSequence& seq : set.places) {
    double gamma = 1.0;
    auto segm = segment_sequence(seq, config.search, config.penalty, config.min_size, &gamma);
    report.places.push_back(summarize(seq, segm, gamma, &warnings));
  }
  return report;
}

namespace {

void write_output(const std::string& bytes, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << bytes;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  f << bytes;
}

}  // namespace

int run_detect(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Warnings warnings;
  std::string stage = "config";
  try {
    config.validate();
    SequenceSet set;
    if (!config.sequences_path.empty()) {
      stage = "extract";
      std::ifstream in(config.sequences_path, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      set = sequences_from_json(ss.str());
      if (!config.places.empty()) {
        std::vector<PlaceSequence> chosen;
        for (const auto& id : config.places) {
          auto it = std::find_if(set.places.begin(), set.places.end(), [&](const PlaceSequence& p) { return p.place_id == id; });
          if (it == set.places.end()) throw ParameterError("place '" + id + "' not present in " + config.sequences_path);
          chosen.push_back(*it);
        }
        set.places = std::move(chosen);
      }
    } else {
      stage = "petri_net";
      PnmlDocument model = read_pnml_file(config.model_path, config.pnml);
      warnings.insert(warnings.end(), model.warnings.begin(), model.warnings.end());
      auto findings = validate_structure(model.net);
      for (const Finding& f : findings) warnings.push_back({"petri_net", f.code, f.message});
      if (!findings.empty())
        warnings.push_back({"petri_net", "soundness_unchecked", "model is not a structurally valid workflow net"});
      if (config.strict && !findings.empty()) {
        write_warnings(warnings, err);
        return 1;
      }
      auto places = select_places(model.net, config.places);
      if (places.empty()) warnings.push_back({"petri_net", "no_decision_places", "model has no decision places"});

      stage = "event_log";
      EventLog log = read_xes_file(config.log_path);
      warnings.insert(warnings.end(), log.warnings.begin(), log.warnings.end());
      for (const EventError& e : log.event_errors)
        warnings.push_back({"event_log", "invalid_event",
                            "line " + std::to_string(e.line) + ": " + e.reason});

      stage = "alignment";
      BatchOptions bo;
      bo.align.state_budget = config.state_budget;
      bo.jobs = config.jobs;
      bo.fail_fast = config.fail_fast;
      BatchAlignment batch = align_log(model.net, log, config.costs, bo);
      for (const AlignmentFailure& f : batch.failures) warnings.push_back({"alignment", f.kind, f.message});
      if (!config.dump_alignments.empty()) {
        std::string lines;
        for (const Alignment& a : batch.alignments) lines += alignment_to_json(a, model.net) + "\n";
        write_output(lines, config.dump_alignments, out);
      }

      stage = "choice_sequence";
      set = extract_sequences(model.net, log, batch.alignments, places, warnings);
      set.input_digests = {{"log", file_digest(config.log_path)}, {"model", file_digest(config.model_path)}};
    }
    if (!config.dump_sequences_dir.empty()) dump_sequence_csvs(set, config.dump_sequences_dir);

    stage = "changepoint";
    DriftReport report = detect(set, config, warnings);
    stage = "drift_report";
    std::string bytes = render(report, config.format);
    write_warnings(warnings, err);
    write_output(bytes, config.output_path, out);
    return 0;
  } catch (const std::exception& e) {
    write_warnings(warnings, err);
    err << json{{"level", "error"}, {"stage", stage}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }
}

}  // namespace branchdrift
