// branchdrift: detect branching-frequency changes at decision places of a
// Petri net from an event log.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "branchdrift/pipeline.hpp"
#include "branchdrift/synth.hpp"

using namespace branchdrift;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& bytes, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << bytes;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << bytes;
}

int fail(const std::string& stage, const std::exception& e) {
  std::cerr << json{{"level", "error"}, {"stage", stage}, {"message", e.what()}}.dump() << '\n';
  return 2;
}

json places_json(const PetriNet& net, const std::vector<InterestingPlace>& places) {
  json arr = json::array();
  for (const auto& ip : places) {
    json labels = json::array();
    for (std::size_t i = 0; i < ip.outgoing.size(); ++i)
      labels.push_back({{"label", i + 1},
                        {"transition", net.transition(ip.outgoing[i]).id},
                        {"name", display_name(net, ip.outgoing[i])},
                        {"hidden", net.transition(ip.outgoing[i]).hidden()}});
    json incoming = json::array();
    for (auto t : ip.incoming) incoming.push_back(display_name(net, t));
    arr.push_back({{"place", net.place(ip.place).id},
                   {"name", net.place(ip.place).name},
                   {"k", ip.arity()},
                   {"labels", labels},
                   {"incoming", incoming}});
  }
  return arr;
}

// Options shared by every subcommand that reads a model.
struct ModelArgs {
  std::string model;
  std::string invisible = PnmlOptions{}.invisible_pattern;
  PnmlOptions options() const { return {invisible}; }
};

void add_model_options(CLI::App* cmd, ModelArgs& args, bool required = true) {
  auto* opt = cmd->add_option("--model", args.model, "PNML model");
  if (required) opt->required();
  cmd->add_option("--invisible-pattern", args.invisible, "regex (full match, case-insensitive) for hidden transition names")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect branching-frequency changes at decision places of a Petri net"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(BRANCHDRIFT_VERSION));

  int exit_code = 0;

  // log-stats
  std::string log_path;
  auto* log_stats_cmd = app.add_subcommand("log-stats", "Print event log statistics as JSON");
  log_stats_cmd->add_option("--log", log_path, "XES or XES.gz event log")->required();
  log_stats_cmd->callback([&] {
    try {
      EventLog log = read_xes_file(log_path);
      write_warnings(log.warnings, std::cerr);
      std::cout << log_stats_json(log_stats(log)) << '\n';
    } catch (const std::exception& e) {
      exit_code = fail("event_log", e);
    }
  });

  // validate-model
  ModelArgs vm;
  bool vm_strict = false;
  auto* validate_cmd = app.add_subcommand("validate-model", "Report workflow-net structure findings");
  add_model_options(validate_cmd, vm);
  validate_cmd->add_flag("--strict", vm_strict, "exit 1 when there are findings");
  validate_cmd->callback([&] {
    try {
      PnmlDocument doc = read_pnml_file(vm.model, vm.options());
      write_warnings(doc.warnings, std::cerr);
      auto findings = validate_structure(doc.net);
      json arr = json::array();
      for (const auto& f : findings) arr.push_back({{"code", f.code}, {"node", f.node}, {"message", f.message}});
      std::cout << json{{"places", doc.net.place_count()},
                        {"transitions", doc.net.transition_count()},
                        {"arcs", doc.net.arc_count()},
                        {"findings", arr}}
                       .dump(2)
                << '\n';
      if (vm_strict && !findings.empty()) exit_code = 1;
    } catch (const std::exception& e) {
      exit_code = fail("petri_net", e);
    }
  });

  // list-places
  ModelArgs lp;
  auto* list_cmd = app.add_subcommand("list-places", "List decision places and their arc labels");
  add_model_options(list_cmd, lp);
  list_cmd->callback([&] {
    try {
      PnmlDocument doc = read_pnml_file(lp.model, lp.options());
      write_warnings(doc.warnings, std::cerr);
      auto places = decision_places(doc.net);
      if (places.empty()) write_warnings({{"petri_net", "no_decision_places", "model has no decision places"}}, std::cerr);
      std::cout << places_json(doc.net, places).dump(2) << '\n';
    } catch (const std::exception& e) {
      exit_code = fail("petri_net", e);
    }
  });

  // align
  ModelArgs al;
  std::string al_log, al_out;
  unsigned al_jobs = 1;
  CostScheme al_costs;
  std::size_t al_budget = AlignOptions{}.state_budget;
  auto* align_cmd = app.add_subcommand("align", "Align every trace; JSON lines (case_id, cost, moves)");
  add_model_options(align_cmd, al);
  align_cmd->add_option("--log", al_log, "XES event log")->required();
  align_cmd->add_option("--out", al_out, "output file (default stdout)");
  align_cmd->add_option("--jobs", al_jobs, "parallel alignment workers")->capture_default_str();
  align_cmd->add_option("--log-cost", al_costs.log)->capture_default_str();
  align_cmd->add_option("--model-cost", al_costs.visible_model)->capture_default_str();
  align_cmd->add_option("--hidden-cost", al_costs.hidden_model)->capture_default_str();
  align_cmd->add_option("--state-budget", al_budget)->capture_default_str();
  align_cmd->callback([&] {
    std::string stage = "petri_net";
    try {
      if (auto env = state_budget_from_env()) al_budget = *env;
      PnmlDocument doc = read_pnml_file(al.model, al.options());
      write_warnings(doc.warnings, std::cerr);
      stage = "event_log";
      EventLog log = read_xes_file(al_log);
      write_warnings(log.warnings, std::cerr);
      stage = "alignment";
      BatchOptions bo;
      bo.jobs = al_jobs;
      bo.align.state_budget = al_budget;
      auto batch = align_log(doc.net, log, al_costs, bo);
      Warnings w;
      for (const auto& f : batch.failures) w.push_back({"alignment", f.kind, f.message});
      write_warnings(w, std::cerr);
      std::string lines;
      for (const auto& a : batch.alignments) lines += alignment_to_json(a, doc.net) + "\n";
      emit(lines, al_out);
    } catch (const std::exception& e) {
      exit_code = fail(stage, e);
    }
  });

  // extract
  ModelArgs ex;
  std::string ex_log, ex_alignments, ex_out, ex_dump;
  std::vector<std::string> ex_places;
  auto* extract_cmd = app.add_subcommand("extract", "Build choice sequences from alignments");
  add_model_options(extract_cmd, ex);
  extract_cmd->add_option("--log", ex_log, "XES event log")->required();
  extract_cmd->add_option("--alignments", ex_alignments, "JSON lines written by 'align'")->required();
  extract_cmd->add_option("--places", ex_places, "decision place ids (default: all)")->delimiter(',');
  extract_cmd->add_flag("--all-places", "select every decision place (default)");
  extract_cmd->add_option("--out", ex_out, "output file (default stdout)");
  extract_cmd->add_option("--dump-sequences", ex_dump, "write one CSV per place into this directory");
  extract_cmd->callback([&] {
    std::string stage = "petri_net";
    try {
      PnmlDocument doc = read_pnml_file(ex.model, ex.options());
      write_warnings(doc.warnings, std::cerr);
      auto places = select_places(doc.net, ex_places);
      stage = "event_log";
      EventLog log = read_xes_file(ex_log);
      write_warnings(log.warnings, std::cerr);
      stage = "alignment";
      std::vector<Alignment> alignments;
      std::istringstream lines(slurp(ex_alignments));
      for (std::string line; std::getline(lines, line);)
        if (!line.empty()) alignments.push_back(alignment_from_json(line, doc.net));
      stage = "choice_sequence";
      Warnings w;
      SequenceSet set = extract_sequences(doc.net, log, alignments, places, w);
      set.input_digests = {{"log", file_digest(ex_log)}, {"model", file_digest(ex.model)}};
      write_warnings(w, std::cerr);
      if (!ex_dump.empty()) dump_sequence_csvs(set, ex_dump);
      emit(sequences_to_json(set), ex_out);
    } catch (const std::exception& e) {
      exit_code = fail(stage, e);
    }
  });

  // detect
  RunConfig cfg;
  ModelArgs dm;
  std::string search = "pelt", format = "json";
  auto* detect_cmd = app.add_subcommand("detect", "Run the full pipeline and write a drift report");
  add_model_options(detect_cmd, dm, false);
  detect_cmd->add_option("--log", cfg.log_path, "XES or XES.gz event log");
  detect_cmd->add_option("--sequences", cfg.sequences_path, "choice sequences written by 'extract' (replaces --log/--model)");
  detect_cmd->add_option("--places", cfg.places, "decision place ids (default: all)")->delimiter(',');
  detect_cmd->add_flag("--all-places", "select every decision place (default)");
  detect_cmd->add_option("--penalty", cfg.penalty, "penalty per change point")->capture_default_str();
  detect_cmd->add_option("--min-size", cfg.min_size, "minimum segment length")->capture_default_str();
  detect_cmd->add_option("--search", search, "pelt or exact")->check(CLI::IsMember({"pelt", "exact"}))->capture_default_str();
  detect_cmd->add_option("--format", format, "json, csv or svg")->capture_default_str();
  detect_cmd->add_option("--output", cfg.output_path, "report file (default stdout)");
  detect_cmd->add_option("--dump-alignments", cfg.dump_alignments, "write alignments as JSON lines");
  detect_cmd->add_option("--dump-sequences", cfg.dump_sequences_dir, "write one CSV per place into this directory");
  detect_cmd->add_option("--jobs", cfg.jobs, "parallel alignment workers")->capture_default_str();
  detect_cmd->add_option("--log-cost", cfg.costs.log)->capture_default_str();
  detect_cmd->add_option("--model-cost", cfg.costs.visible_model)->capture_default_str();
  detect_cmd->add_option("--hidden-cost", cfg.costs.hidden_model)->capture_default_str();
  detect_cmd->add_option("--state-budget", cfg.state_budget, "explored states per trace")->capture_default_str();
  detect_cmd->add_flag("--strict", cfg.strict, "exit 1 on structural model findings");
  detect_cmd->add_flag("--fail-fast", cfg.fail_fast, "abort on the first unalignable trace");
  detect_cmd->callback([&] {
    try {
      if (auto env = state_budget_from_env()) cfg.state_budget = *env;
      cfg.model_path = dm.model;
      cfg.pnml = dm.options();
      cfg.search = search == "exact" ? changepoint::SearchMethod::exact : changepoint::SearchMethod::pelt;
      cfg.format = parse_report_format(format);
    } catch (const std::exception& e) {
      exit_code = fail("config", e);
      return;
    }
    exit_code = run_detect(cfg, std::cout, std::cerr);
  });

  // synth
  ModelArgs sy;
  std::string sy_schedule, sy_out, sy_truth;
  std::optional<std::uint64_t> sy_seed;
  double sy_inter_arrival = 3600;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic log from a branch schedule");
  add_model_options(synth_cmd, sy);
  synth_cmd->add_option("--schedule", sy_schedule, "schedule JSON")->required();
  synth_cmd->add_option("--seed", sy_seed, "overrides the schedule seed");
  synth_cmd->add_option("--out", sy_out, "XES output (default stdout)");
  synth_cmd->add_option("--truth", sy_truth, "write ground-truth change indices and tallies as JSON");
  synth_cmd->add_option("--inter-arrival", sy_inter_arrival, "seconds between trace starts")->capture_default_str();
  synth_cmd->callback([&] {
    try {
      PnmlDocument doc = read_pnml_file(sy.model, sy.options());
      BranchSchedule schedule = schedule_from_json(slurp(sy_schedule));
      SynthOptions so;
      so.seed = sy_seed;
      so.inter_arrival = std::chrono::milliseconds(static_cast<std::int64_t>(sy_inter_arrival * 1000.0));
      SynthResult r = generate(doc.net, schedule, so);
      emit(write_xes(r.log), sy_out);
      if (!sy_truth.empty()) {
        json tallies = json::array();
        for (const auto& t : r.tallies) {
          json jt = json::object();
          for (const auto& [label, n] : t) jt[std::to_string(label)] = n;
          tallies.push_back(jt);
        }
        emit(json{{"seed", r.seed}, {"choices", r.choices}, {"change_indices", r.change_indices}, {"tallies", tallies}}
                     .dump(2) + "\n",
             sy_truth);
      }
    } catch (const std::exception& e) {
      exit_code = fail("synth", e);
    }
  });

  // sweep-penalty
  RunConfig sw;
  ModelArgs swm;
  std::vector<double> penalties{1, 2, 5, 10, 20, 50};
  std::string sw_search = "pelt";
  auto* sweep_cmd = app.add_subcommand("sweep-penalty", "Breakpoint counts over a range of penalties");
  add_model_options(sweep_cmd, swm, false);
  sweep_cmd->add_option("--log", sw.log_path, "XES event log");
  sweep_cmd->add_option("--sequences", sw.sequences_path, "choice sequences written by 'extract'");
  sweep_cmd->add_option("--places", sw.places, "decision place ids (default: all)")->delimiter(',');
  sweep_cmd->add_option("--penalties", penalties, "comma-separated penalties")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--min-size", sw.min_size)->capture_default_str();
  sweep_cmd->add_option("--search", sw_search)->check(CLI::IsMember({"pelt", "exact"}))->capture_default_str();
  sweep_cmd->add_option("--jobs", sw.jobs)->capture_default_str();
  sweep_cmd->callback([&] {
    std::string stage = "config";
    try {
      sw.model_path = swm.model;
      sw.pnml = swm.options();
      sw.validate();
      auto method = sw_search == "exact" ? changepoint::SearchMethod::exact : changepoint::SearchMethod::pelt;
      SequenceSet set;
      Warnings w;
      if (!sw.sequences_path.empty()) {
        stage = "extract";
        set = sequences_from_json(slurp(sw.sequences_path));
      } else {
        stage = "alignment";
        PnmlDocument doc = read_pnml_file(sw.model_path, sw.pnml);
        EventLog log = read_xes_file(sw.log_path);
        BatchOptions bo;
        bo.jobs = sw.jobs;
        auto batch = align_log(doc.net, log, sw.costs, bo);
        set = extract_sequences(doc.net, log, batch.alignments, select_places(doc.net, sw.places), w);
      }
      write_warnings(w, std::cerr);
      stage = "changepoint";
      json out = json::array();
      for (const PlaceSequence& seq : set.places) {
        if (!sw.places.empty() && std::find(sw.places.begin(), sw.places.end(), seq.place_id) == sw.places.end())
          continue;
        json rows = json::array();
        for (double p : penalties) {
          auto segm = segment_sequence(seq, method, p, sw.min_size);
          rows.push_back({{"penalty", p}, {"breakpoints", segm.breakpoints.size()}, {"indices", segm.breakpoints},
                          {"total_cost", segm.total_cost}});
        }
        out.push_back({{"place", seq.place_id}, {"sweep", rows}});
      }
      std::cout << out.dump(2) << '\n';
    } catch (const std::exception& e) {
      exit_code = fail(stage, e);
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return exit_code;
}
