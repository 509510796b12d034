#include "branchdrift/petri_net.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>

#include "branchdrift/event_log.hpp"
#include "xml.hpp"

namespace branchdrift {

std::uint64_t Marking::total() const {
  return std::accumulate(tokens_.begin(), tokens_.end(), std::uint64_t{0});
}

bool Marking::empty() const {
  return std::all_of(tokens_.begin(), tokens_.end(), [](auto c) { return c == 0; });
}

std::size_t MarkingHash::operator()(const Marking& m) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (auto c : m.tokens()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

PlaceIndex PetriNet::add_place(std::string id, std::string name, std::uint32_t initial_tokens) {
  if (place_ids_.count(id) || transition_ids_.count(id)) throw InputError("duplicate node id '" + id + "'");
  PlaceIndex p{static_cast<std::uint32_t>(places_.size())};
  place_ids_.emplace(id, p);
  places_.push_back({std::move(id), std::move(name)});
  p_in_.emplace_back();
  p_out_.emplace_back();
  Marking init(places_.size()), fin(places_.size());
  for (std::size_t i = 0; i + 1 < places_.size(); ++i) {
    init[PlaceIndex{static_cast<std::uint32_t>(i)}] = initial_[PlaceIndex{static_cast<std::uint32_t>(i)}];
    fin[PlaceIndex{static_cast<std::uint32_t>(i)}] = final_[PlaceIndex{static_cast<std::uint32_t>(i)}];
  }
  init[p] = initial_tokens;
  initial_ = std::move(init);
  final_ = std::move(fin);
  return p;
}

TransitionIndex PetriNet::add_transition(std::string id, std::optional<std::string> label,
                                         std::string name) {
  if (place_ids_.count(id) || transition_ids_.count(id)) throw InputError("duplicate node id '" + id + "'");
  TransitionIndex t{static_cast<std::uint32_t>(transitions_.size())};
  transition_ids_.emplace(id, t);
  if (name.empty() && label) name = *label;
  transitions_.push_back({std::move(id), std::move(name), std::move(label)});
  t_in_.emplace_back();
  t_out_.emplace_back();
  return t;
}

void PetriNet::add_arc(std::string_view source_id, std::string_view target_id) {
  auto sp = find_place(source_id), tp = find_place(target_id);
  auto st = find_transition(source_id), tt = find_transition(target_id);
  if (!sp && !st) throw InputError("arc references unknown node '" + std::string(source_id) + "'");
  if (!tp && !tt) throw InputError("arc references unknown node '" + std::string(target_id) + "'");
  if ((sp && tp) || (st && tt))
    throw InputError("arc " + std::string(source_id) + " -> " + std::string(target_id) +
                     " connects two nodes of the same kind");
  if (sp) {
    auto& ins = t_in_[tt->value];
    if (std::find(ins.begin(), ins.end(), *sp) != ins.end())
      throw InputError("duplicate arc " + std::string(source_id) + " -> " + std::string(target_id));
    ins.push_back(*sp);
    p_out_[sp->value].push_back(*tt);
  } else {
    auto& outs = t_out_[st->value];
    if (std::find(outs.begin(), outs.end(), *tp) != outs.end())
      throw InputError("duplicate arc " + std::string(source_id) + " -> " + std::string(target_id));
    outs.push_back(*tp);
    p_in_[tp->value].push_back(*st);
  }
  ++arc_count_;
}

void PetriNet::set_final_marking(Marking m) {
  if (m.size() != places_.size()) throw ParameterError("final marking size does not match place count");
  final_ = std::move(m);
}

std::optional<PlaceIndex> PetriNet::find_place(std::string_view id) const {
  auto it = place_ids_.find(std::string(id));
  if (it == place_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<TransitionIndex> PetriNet::find_transition(std::string_view id) const {
  auto it = transition_ids_.find(std::string(id));
  if (it == transition_ids_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------- PNML

namespace {

std::string text_of(const xml::Node* n) {
  if (!n) return {};
  const xml::Node* t = n->child("text");
  std::string s = t ? t->text : n->text;
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint32_t token_count(const std::string& text, const std::string& where) {
  if (text.empty()) return 0;
  try {
    std::size_t used = 0;
    long v = std::stol(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument(text);
    return static_cast<std::uint32_t>(v);
  } catch (const std::exception&) {
    throw InputError("invalid token count '" + text + "' in " + where);
  }
}

struct Collected {
  std::vector<const xml::Node*> places, transitions, arcs;
};

void collect(const xml::Node& n, Collected& out) {
  for (const auto& c : n.children) {
    if (c->name == "place") out.places.push_back(c.get());
    else if (c->name == "transition") out.transitions.push_back(c.get());
    else if (c->name == "arc") out.arcs.push_back(c.get());
    else if (c->name == "page") collect(*c, out);
  }
}

bool toolspecific_invisible(const xml::Node& t) {
  for (const xml::Node* ts : t.children_named("toolspecific")) {
    if (const auto* a = ts->attr("activity"); a && *a == "$invisible$") return true;
    if (const auto* a = ts->attr("invisible"); a && *a == "true") return true;
  }
  return false;
}

}  // namespace

PnmlDocument parse_pnml(std::string_view document, const PnmlOptions& options) {
  std::unique_ptr<xml::Node> root;
  try {
    root = xml::parse(document);
  } catch (const xml::ParseError& e) {
    throw XmlSyntaxError(e.what(), e.line(), e.column());
  }
  const xml::Node* net_node = nullptr;
  if (root->name == "net") {
    net_node = root.get();
  } else {
    auto nets = root->children_named("net");
    if (nets.size() != 1)
      throw InputError("expected exactly one <net>, found " + std::to_string(nets.size()));
    net_node = nets.front();
  }

  std::regex invisible(options.invisible_pattern, std::regex::ECMAScript | std::regex::icase);
  PnmlDocument doc;
  PetriNet& net = doc.net;

  Collected c;
  collect(*net_node, c);
  for (const xml::Node* p : c.places) {
    const std::string* id = p->attr("id");
    if (!id) throw InputError("place without id at line " + std::to_string(p->line));
    net.add_place(*id, text_of(p->child("name")), token_count(text_of(p->child("initialMarking")), "place " + *id));
  }
  for (const xml::Node* t : c.transitions) {
    const std::string* id = t->attr("id");
    if (!id) throw InputError("transition without id at line " + std::to_string(t->line));
    std::string name = text_of(t->child("name"));
    bool hidden = name.empty() || toolspecific_invisible(*t) || std::regex_match(name, invisible);
    net.add_transition(*id, hidden ? std::nullopt : std::optional<std::string>(name), name);
  }
  for (const xml::Node* a : c.arcs) {
    const std::string* src = a->attr("source");
    const std::string* tgt = a->attr("target");
    if (!src || !tgt) throw InputError("arc without source/target at line " + std::to_string(a->line));
    if (const xml::Node* ins = a->child("inscription")) {
      std::string w = text_of(ins);
      if (!w.empty() && w != "1")
        throw InputError("arc " + *src + " -> " + *tgt + " has weight " + w +
                         "; only unit weights are supported");
    }
    net.add_arc(*src, *tgt);
  }

  const xml::Node* finals = net_node->child("finalmarkings");
  std::vector<const xml::Node*> markings;
  if (finals) markings = finals->children_named("marking");
  if (!markings.empty()) {
    if (markings.size() > 1)
      doc.warnings.push_back({"petri_net", "multiple_final_markings", "using the first of " +
                                                                          std::to_string(markings.size()) +
                                                                          " final markings"});
    Marking fin(net.place_count());
    for (const xml::Node* pl : markings.front()->children_named("place")) {
      const std::string* ref = pl->attr("idref");
      if (!ref) continue;
      auto p = net.find_place(*ref);
      if (!p) throw InputError("final marking references unknown place '" + *ref + "'");
      fin[*p] = token_count(text_of(pl), "final marking of " + *ref);
    }
    net.set_final_marking(std::move(fin));
  } else {
    Marking fin(net.place_count());
    std::string names;
    for (std::uint32_t i = 0; i < net.place_count(); ++i) {
      PlaceIndex p{i};
      if (net.consumers(p).empty()) {
        fin[p] = 1;
        names += (names.empty() ? "" : ",") + net.place(p).id;
      }
    }
    net.set_final_marking(std::move(fin));
    doc.warnings.push_back({"petri_net", "inferred_final_marking",
                            "no <finalmarkings>; using one token on each sink place: " + names});
  }
  return doc;
}

PnmlDocument read_pnml_file(const std::string& path, const PnmlOptions& options) {
  return parse_pnml(read_file_bytes(path), options);
}

// ---------------------------------------------------------------- validation

std::vector<Finding> validate_structure(const PetriNet& net) {
  std::vector<Finding> findings;
  const std::size_t np = net.place_count(), nt = net.transition_count();
  if (np == 0) {
    findings.push_back({"no_places", "", "net has no places"});
    return findings;
  }
  // Node numbering: places [0, np), transitions [np, np + nt).
  std::vector<std::vector<std::size_t>> fwd(np + nt), bwd(np + nt);
  for (std::uint32_t t = 0; t < nt; ++t) {
    for (PlaceIndex p : net.preset(TransitionIndex{t})) {
      fwd[p.value].push_back(np + t);
      bwd[np + t].push_back(p.value);
    }
    for (PlaceIndex p : net.postset(TransitionIndex{t})) {
      fwd[np + t].push_back(p.value);
      bwd[p.value].push_back(np + t);
    }
  }
  auto node_id = [&](std::size_t v) {
    return v < np ? net.place(PlaceIndex{static_cast<std::uint32_t>(v)}).id
                  : net.transition(TransitionIndex{static_cast<std::uint32_t>(v - np)}).id;
  };

  std::vector<std::size_t> sources, sinks;
  for (std::uint32_t p = 0; p < np; ++p) {
    if (net.producers(PlaceIndex{p}).empty()) sources.push_back(p);
    if (net.consumers(PlaceIndex{p}).empty()) sinks.push_back(p);
  }
  auto join = [&](const std::vector<std::size_t>& vs) {
    std::string s;
    for (auto v : vs) s += (s.empty() ? "" : ", ") + node_id(v);
    return s;
  };
  if (sources.size() != 1)
    findings.push_back({"not_single_source", "",
                        "expected one source place, found " + std::to_string(sources.size()) +
                            (sources.empty() ? "" : ": " + join(sources))});
  if (sinks.size() != 1)
    findings.push_back({"not_single_sink", "",
                        "expected one sink place, found " + std::to_string(sinks.size()) +
                            (sinks.empty() ? "" : ": " + join(sinks))});

  // Undirected connectivity from node 0.
  std::vector<char> seen(np + nt, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (const auto* adj : {&fwd[v], &bwd[v]})
      for (auto w : *adj)
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
  }
  std::vector<char> disconnected(np + nt, 0);
  for (std::size_t v = 0; v < np + nt; ++v) {
    bool isolated = fwd[v].empty() && bwd[v].empty() && np + nt > 1;
    if (!seen[v] || isolated) {
      disconnected[v] = 1;
      findings.push_back({"disconnected_node", node_id(v), "node " + node_id(v) + " is disconnected from the net"});
    }
  }

  for (std::uint32_t t = 0; t < nt; ++t) {
    const auto& tr = net.transition(TransitionIndex{t});
    if (disconnected[np + t]) continue;
    if (net.postset(TransitionIndex{t}).empty())
      findings.push_back({"dead_end_transition", tr.id, "transition " + tr.id + " has no output place"});
    if (net.preset(TransitionIndex{t}).empty())
      findings.push_back({"unanchored_transition", tr.id, "transition " + tr.id + " has no input place"});
  }

  if (sources.size() == 1 && sinks.size() == 1) {
    auto reach = [&](std::size_t start, const std::vector<std::vector<std::size_t>>& g) {
      std::vector<char> r(np + nt, 0);
      std::vector<std::size_t> st{start};
      r[start] = 1;
      while (!st.empty()) {
        auto v = st.back();
        st.pop_back();
        for (auto w : g[v])
          if (!r[w]) {
            r[w] = 1;
            st.push_back(w);
          }
      }
      return r;
    };
    auto from_source = reach(sources.front(), fwd);
    auto to_sink = reach(sinks.front(), bwd);
    for (std::size_t v = 0; v < np + nt; ++v)
      if (!disconnected[v] && (!from_source[v] || !to_sink[v]))
        findings.push_back({"not_on_source_sink_path", node_id(v),
                            "node " + node_id(v) + " is not on a path from source to sink"});

    PlaceIndex src{static_cast<std::uint32_t>(sources.front())};
    PlaceIndex snk{static_cast<std::uint32_t>(sinks.front())};
    if (net.initial_marking()[src] != 1 || net.initial_marking().total() != 1)
      findings.push_back({"initial_marking_not_source", "", "initial marking is not one token on the source place"});
    if (net.final_marking()[snk] != 1 || net.final_marking().total() != 1)
      findings.push_back({"final_marking_not_sink", "", "final marking is not one token on the sink place"});
  }
  return findings;
}

// ---------------------------------------------------------------- firing

bool is_enabled(const PetriNet& net, const Marking& m, TransitionIndex t) {
  for (PlaceIndex p : net.preset(t))
    if (m[p] == 0) return false;
  return true;
}

std::vector<TransitionIndex> enabled(const PetriNet& net, const Marking& m) {
  std::vector<TransitionIndex> out;
  for (std::uint32_t t = 0; t < net.transition_count(); ++t)
    if (is_enabled(net, m, TransitionIndex{t})) out.push_back(TransitionIndex{t});
  return out;
}

Marking fire(const PetriNet& net, const Marking& m, TransitionIndex t) {
  if (!is_enabled(net, m, t))
    throw PreconditionError("transition " + net.transition(t).id + " is not enabled");
  Marking next = m;
  for (PlaceIndex p : net.preset(t)) --next[p];
  for (PlaceIndex p : net.postset(t)) ++next[p];
  return next;
}

Marking unfire(const PetriNet& net, const Marking& m, TransitionIndex t) {
  for (PlaceIndex p : net.postset(t))
    if (m[p] == 0) throw PreconditionError("transition " + net.transition(t).id + " cannot be reversed");
  Marking prev = m;
  for (PlaceIndex p : net.postset(t)) --prev[p];
  for (PlaceIndex p : net.preset(t)) ++prev[p];
  return prev;
}

// ---------------------------------------------------------------- decision places

int InterestingPlace::label_of(TransitionIndex t) const {
  auto it = std::find(outgoing.begin(), outgoing.end(), t);
  return it == outgoing.end() ? 0 : static_cast<int>(it - outgoing.begin()) + 1;
}

bool InterestingPlace::has_incoming(TransitionIndex t) const {
  return std::binary_search(incoming.begin(), incoming.end(), t);
}

std::vector<InterestingPlace> decision_places(const PetriNet& net) {
  std::vector<InterestingPlace> out;
  for (std::uint32_t i = 0; i < net.place_count(); ++i) {
    PlaceIndex p{i};
    auto consumers = net.consumers(p);
    if (consumers.size() < 2) continue;
    InterestingPlace ip;
    ip.place = p;
    ip.initial_tokens = net.initial_marking()[p];
    ip.outgoing.assign(consumers.begin(), consumers.end());
    std::sort(ip.outgoing.begin(), ip.outgoing.end(), [&](TransitionIndex a, TransitionIndex b) {
      const auto& ta = net.transition(a);
      const auto& tb = net.transition(b);
      if (ta.hidden() != tb.hidden()) return !ta.hidden();
      if (!ta.hidden() && *ta.label != *tb.label) return *ta.label < *tb.label;
      if (ta.id != tb.id) return ta.id < tb.id;
      return a < b;
    });
    auto producers = net.producers(p);
    ip.incoming.assign(producers.begin(), producers.end());
    std::sort(ip.incoming.begin(), ip.incoming.end());
    out.push_back(std::move(ip));
  }
  return out;
}

std::string display_name(const PetriNet& net, TransitionIndex t) {
  const Transition& tr = net.transition(t);
  if (!tr.hidden()) return *tr.label;
  std::set<std::string> targets;
  std::set<TransitionIndex> visited{t};
  std::vector<TransitionIndex> frontier{t};
  while (!frontier.empty()) {
    TransitionIndex cur = frontier.back();
    frontier.pop_back();
    for (PlaceIndex p : net.postset(cur))
      for (TransitionIndex next : net.consumers(p)) {
        const Transition& nt = net.transition(next);
        if (!nt.hidden()) {
          targets.insert(*nt.label);
        } else if (visited.insert(next).second) {
          frontier.push_back(next);
        }
      }
  }
  if (targets.size() == 1) return "skip to " + *targets.begin();
  return "\xcf\x84";  // τ
}

}  // namespace branchdrift
