#include <algorithm>
#include <sstream>

#include "veritas/plan.hpp"

namespace veritas::plan {

namespace {

constexpr std::string_view kNot = "¬";
constexpr std::string_view kFailure = "PreconditionFailure(";

template <typename T>
std::string braces(const std::vector<T>& items) {
  std::string out = "{";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += display(items[i]);
  }
  return out + "}";
}

std::vector<std::string> split_display(std::string_view s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == ',' && depth == 0) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 2;
    }
  }
  out.emplace_back(s.substr(start));
  return out;
}

Atom parse_display_atom(std::string_view s) {
  logic::Formula f = logic::parse(s);
  if (!f.is_atom()) throw std::invalid_argument("expected an atom: " + std::string(s));
  return f.atom();
}

Literal parse_display_literal(std::string_view s) {
  if (s.substr(0, kNot.size()) == kNot) return {parse_display_atom(s.substr(kNot.size())), false};
  return {parse_display_atom(s), true};
}

std::string_view field(std::string_view f, std::string_view name) {
  if (f.substr(0, name.size()) != name || f.size() < name.size() + 1 || f.back() != '}') {
    throw std::invalid_argument("expected " + std::string(name) + "...}");
  }
  return f.substr(name.size(), f.size() - name.size() - 1);
}

}  // namespace

Simulation extend_trace(PlanTrace trace, const Plan& plan, const WorldState& state) {
  Simulation sim{std::move(trace), state, std::nullopt};
  auto& entries = sim.trace.entries;
  if (entries.empty()) {
    entries.push_back({0, EntryKind::init, "init", {}, std::vector<Atom>(state.begin(), state.end()), {}});
  } else if (replay_trace(sim.trace).back() != state) {
    throw std::invalid_argument("state does not match the end of the trace");
  }
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const GroundAction& a = plan[i];
    std::size_t t = entries.size();
    auto missing = missing_preconditions(a, sim.final_state);
    if (!missing.empty()) {
      std::string label = std::string(kFailure) + display(a);
      for (const auto& l : missing) label += ", " + display(l);
      entries.push_back({t, EntryKind::failure, label + ")", missing, {}, {}});
      sim.failure = PreconditionFailure{i, a, missing};
      break;
    }
    entries.push_back({t, EntryKind::step, display(a), a.pre, a.add, a.del});
    sim.final_state = apply_effects(a, sim.final_state);
  }
  return sim;
}

Simulation simulate_trace(const Plan& plan, const WorldState& s0) { return extend_trace({}, plan, s0); }

std::string serialize_trace(const PlanTrace& trace) {
  std::string out;
  for (const auto& e : trace.entries) {
    out += "t" + std::to_string(e.t) + '\t' + e.action + "\tpre=" + braces(e.pre) + "\tadd=" + braces(e.add) +
           "\tdel=" + braces(e.del) + '\n';
  }
  return out;
}

PlanTrace parse_trace(std::string_view text) {
  PlanTrace trace;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    try {
      std::vector<std::string_view> f;
      std::string_view rest = line;
      for (std::size_t p; (p = rest.find('\t')) != std::string_view::npos; rest = rest.substr(p + 1)) {
        f.push_back(rest.substr(0, p));
      }
      f.push_back(rest);
      if (f.size() != 5) throw std::invalid_argument("expected 5 tab-separated fields");
      TraceEntry e{trace.entries.size(), EntryKind::step, std::string(f[1]), {}, {}, {}};
      if (f[0] != "t" + std::to_string(e.t)) throw std::invalid_argument("expected t" + std::to_string(e.t));
      if (e.action == "init") {
        e.kind = EntryKind::init;
      } else if (e.action.starts_with(kFailure)) {
        e.kind = EntryKind::failure;
      } else {
        parse_display_atom(e.action);
      }
      for (const auto& s : split_display(field(f[2], "pre={"))) e.pre.push_back(parse_display_literal(s));
      for (const auto& s : split_display(field(f[3], "add={"))) e.add.push_back(parse_display_atom(s));
      for (const auto& s : split_display(field(f[4], "del={"))) e.del.push_back(parse_display_atom(s));
      trace.entries.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw DomainError(n, std::string("trace: ") + ex.what());
    }
  }
  if (serialize_trace(trace) != text) throw DomainError(n, "trace is not in canonical form");
  return trace;
}

std::vector<WorldState> replay_trace(const PlanTrace& trace) {
  std::vector<WorldState> out;
  WorldState s;
  for (const auto& e : trace.entries) {
    for (const auto& d : e.del) s.erase(d);
    for (const auto& a : e.add) s.insert(a);
    out.push_back(s);
  }
  return out;
}

Plan plan_of(const PlanTrace& trace, const std::vector<ActionSchema>& schemas) {
  Plan p;
  for (const auto& e : trace.entries) {
    if (e.kind != EntryKind::step) continue;
    Atom a = parse_display_atom(e.action);
    const ActionSchema* s = find_schema(schemas, a.predicate);
    if (!s) throw std::invalid_argument("unknown action " + a.predicate);
    p.push_back(ground(*s, a.args));
  }
  return p;
}

std::vector<Fact> fact_sequence(const PlanTrace& trace) {
  std::vector<Fact> out;
  std::int64_t clock = 0;
  for (const auto& e : trace.entries) {
    switch (e.kind) {
      case EntryKind::init:
        for (const auto& a : e.add) out.push_back({clock, display(a)});
        break;
      case EntryKind::failure:
        out.push_back({++clock, e.action});
        break;
      case EntryKind::step:
        out.push_back({clock + 1, "Happens(" + e.action + ", t" + std::to_string(clock) + ")"});
        if (!e.add.empty()) {
          clock += 2;
          for (const auto& a : e.add) out.push_back({clock, display(a)});
        } else {
          clock += 1;
          for (const auto& d : e.del) out.push_back({clock, display(Literal{d, false})});
        }
        break;
    }
  }
  return out;
}

std::string format_facts(const std::vector<Fact>& facts) {
  std::string out;
  for (const auto& f : facts) out += "t" + std::to_string(f.t) + ": " + f.text + '\n';
  return out;
}

Digest trace_digest(const PlanTrace& trace) { return sha256(serialize_trace(trace)); }

std::uint64_t seal_trace(PlanTrace& trace, const BlockSink& sink) {
  bool failed = !trace.entries.empty() && trace.entries.back().kind == EntryKind::failure;
  std::string formula = failed ? "PlanFailure" : logic::render_canonical(goal_formula(trace.goal));
  trace.seal = sink(ledger::Op::trace_seal, formula, trace_digest(trace));
  return *trace.seal;
}

std::uint64_t seal_trace(PlanTrace& trace, ledger::Ledger& ledger, std::int64_t timestamp) {
  return seal_trace(trace, [&](ledger::Op op, const std::string& f, const Digest& d) {
    return ledger.append(timestamp, op, f, d).index;
  });
}

bool repair_ontology(const std::string& failed, const std::string& alternative, const std::string& goal_concept,
                     Ontology& ont, const BlockSink& sink) {
  auto tf = ont.type_of(failed);
  auto ta = ont.type_of(alternative);
  if (!tf) throw OntologyError("untyped " + failed);
  if (!ta) throw OntologyError("untyped " + alternative);
  if (!ont.has_concept(goal_concept)) throw OntologyError("unknown concept " + goal_concept);
  if (ont.subsumes(*tf, goal_concept)) throw OntologyError("no mismatch: " + *tf + " is already a " + goal_concept);
  if (ont.subsumes(*ta, goal_concept)) return false;
  ont.add_subsumption(*ta, goal_concept);
  sink(ledger::Op::meta, logic::render_canonical(logic::atom("Subsumption", {*ta, goal_concept})), kZeroDigest);
  return true;
}

}  // namespace veritas::plan
