#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include "veritas/agent.hpp"

namespace veritas::agent {

using ledger::Op;
using logic::Formula;
namespace rules = justify::rules;

namespace {

std::string store_path(const std::string& ledger_path) { return ledger_path + ".jnodes"; }

justify::JustificationStore load_store(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return {};
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return justify::JustificationStore::load(ss.str());
  } catch (const std::exception& e) {
    throw ledger::LedgerError("justification store " + path + ": " + e.what());
  }
}

// Write to a sibling file, fsync, then rename over the target.
void write_atomically(const std::string& path, const std::string& data) {
  std::string tmp = path + ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw ledger::LedgerError("cannot write " + tmp);
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      ::close(fd);
      throw ledger::LedgerError("write failed for " + tmp);
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    throw ledger::LedgerError("fsync failed for " + tmp);
  }
  ::close(fd);
  std::filesystem::rename(tmp, path);
}

// Smallest subset (by deletion) of the active entries that still entails phi.
std::vector<belief::BeliefEntry> minimal_support(const belief::BeliefBase& base, const Formula& phi,
                                                 const logic::SolverLimits& limits) {
  auto support = base.active_entries();
  for (std::size_t k = 0; k < support.size();) {
    std::vector<Formula> trial;
    for (std::size_t m = 0; m < support.size(); ++m) {
      if (m != k) trial.push_back(support[m].formula);
    }
    if (logic::entails(trial, phi, limits)) {
      support.erase(support.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
      ++k;
    }
  }
  return support;
}

}  // namespace

Engine::Engine(EngineConfig cfg)
    : cfg_(std::move(cfg)),
      ledger_(ledger::Ledger::open(cfg_.ledger_path)),
      store_(load_store(store_path(cfg_.ledger_path))),
      ctx_{base_, store_, ledger_, {cfg_.belief, {}}, {}, cfg_.guard, [this] { return now(); },
           [this] { persist_store(); }} {
  ctx_.replay.gate = guard::risk_gate(store_, cfg_.guard);
  try {
    base_ = ledger::replay(ledger_.blocks(), std::nullopt, store_, ctx_.replay);
  } catch (const ledger::LedgerError&) {
    throw;
  } catch (const std::exception& e) {
    throw ledger::LedgerError(std::string("replay failed: ") + e.what());
  }
  if (ledger_.empty()) ctx_.commit(Op::meta, "");
}

std::int64_t Engine::now() {
  if (cfg_.fixed_clock) return static_cast<std::int64_t>(ledger_.size());
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void Engine::persist_store() { write_atomically(store_path(cfg_.ledger_path), store_.serialize()); }

ObserveResult Engine::observe(const Formula& f, double p, const std::string& source, std::optional<double> epsilon) {
  belief::validate(belief::Provenance{source, 0, p});
  if (!logic::is_identifier(source)) throw std::invalid_argument("source must be an identifier: " + source);
  std::string canon = logic::render_canonical(f);
  if (!logic::is_satisfiable(f, cfg_.belief.limits)) {
    throw belief::ConsistencyError("refused: " + canon + " is unsatisfiable");
  }
  std::string rule = rules::observation;
  if (epsilon) {
    if (!guard::approximation_gate(f, f, *epsilon, cfg_.guard)) {
      throw GateRefusal("approximation of " + canon + " diverges by " + belief::format_probability(*epsilon) +
                        " > " + belief::format_probability(cfg_.guard.epsilon_max));
    }
    rule = rules::approximate;
  }
  auto id = ctx_.record(f, {}, rule, source, p);
  belief::BeliefEntry entry = ledger::entry_from_node(*store_.get(id));

  bool assertable = p >= cfg_.belief.theta && (!ctx_.replay.gate || ctx_.replay.gate(entry));
  std::vector<Formula> trial = base_.active_formulas();
  trial.push_back(f);
  if (assertable && !logic::is_consistent(trial, cfg_.belief.limits)) {
    guard::FailureEvent ev{guard::FailureKind::contradiction_injection,
                           canon,
                           "observation conflicts with the active base",
                           base_.epoch(),
                           {},
                           {},
                           {},
                           {}};
    auto rep = guard::run_recovery({ev, entry, {}}, ctx_);
    std::string outcome = rep.incoming_admitted ? "revised" : "rejected";
    return {outcome, std::move(rep)};
  }
  auto applied = ctx_.commit(Op::insert, canon, id);
  return {std::string(belief::outcome_name(*applied.outcome)), {}};
}

QueryResult Engine::query(const Formula& f) const {
  QueryResult r;
  r.entailed = base_.holds(f, cfg_.belief.limits);
  std::optional<double> p;
  if (r.entailed) {
    double m = 1.0;
    for (const auto& e : minimal_support(base_, f, cfg_.belief.limits)) m = std::min(m, e.probability);
    p = m;
  } else if (const auto* e = base_.find(f)) {
    p = e->probability;
  }
  if (p) {
    r.probability = p;
    r.tier = belief::classify_confidence(*p);
    r.state = belief::project_four_state(*p);
  }
  return r;
}

bool Engine::derive(const Formula& f) {
  if (base_.find(f)) return false;
  if (!base_.holds(f, cfg_.belief.limits)) {
    throw justify::JustifyError(justify::JustifyError::Kind::no_justification,
                                logic::render_canonical(f) + " is not entailed by the active base");
  }
  std::vector<justify::NodeId> premises;
  double p = 1.0;
  for (const auto& e : minimal_support(base_, f, cfg_.belief.limits)) {
    premises.push_back(*e.justification);
    p = std::min(p, e.probability);
  }
  auto id = ctx_.record(f, premises, rules::deduction, "reasoner", p);
  ctx_.commit(Op::insert, logic::render_canonical(f), id);
  return true;
}

std::vector<justify::JustificationNode> Engine::justify(const Formula& f) {
  derive(f);
  const belief::BeliefEntry* e = base_.find(f);
  if (e && e->justification && store_.contains(*e->justification)) return store_.trace(*e->justification);
  return store_.trace(f);
}

justify::PublicProof Engine::prove(const Formula& f) {
  derive(f);
  auto proof = justify::build_public_proof(store_, f);
  if (!ledger_.anchors(proof.digest)) ctx_.commit(Op::meta, logic::render_canonical(f), proof.digest);
  return proof;
}

justify::ProofVerdict Engine::verify_proof(std::string_view text) const {
  std::optional<justify::PublicProof> proof;
  try {
    proof = justify::parse_proof(text);
  } catch (const std::exception& e) {
    return {justify::ProofStatus::malformed, std::nullopt, e.what()};
  }
  return justify::verify_public_proof(
      *proof, [this](const Digest& d) { return ledger_.anchors(d); }, cfg_.belief.limits);
}

plan::WorldState Engine::world_state(const plan::Domain& d) const {
  plan::WorldState s = d.init;
  for (const auto& a : logic::atoms_of(base_.active_formulas())) {
    Formula f = Formula::make_atom(a);
    if (base_.holds(f, cfg_.belief.limits)) {
      s.insert(a);
    } else if (base_.holds(logic::neg(f), cfg_.belief.limits)) {
      s.erase(a);
    }
  }
  return s;
}

PlanOutcome Engine::plan(const std::vector<plan::Literal>& goal, const plan::Domain& d) {
  plan::WorldState state = world_state(d);
  PlanOutcome out;
  out.plan = plan::abduce_policy(goal, state, d.schemas, d.ontology);

  // Safety: every believed precondition must pass the risk gate.
  std::set<std::string> seen;
  for (const auto& step : out.plan) {
    for (const auto& l : step.pre) {
      Formula f = Formula::make_atom(l.atom);
      if (!l.positive) f = logic::neg(f);
      const belief::BeliefEntry* e = base_.find(f);
      if (!e || !seen.insert(logic::render_canonical(f)).second) continue;
      out.trace.support.push_back(f);
      std::size_t depth = e->justification && store_.contains(*e->justification) ? store_.depth(*e->justification) : 0;
      auto risk = guard::epistemic_risk(*e, depth, cfg_.guard);
      if (!e->assertable || !risk.admitted) {
        out.warnings.push_back("risk\t" + logic::render_canonical(f) + "\trisk " + belief::format_probability(risk.risk) +
                               " > " + belief::format_probability(risk.tolerance));
      }
    }
  }
  if (!out.warnings.empty()) return out;

  auto support = out.trace.support;
  auto sim = plan::simulate_trace(out.plan, state);
  out.trace = std::move(sim.trace);
  out.trace.goal = goal;
  out.trace.support = std::move(support);
  plan::seal_trace(out.trace, [this](Op op, const std::string& f, const Digest& dg) {
    return ctx_.commit(op, f, dg), static_cast<std::uint64_t>(ledger_.size() - 1);
  });
  return out;
}

Policy parse_policy(std::string_view text) {
  Policy p;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  auto num = [&](const std::string& s) {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number " + s);
    return v;
  };
  while (std::getline(in, line)) {
    ++n;
    std::istringstream words(line);
    std::string head;
    if (!(words >> head) || head[0] == '#') continue;
    std::string rest;
    std::getline(words, rest);
    auto b = rest.find_first_not_of(' ');
    rest = b == std::string::npos ? "" : rest.substr(b);
    try {
      if (head == "policy") {
        p.name = rest;
      } else if (head == "step") {
        p.steps.push_back(rest);
      } else if (head == "goal") {
        p.goal = plan::parse_literals(rest);
      } else if (head == "expected") {
        p.expected_utility = num(rest);
      } else if (head == "actual") {
        p.actual_utility = num(rest);
      } else if (head == "alternative") {
        std::istringstream f(rest);
        std::string name, e, a, extra;
        f >> name >> e >> a >> extra;
        if (a.empty() || !extra.empty()) throw std::invalid_argument("expected alternative <name> <expected> <actual>");
        p.alternatives.push_back({name, num(e), num(a)});
      } else {
        throw std::invalid_argument("unknown directive '" + head + "'");
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument("policy line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (!logic::is_identifier(p.name)) throw std::invalid_argument("policy needs a 'policy <Name>' line");
  return p;
}

PolicyOutcome Engine::inject_policy(const Policy& policy, const plan::Domain& d) {
  PolicyOutcome out;
  plan::Plan steps;
  for (const auto& text : policy.steps) {
    Formula f = logic::parse(text);
    if (!f.is_atom()) throw std::invalid_argument("not an action: " + text);
    const plan::ActionSchema* s = plan::find_schema(d.schemas, f.atom().predicate);
    if (!s) throw plan::PlanFailure({}, "unknown action " + f.atom().predicate);
    plan::GroundAction g = plan::ground(*s, f.atom().args);
    if (auto v = plan::type_check(g, *s, d.ontology)) throw plan::PlanFailure({}, "type violation: " + v->reason);
    steps.push_back(std::move(g));
  }
  std::vector<plan::Literal> goal = policy.goal.empty() ? d.goal : policy.goal;
  auto sink = [this](Op op, const std::string& f, const Digest& dg) {
    ctx_.commit(op, f, dg);
    return static_cast<std::uint64_t>(ledger_.size() - 1);
  };
  auto incoherent = [&](std::optional<double> gap, std::string detail, std::vector<guard::PolicyCandidate> alts) {
    guard::FailureEvent ev{guard::FailureKind::action_incoherence, policy.name, std::move(detail), base_.epoch(),
                           {}, {}, gap, cfg_.guard.delta};
    out.report = guard::run_recovery({ev, std::nullopt, std::move(alts)}, ctx_);
    out.escalated = out.report.escalated;
  };

  // Utility gate before anything runs.
  if (policy.expected_utility && policy.actual_utility) {
    double gap = std::abs(*policy.expected_utility - *policy.actual_utility);
    if (gap > cfg_.guard.delta) {
      incoherent(gap, "utility gap", policy.alternatives);
      return out;
    }
  }

  plan::WorldState state = world_state(d);
  auto sim = plan::simulate_trace(steps, state);
  sim.trace.goal = goal;
  if (!sim.failure) {
    if (!goal.empty()) plan::seal_trace(sim.trace, sink);
    out.trace = std::move(sim.trace);
    return out;
  }

  // Seal what was attempted, then hand the failure to the guard with a
  // replanned alternative when one exists.
  plan::seal_trace(sim.trace, sink);
  std::optional<plan::Plan> replan;
  try {
    if (!goal.empty()) replan = plan::abduce_policy(goal, sim.final_state, d.schemas, d.ontology);
  } catch (const plan::PlanFailure&) {
  }
  std::vector<guard::PolicyCandidate> alts;
  if (replan) alts.push_back({"Replan", 1.0, 1.0});
  incoherent(std::nullopt, "precondition failure at step " + std::to_string(sim.failure->step + 1), alts);
  if (!replan || out.escalated) {
    out.trace = std::move(sim.trace);
    return out;
  }
  auto ext = plan::extend_trace(sim.trace, *replan, sim.final_state);
  ext.trace.goal = goal;
  plan::seal_trace(ext.trace, sink);
  out.trace = std::move(ext.trace);
  return out;
}

std::vector<guard::MetaLogEntry> Engine::audit(bool repair, std::vector<guard::RecoveryReport>* reports) {
  auto log = guard::mscu_sweep(ctx_);
  if (!repair) return log;
  for (const auto& m : log) {
    if (m.action != guard::MetaAction::reevaluate) continue;
    guard::FailureEvent ev{guard::FailureKind::justificatory_collapse,
                           logic::render_canonical(m.formula),
                           "justification health " + m.health,
                           m.epoch,
                           {},
                           {},
                           {},
                           {}};
    auto rep = guard::run_recovery({ev, std::nullopt, {}}, ctx_);
    if (reports) reports->push_back(std::move(rep));
  }
  return log;
}

void Engine::rollback(std::uint64_t n) {
  belief::BeliefBase target = ledger::replay(ledger_.blocks(), n, store_, ctx_.replay);
  ctx_.commit(Op::meta, "", sha256("rollback\x1f" + std::to_string(n)));
  for (const auto& e : std::vector<belief::BeliefEntry>(base_.entries())) {
    ctx_.commit(Op::recovery, logic::render_canonical(e.formula));
  }
  for (const auto& e : target.entries()) {
    if (!e.justification || !store_.contains(*e.justification)) continue;
    std::string canon = logic::render_canonical(e.formula);
    ctx_.commit(Op::insert, canon, *e.justification);
    const std::string& rule = store_.get(*e.justification)->rule;
    if (rule == rules::provisional || rule == rules::misaligned || rule == rules::suspect) {
      ctx_.commit(Op::recovery, canon, *e.justification);
    }
  }
}

std::string format_query(const Formula& f, const QueryResult& r) {
  std::string out = std::string(r.entailed ? "entailed" : "not-entailed") + '\t' + logic::render_canonical(f);
  if (r.probability) {
    out += "\tprobability=" + belief::format_probability(*r.probability);
    out += "\ttier=" + std::to_string(belief::level(*r.tier)) + ":" + std::string(belief::tier_name(*r.tier));
    out += "\tstate=" + std::string(belief::four_state_name(*r.state));
  }
  return out;
}

std::string format_trace(const plan::PlanTrace& trace) {
  return plan::serialize_trace(trace) + plan::format_facts(plan::fact_sequence(trace));
}

}  // namespace veritas::agent
