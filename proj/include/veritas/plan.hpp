#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "veritas/crypto.hpp"
#include "veritas/ledger.hpp"
#include "veritas/logic.hpp"

namespace veritas::plan {

using logic::Atom;

class OntologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::runtime_error {
 public:
  DomainError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Concepts, an acyclic is-a relation over them, and a typing of names.
class Ontology {
 public:
  void add_concept(const std::string& name);
  // Throws OntologyError for unknown concepts or when the edge closes a cycle.
  // Returns false when the edge already exists.
  bool add_subsumption(const std::string& child, const std::string& parent);
  void set_type(const std::string& name, const std::string& concept_name);

  bool has_concept(const std::string& c) const { return concepts_.contains(c); }
  // Reflexive-transitive: subsumes(c, c) holds for every known c.
  bool subsumes(const std::string& child, const std::string& parent) const;
  std::optional<std::string> type_of(const std::string& name) const;
  // Names typed at or below `concept_name`, sorted.
  std::vector<std::string> members(const std::string& concept_name) const;

  const std::set<std::string>& concepts() const { return concepts_; }
  const std::set<std::pair<std::string, std::string>>& edges() const { return edges_; }
  const std::map<std::string, std::string>& typing() const { return typing_; }

 private:
  std::set<std::string> concepts_;
  std::set<std::pair<std::string, std::string>> edges_;
  std::map<std::string, std::string> typing_;
};

struct Literal {
  Atom atom;
  bool positive = true;

  bool operator==(const Literal&) const = default;
  auto operator<=>(const Literal&) const = default;
};

struct Param {
  std::string name;
  std::string type;
};

struct ActionSchema {
  std::string name;
  std::vector<Param> params;
  std::vector<Literal> pre;
  std::vector<Atom> add;
  std::vector<Atom> del;
};

struct GroundAction {
  std::string name;
  std::vector<std::string> args;
  std::vector<Literal> pre;
  std::vector<Atom> add;
  std::vector<Atom> del;

  bool operator==(const GroundAction&) const = default;
};

using WorldState = std::set<Atom>;
using Plan = std::vector<GroundAction>;

struct Domain {
  Ontology ontology;
  std::vector<ActionSchema> schemas;
  WorldState init;
  std::vector<Literal> goal;
};

/// Line-oriented domain text. Blank lines and lines starting with '#' are
/// skipped. Recognised lines:
///
///   concept <name> [<parent>]
///   entity <name> : <concept>
///   action <name>(<p>:<concept>, ...) pre: <lit>, ... add: <atom>, ... del: <atom>, ...
///   init: <atom>, ...
///   goal: <lit>, ...
///
/// Literals use the formula syntax ("!Locked(r)"). Throws DomainError.
Domain parse_domain(std::string_view text);
Domain load_domain(const std::string& path);

// Display forms: "At(Agent1, LocationA)", "¬Locked(Room101)", "Move(Agent1, LocationA, LocationB)".
std::string display(const Atom& a);
std::string display(const Literal& l);
std::string display(const GroundAction& a);

// Comma-separated literals in formula syntax.
std::vector<Literal> parse_literals(std::string_view text);

// Conjunction of the literals, left-nested; a single literal stands alone.
logic::Formula goal_formula(const std::vector<Literal>& goal);

const ActionSchema* find_schema(const std::vector<ActionSchema>& schemas, const std::string& name);

// Substitutes args for params. Throws std::invalid_argument on arity mismatch.
GroundAction ground(const ActionSchema& s, const std::vector<std::string>& args);

struct TypeViolation {
  std::string reason;
};

// nullopt when every argument's type lies at or below its parameter's concept.
std::optional<TypeViolation> type_check(const GroundAction& a, const ActionSchema& s, const Ontology& ont);

// Well-typed groundings in lexicographic argument order.
std::vector<GroundAction> groundings(const ActionSchema& s, const Ontology& ont);

bool holds(const Literal& l, const WorldState& s);
bool preconditions_met(const GroundAction& a, const WorldState& s);
std::vector<Literal> missing_preconditions(const GroundAction& a, const WorldState& s);

class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// (s \ del) ∪ add. Throws PreconditionError when a precondition fails.
WorldState apply_effects(const GroundAction& a, const WorldState& s);

class PlanFailure : public std::runtime_error {
 public:
  PlanFailure(std::vector<Literal> subgoal, std::string reason);
  const std::vector<Literal>& subgoal() const { return subgoal_; }

 private:
  std::vector<Literal> subgoal_;
};

inline constexpr std::size_t kDefaultBudget = 32;

/// Backward abduction: for an unmet goal literal, try each action that would
/// achieve it (schemas in declaration order, groundings lexicographic). An
/// applicable action is applied; otherwise its missing preconditions become
/// a subgoal solved recursively before the action. If regression finds
/// nothing, a breadth-first search over states returns a shortest plan of
/// length <= budget when one exists. Throws PlanFailure.
Plan abduce_policy(const std::vector<Literal>& goal, const WorldState& state,
                   const std::vector<ActionSchema>& schemas, const Ontology& ont,
                   std::size_t budget = kDefaultBudget);

// ---- traces ---------------------------------------------------------------

enum class EntryKind { init, step, failure };

struct TraceEntry {
  std::size_t t;
  EntryKind kind;
  std::string action;  // "init", display form of the action, or the failure term
  std::vector<Literal> pre;
  std::vector<Atom> add;
  std::vector<Atom> del;

  bool operator==(const TraceEntry&) const = default;
};

struct PlanTrace {
  std::vector<TraceEntry> entries;
  std::vector<Literal> goal;
  std::vector<logic::Formula> support;
  std::optional<std::uint64_t> seal;
};

struct PreconditionFailure {
  std::size_t step;
  GroundAction action;
  std::vector<Literal> missing;
};

struct Simulation {
  PlanTrace trace;
  WorldState final_state;
  std::optional<PreconditionFailure> failure;
};

// Starts the trace with an init entry listing s0. An empty plan yields only
// that entry. Stops at the first failing step and records it.
Simulation simulate_trace(const Plan& plan, const WorldState& s0);

// Continues `trace` from `state`. The returned simulation owns the extended trace.
Simulation extend_trace(PlanTrace trace, const Plan& plan, const WorldState& state);

// "t<i>\t<action>\tpre={...}\tadd={...}\tdel={...}\n" per entry.
std::string serialize_trace(const PlanTrace& trace);
// Throws DomainError; the text must be in canonical form.
PlanTrace parse_trace(std::string_view text);

// State after each entry, applying the recorded deltas from the empty state.
std::vector<WorldState> replay_trace(const PlanTrace& trace);

// Step entries re-grounded against `schemas`.
Plan plan_of(const PlanTrace& trace, const std::vector<ActionSchema>& schemas);

struct Fact {
  std::int64_t t;
  std::string text;
};

/// Timeline view. Initial atoms sit at t0 and a failure one tick after the
/// clock. A step is logged as Happens(a, t_k) at t_k+1. Added atoms follow
/// at t_k+2; an action that only deletes shows the negated atoms at t_k+1.
/// The last tick written becomes the new clock.
std::vector<Fact> fact_sequence(const PlanTrace& trace);
std::string format_facts(const std::vector<Fact>& facts);

Digest trace_digest(const PlanTrace& trace);

using BlockSink = std::function<std::uint64_t(ledger::Op, const std::string& formula, const Digest& digest)>;

// Appends a trace-seal block carrying the goal (or PlanFailure when the
// trace ends in a failure) and the trace digest. Records the block index.
std::uint64_t seal_trace(PlanTrace& trace, const BlockSink& sink);
std::uint64_t seal_trace(PlanTrace& trace, ledger::Ledger& ledger, std::int64_t timestamp);

/// After `failed` could not serve the goal concept, adds
/// type_of(alternative) ⊑ goal_concept and logs it as a meta block.
/// No block is written when the edge already exists. Throws OntologyError
/// for untyped names, when no mismatch exists, or on a cycle.
bool repair_ontology(const std::string& failed, const std::string& alternative, const std::string& goal_concept,
                     Ontology& ont, const BlockSink& sink);

}  // namespace veritas::plan
