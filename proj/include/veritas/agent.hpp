#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "veritas/belief.hpp"
#include "veritas/guard.hpp"
#include "veritas/justify.hpp"
#include "veritas/ledger.hpp"
#include "veritas/plan.hpp"

namespace veritas::agent {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kConsistency = 3,
  kLedgerCorrupt = 4,
  kPlanFailure = 5,
  kEscalation = 6,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EngineConfig {
  belief::BeliefConfig belief;
  guard::GuardConfig guard;
  std::string ledger_path = "veritas.vlog";
  std::string key_path;     // 32-byte Ed25519 seed, hex
  std::string domain_path;  // planning domain
  bool fixed_clock = false;
};

/// key=value lines ('#' starts a comment). Keys: theta, tau_risk,
/// epsilon_max, delta, decay, theta_meta, remainder_cap, ledger, key, domain,
/// fixed_clock. Throws ConfigError on unknown keys or bad values.
void apply_config_text(EngineConfig& cfg, std::string_view text);

// VERITAS_<KEY> overrides, read through `getenv`.
void apply_env(EngineConfig& cfg, const std::function<const char*(const char*)>& getenv);

// Range checks; returns advisory warnings. Throws ConfigError.
std::vector<std::string> validate(const EngineConfig& cfg);

class GateRefusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ObserveResult {
  std::string outcome;  // admitted | stored-non-assertable | revised | rejected
  guard::RecoveryReport report;
};

struct QueryResult {
  bool entailed = false;
  std::optional<double> probability;
  std::optional<belief::ConfidenceTier> tier;
  std::optional<belief::FourState> state;
};

struct PlanOutcome {
  plan::Plan plan;
  plan::PlanTrace trace;
  std::vector<std::string> warnings;  // non-empty when the safety gate refused
};

struct Policy {
  std::string name;
  std::vector<std::string> steps;
  std::vector<plan::Literal> goal;
  std::optional<double> expected_utility;
  std::optional<double> actual_utility;
  std::vector<guard::PolicyCandidate> alternatives;
};

/// Policy file lines: "policy <Name>", "step <Action(args)>", "goal <lits>",
/// "expected <u>", "actual <u>", "alternative <Name> <expected> <actual>".
Policy parse_policy(std::string_view text);

struct PolicyOutcome {
  guard::RecoveryReport report;
  std::optional<plan::PlanTrace> trace;
  bool escalated = false;
};

/// Belief base, justification store and ledger bound together. The base is
/// rebuilt by replaying the ledger on construction, and every mutation goes
/// through a ledger block so that replay reproduces it. The store lives next
/// to the ledger in "<ledger>.jnodes".
class Engine {
 public:
  explicit Engine(EngineConfig cfg);
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const EngineConfig& config() const { return cfg_; }
  const belief::BeliefBase& base() const { return base_; }
  const justify::JustificationStore& store() const { return store_; }
  ledger::Ledger& ledger() { return ledger_; }
  guard::Context& context() { return ctx_; }

  // Throws ConsistencyError for an unsatisfiable formula and GateRefusal when
  // an approximation exceeds epsilon_max; nothing is written in either case.
  ObserveResult observe(const logic::Formula& f, double p, const std::string& source,
                        std::optional<double> epsilon = std::nullopt);

  QueryResult query(const logic::Formula& f) const;

  // Records a deduction node for an entailed formula that has no entry yet.
  // Returns false when f already has an entry.
  bool derive(const logic::Formula& f);

  std::vector<justify::JustificationNode> justify(const logic::Formula& f);

  // Builds the proof and anchors its digest in a meta block.
  justify::PublicProof prove(const logic::Formula& f);
  justify::ProofVerdict verify_proof(std::string_view text) const;

  // Domain init, overridden by what the active base decides about each atom.
  plan::WorldState world_state(const plan::Domain& d) const;

  // Throws plan::PlanFailure. Seals the trace unless the safety gate refuses.
  PlanOutcome plan(const std::vector<plan::Literal>& goal, const plan::Domain& d);

  PolicyOutcome inject_policy(const Policy& policy, const plan::Domain& d);

  // One sweep; with repair, entries marked reevaluate go through rederivation.
  std::vector<guard::MetaLogEntry> audit(bool repair, std::vector<guard::RecoveryReport>* reports = nullptr);

  // Appends blocks that bring the base back to its state after block n.
  void rollback(std::uint64_t n);

  std::int64_t now();

 private:
  void persist_store();

  EngineConfig cfg_;
  ledger::Ledger ledger_;
  justify::JustificationStore store_;
  belief::BeliefBase base_;
  guard::Context ctx_;
};

/// Observation lines are "formula TAB probability TAB source". After each
/// one: sweep, then pursue the domain goal until a plan has been executed.
/// Warnings go to `diag` as "EpistemicWarning TAB kind TAB subject TAB detail".
int run_loop(Engine& engine, std::istream& observations, const std::optional<plan::Domain>& domain,
             std::ostream& out, std::ostream& diag);

std::string format_query(const logic::Formula& f, const QueryResult& r);
std::string format_trace(const plan::PlanTrace& trace);

}  // namespace veritas::agent
