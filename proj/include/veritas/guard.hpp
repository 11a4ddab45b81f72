#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "veritas/belief.hpp"
#include "veritas/justify.hpp"
#include "veritas/ledger.hpp"

namespace veritas::guard {

struct GuardConfig {
  double tau_risk = 0.5;
  double decay = 0.98;
  double epsilon_max = 0.05;
  double delta = 0.1;
  double theta_meta = 0.6;
};

// Throws std::domain_error for values outside their ranges.
void validate(const GuardConfig& cfg);

// ---- contradiction ------------------------------------------------------

// Indices of one minimal unsatisfiable subset, or nullopt if consistent.
std::optional<std::vector<std::size_t>> unsat_core(std::span<const logic::Formula> fs,
                                                   const logic::SolverLimits& limits = {});

// Empty iff consistent; otherwise a single minimal unsatisfiable subset.
std::vector<std::vector<logic::Formula>> detect_contradiction(std::span<const logic::Formula> fs,
                                                              const logic::SolverLimits& limits = {});
std::vector<std::vector<logic::Formula>> detect_contradiction(const belief::BeliefBase& base,
                                                              const logic::SolverLimits& limits = {});

struct Removal {
  logic::Formula formula;
  std::string reason;
};

struct Resolution {
  std::vector<belief::BeliefEntry> survivors;
  std::vector<Removal> removals;
};

/// Repeatedly finds a core and drops its dominance-minimal member. When the
/// whole core ties, contracts the core by its lowest member (smallest
/// canonical form first). The survivors are always consistent.
Resolution resolve_contradiction(std::vector<belief::BeliefEntry> entries, const justify::SourceReliability& rel,
                                 const belief::BeliefConfig& cfg = {});

// ---- failure classification -------------------------------------------

enum class FailureKind {
  contradiction_injection,
  justificatory_collapse,
  belief_drift,
  grounding_misalignment,
  action_incoherence
};

std::string_view failure_kind_name(FailureKind k);

struct FailureEvent {
  FailureKind kind;
  std::string subject;  // canonical formula, or a policy name for action incoherence
  std::string detail;
  std::uint64_t epoch = 0;
  std::optional<double> epsilon;
  std::optional<double> epsilon_max;
  std::optional<double> utility_gap;
  std::optional<double> delta;
};

struct Diagnostic {
  std::string subject;
  std::uint64_t epoch = 0;
  bool inconsistent_after_insert = false;
  bool missing_trace = false;
  std::optional<double> epsilon;
  double epsilon_max = 0.05;
  bool grounding_mismatch = false;
  std::optional<double> expected_utility;
  std::optional<double> actual_utility;
  double delta = 0.1;
};

struct Unclassified {
  std::string reason;
};

using Classification = std::variant<FailureEvent, Unclassified>;

// Precedence when several conditions hold: I, II, III, IV, V.
Classification classify_failure(const Diagnostic& d);

// ---- gates ----------------------------------------------------------------

struct RiskAssessment {
  logic::Formula formula;
  double risk;
  double tolerance;
  bool admitted;
};

// risk = 1 - probability * decay^depth; admitted iff risk <= tau_risk.
RiskAssessment epistemic_risk(const belief::BeliefEntry& entry, std::size_t depth, const GuardConfig& cfg);

// Admission gate using the justification depth recorded in `store`.
belief::AdmissionGate risk_gate(const justify::JustificationStore& store, const GuardConfig& cfg);

// Accept iff epsilon <= epsilon_max. Throws std::domain_error for negative epsilon.
bool approximation_gate(const logic::Formula& phi, const logic::Formula& approx, double epsilon,
                        const GuardConfig& cfg);

// ---- engine context and recovery ---------------------------------------

/// Mutable state shared by recovery and sweeps. commit() is the only way
/// blocks are written: it persists the node store, appends, and applies.
struct Context {
  belief::BeliefBase& base;
  justify::JustificationStore& store;
  ledger::Ledger& ledger;
  ledger::ReplayConfig replay;
  justify::SourceReliability reliability;
  GuardConfig cfg;
  std::function<std::int64_t()> clock;
  std::function<void()> persist_store;

  ledger::Applied commit(ledger::Op op, const std::string& formula, const Digest& digest = kZeroDigest);
  justify::NodeId record(const logic::Formula& f, const std::vector<justify::NodeId>& premises,
                         const std::string& rule, const std::string& source, double confidence);
};

struct PolicyCandidate {
  std::string name;
  double expected_utility;
  double actual_utility;
};

struct RecoveryInput {
  FailureEvent event;
  std::optional<belief::BeliefEntry> incoming;  // contradiction injection
  std::vector<PolicyCandidate> alternatives;    // action incoherence
};

struct ReportLine {
  std::uint64_t epoch;
  FailureKind kind;
  std::string protocol;
  std::string subject;
  std::string outcome;
};

struct RecoveryReport {
  std::vector<ReportLine> lines;
  std::vector<logic::Formula> retracted;
  bool incoming_admitted = false;
  bool escalated = false;
  bool human_flag = false;
  std::optional<std::string> selected_policy;
};

// One line per step: epoch TAB kind TAB protocol TAB subject TAB outcome.
std::string format_report(const RecoveryReport& r);

/// Runs the protocol matching the event kind. Appends at least one block.
RecoveryReport run_recovery(const RecoveryInput& input, Context& ctx);

// ---- self-evaluation ------------------------------------------------------

enum class MetaAction { none, reevaluate, contract };

std::string_view meta_action_name(MetaAction a);

struct MetaLogEntry {
  std::uint64_t epoch;
  logic::Formula formula;
  double score;
  MetaAction action;
  std::string health;
};

// 1 when the trace verifies and its leaves hold in the active base, 0.5 for
// provisional entries, 0 when the trace is missing or unsupported.
double justification_health(const belief::BeliefEntry& e, const belief::BeliefBase& base,
                            const justify::JustificationStore& store, std::string* label = nullptr,
                            const logic::SolverLimits& limits = {});

// Scores every assertable entry; pure.
std::vector<MetaLogEntry> mscu_evaluate(const belief::BeliefBase& base, const justify::JustificationStore& store,
                                        const GuardConfig& cfg, const logic::SolverLimits& limits = {});

std::string format_meta_log(const std::vector<MetaLogEntry>& log);

// Evaluates and anchors the log in one meta block (digest = SHA-256 of the log text).
std::vector<MetaLogEntry> mscu_sweep(Context& ctx);

}  // namespace veritas::guard
