#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "veritas/crypto.hpp"
#include "veritas/logic.hpp"

namespace veritas::belief {

struct Provenance {
  std::string source;
  std::int64_t timestamp_ms = 0;
  double confidence = 1.0;

  bool operator==(const Provenance&) const = default;
};

// Throws std::domain_error unless confidence is in [0,1] and timestamp >= 0.
void validate(const Provenance& p);

enum class ConfidenceTier { rejected = 0, disfavoured, equivocal, supported, endorsed, committed };

int level(ConfidenceTier t);
std::string_view tier_name(ConfidenceTier t);

// Six-level lattice: <0.01, [0.01,0.3), [0.3,0.7), [0.7,0.9), [0.9,0.99), >=0.99.
// Throws std::domain_error outside [0,1].
ConfidenceTier classify_confidence(double p);

enum class FourState { rejected, uncertain, provisional, committed };

std::string_view four_state_name(FourState s);

struct FourStateThresholds {
  double rejection = 0.50;
  double provisional = 0.95;
  double commitment = 0.99;
};

FourState project_four_state(double probability, const FourStateThresholds& t = {});

// prior * likelihood / marginal. Throws std::domain_error on a zero marginal,
// inputs outside [0,1], or a posterior above 1.
double bayes_update(double prior, double likelihood, double marginal);

enum class StatusTag { derived, approximate, operationally_justified, retracted };

std::string_view status_name(StatusTag s);

struct BeliefEntry {
  logic::Formula formula;
  double probability = 1.0;
  ConfidenceTier tier = ConfidenceTier::committed;
  Provenance provenance;
  StatusTag status = StatusTag::operationally_justified;
  std::optional<Digest> justification;
  // False for entries held at their tier but kept out of the active base.
  bool assertable = true;
  bool provisional = false;
  std::uint64_t epoch = 0;
};

BeliefEntry make_entry(logic::Formula formula, double probability, Provenance provenance,
                       StatusTag status = StatusTag::operationally_justified,
                       std::optional<Digest> justification = std::nullopt);

struct Retraction {
  std::uint64_t epoch;
  logic::Formula formula;
  std::string reason;
};

class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BeliefConfig {
  double theta = 0.95;
  std::size_t remainder_cap = 16;
  logic::SolverLimits limits;
};

// Throws std::domain_error if theta is outside [0.5, 1); returns warnings for
// values outside the recommended open interval (0.95, 1).
std::vector<std::string> validate(const BeliefConfig& cfg);

/// Time-indexed belief base. A value type: every operation below returns a
/// new base one epoch later and leaves its argument untouched.
///
/// entries() holds every non-retracted entry; only assertable ones form the
/// active base over which consistency and entailment are defined. Removed
/// entries leave a record in retraction_log().
class BeliefBase {
 public:
  std::uint64_t epoch() const { return epoch_; }
  const std::vector<BeliefEntry>& entries() const { return entries_; }
  const std::vector<Retraction>& retraction_log() const { return log_; }

  std::vector<BeliefEntry> active_entries() const;
  std::vector<logic::Formula> active_formulas() const;
  const BeliefEntry* find(const logic::Formula& f) const;

  // Membership in the implicit closure: active formulas entail phi.
  bool holds(const logic::Formula& phi, const logic::SolverLimits& limits = {}) const;

 private:
  friend class Mutation;
  std::uint64_t epoch_ = 0;
  std::vector<BeliefEntry> entries_;
  std::vector<Retraction> log_;
};

// Selection hook for admission: returns false to keep an entry out of the
// active base (the epistemic-risk gate plugs in here).
using AdmissionGate = std::function<bool(const BeliefEntry&)>;

BeliefBase expand(const BeliefBase& base, BeliefEntry entry, const BeliefConfig& cfg = {});

/// Maximal subsets of `formulas` that do not entail phi, each listed in input
/// order, the family sorted by canonical rendering. Empty when phi is a
/// tautology. Throws logic::ResourceError above `cap` formulas.
std::vector<std::vector<logic::Formula>> remainders(std::span<const logic::Formula> formulas,
                                                    const logic::Formula& phi, std::size_t cap = 16,
                                                    const logic::SolverLimits& limits = {});

/// Partial meet contraction of the active base. Selection keeps the remainders
/// of maximal total provenance confidence and intersects them on ties.
/// A tautological phi is a no-op that appends a warning to `warnings`.
BeliefBase contract(const BeliefBase& base, const logic::Formula& phi, const BeliefConfig& cfg = {},
                    std::vector<std::string>* warnings = nullptr);

/// Partial meet selection over an arbitrary entry list (which may itself be
/// inconsistent): keep[i] tells whether entries[i] survives contraction by phi.
std::vector<bool> contraction_keep(std::span<const BeliefEntry> entries, const logic::Formula& phi,
                                   const BeliefConfig& cfg = {});

// Levi identity: contract by !phi, then expand by phi.
// Throws ConsistencyError when phi is unsatisfiable on its own.
BeliefBase revise(const BeliefBase& base, BeliefEntry entry, const BeliefConfig& cfg = {});

enum class UpdateOutcome { admitted, stored_non_assertable, revised };

std::string_view outcome_name(UpdateOutcome o);

struct UpdateResult {
  BeliefBase base;
  UpdateOutcome outcome;
};

UpdateResult update_belief_state(const BeliefBase& base, BeliefEntry entry, const BeliefConfig& cfg = {},
                                 const AdmissionGate& gate = {});

// Primitive edits used by recovery and replay. Each advances the epoch.
BeliefBase touch(const BeliefBase& base);
BeliefBase retract(const BeliefBase& base, const logic::Formula& phi, const std::string& reason);
BeliefBase demote(const BeliefBase& base, const logic::Formula& phi, double probability,
                  std::optional<Digest> justification);
BeliefBase suspend(const BeliefBase& base, const logic::Formula& phi, std::optional<Digest> justification);
BeliefBase rejustify(const BeliefBase& base, const logic::Formula& phi, double probability,
                     const Provenance& provenance, const Digest& justification, const BeliefConfig& cfg = {},
                     const AdmissionGate& gate = {});

// Tab-separated export, one entry per line:
// epoch, canonical formula, probability, tier level, source, timestamp, status.
std::string export_base(const BeliefBase& base);
std::string format_probability(double p);

class BeliefHistory {
 public:
  void record(const BeliefBase& b);
  const BeliefBase& at(std::uint64_t epoch) const;
  bool contains(std::uint64_t epoch) const { return snapshots_.count(epoch) != 0; }

 private:
  std::map<std::uint64_t, BeliefBase> snapshots_;
};

enum class TransitionKind { added, retracted, changed };

struct Transition {
  TransitionKind kind;
  std::optional<logic::Formula> before;
  std::optional<logic::Formula> after;
};

// Entries that differ between two recorded epochs, ordered by canonical form.
// Throws std::out_of_range for an unrecorded epoch, std::invalid_argument if ti > tj.
std::vector<Transition> epoch_diff(const BeliefHistory& history, std::uint64_t ti, std::uint64_t tj);

}  // namespace veritas::belief
