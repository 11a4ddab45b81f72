#include <cmath>
#include <stdexcept>

#include "veritas/belief.hpp"

namespace veritas::belief {

namespace {

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error(std::string(what) + " must lie in [0,1]");
  }
}

}  // namespace

void validate(const Provenance& p) {
  require_probability(p.confidence, "provenance confidence");
  if (p.timestamp_ms < 0) throw std::domain_error("provenance timestamp must be non-negative");
}

int level(ConfidenceTier t) { return static_cast<int>(t); }

std::string_view tier_name(ConfidenceTier t) {
  switch (t) {
    case ConfidenceTier::rejected: return "Rejected";
    case ConfidenceTier::disfavoured: return "Disfavoured";
    case ConfidenceTier::equivocal: return "Equivocal";
    case ConfidenceTier::supported: return "Supported";
    case ConfidenceTier::endorsed: return "Endorsed";
    case ConfidenceTier::committed: return "Committed";
  }
  return "?";
}

ConfidenceTier classify_confidence(double p) {
  require_probability(p, "probability");
  if (p < 0.01) return ConfidenceTier::rejected;
  if (p < 0.3) return ConfidenceTier::disfavoured;
  if (p < 0.7) return ConfidenceTier::equivocal;
  if (p < 0.9) return ConfidenceTier::supported;
  if (p < 0.99) return ConfidenceTier::endorsed;
  return ConfidenceTier::committed;
}

std::string_view four_state_name(FourState s) {
  switch (s) {
    case FourState::rejected: return "Rejected";
    case FourState::uncertain: return "Uncertain";
    case FourState::provisional: return "Provisional";
    case FourState::committed: return "Committed";
  }
  return "?";
}

FourState project_four_state(double probability, const FourStateThresholds& t) {
  require_probability(probability, "probability");
  if (probability < t.rejection) return FourState::rejected;
  if (probability < t.provisional) return FourState::uncertain;
  if (probability < t.commitment) return FourState::provisional;
  return FourState::committed;
}

double bayes_update(double prior, double likelihood, double marginal) {
  require_probability(prior, "prior");
  require_probability(likelihood, "likelihood");
  require_probability(marginal, "marginal");
  if (marginal == 0.0) throw std::domain_error("marginal probability must be positive");
  double posterior = prior * likelihood / marginal;
  if (posterior > 1.0) {
    throw std::domain_error("incoherent inputs: posterior " + std::to_string(posterior) + " exceeds 1");
  }
  return posterior;
}

std::string_view status_name(StatusTag s) {
  switch (s) {
    case StatusTag::derived: return "derived";
    case StatusTag::approximate: return "approximate";
    case StatusTag::operationally_justified: return "operationally-justified";
    case StatusTag::retracted: return "retracted";
  }
  return "?";
}

BeliefEntry make_entry(logic::Formula formula, double probability, Provenance provenance, StatusTag status,
                       std::optional<Digest> justification) {
  validate(provenance);
  ConfidenceTier tier = classify_confidence(probability);
  return BeliefEntry{std::move(formula), probability, tier, std::move(provenance), status, justification};
}

std::vector<std::string> validate(const BeliefConfig& cfg) {
  if (!(cfg.theta >= 0.5 && cfg.theta < 1.0)) {
    throw std::domain_error("assertion threshold theta must lie in [0.5, 1)");
  }
  std::vector<std::string> warnings;
  if (!(cfg.theta > 0.95)) {
    warnings.push_back("theta " + format_probability(cfg.theta) +
                       " is outside the recommended open interval (0.95, 1)");
  }
  return warnings;
}

}  // namespace veritas::belief
