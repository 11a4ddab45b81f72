#include <cmath>

#include "veritas/guard.hpp"

namespace veritas::guard {

namespace {

void unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error(std::string(name) + " must lie in [0,1]");
}

}  // namespace

void validate(const GuardConfig& cfg) {
  unit_interval(cfg.tau_risk, "tau_risk");
  unit_interval(cfg.epsilon_max, "epsilon_max");
  unit_interval(cfg.delta, "delta");
  unit_interval(cfg.theta_meta, "theta_meta");
  if (!(cfg.decay > 0.0 && cfg.decay <= 1.0)) throw std::domain_error("decay must lie in (0,1]");
}

std::string_view failure_kind_name(FailureKind k) {
  switch (k) {
    case FailureKind::contradiction_injection: return "TypeI-ContradictionInjection";
    case FailureKind::justificatory_collapse: return "TypeII-JustificatoryCollapse";
    case FailureKind::belief_drift: return "TypeIII-BeliefDrift";
    case FailureKind::grounding_misalignment: return "TypeIV-GroundingMisalignment";
    case FailureKind::action_incoherence: return "TypeV-ActionIncoherence";
  }
  return "?";
}

Classification classify_failure(const Diagnostic& d) {
  FailureEvent e{FailureKind::contradiction_injection, d.subject, "", d.epoch, {}, {}, {}, {}};
  if (d.inconsistent_after_insert) {
    e.detail = "base inconsistent after insertion";
    return e;
  }
  if (d.missing_trace) {
    e.kind = FailureKind::justificatory_collapse;
    e.detail = "justification trace missing";
    return e;
  }
  if (d.epsilon && *d.epsilon > d.epsilon_max) {
    e.kind = FailureKind::belief_drift;
    e.epsilon = d.epsilon;
    e.epsilon_max = d.epsilon_max;
    e.detail = "drift " + belief::format_probability(*d.epsilon) + " > " + belief::format_probability(d.epsilon_max);
    return e;
  }
  if (d.grounding_mismatch) {
    e.kind = FailureKind::grounding_misalignment;
    e.detail = "grounding mismatch";
    return e;
  }
  if (d.expected_utility && d.actual_utility) {
    double gap = std::abs(*d.expected_utility - *d.actual_utility);
    if (gap > d.delta) {
      e.kind = FailureKind::action_incoherence;
      e.utility_gap = gap;
      e.delta = d.delta;
      e.detail = "utility gap " + belief::format_probability(gap) + " > " + belief::format_probability(d.delta);
      return e;
    }
  }
  return Unclassified{"no failure condition holds for " + d.subject};
}

RiskAssessment epistemic_risk(const belief::BeliefEntry& entry, std::size_t depth, const GuardConfig& cfg) {
  double risk = 1.0 - entry.probability * std::pow(cfg.decay, static_cast<double>(depth));
  return {entry.formula, risk, cfg.tau_risk, risk <= cfg.tau_risk};
}

belief::AdmissionGate risk_gate(const justify::JustificationStore& store, const GuardConfig& cfg) {
  return [&store, cfg](const belief::BeliefEntry& e) {
    std::size_t depth = 0;
    if (e.justification && store.contains(*e.justification)) depth = store.depth(*e.justification);
    return epistemic_risk(e, depth, cfg).admitted;
  };
}

bool approximation_gate(const logic::Formula&, const logic::Formula&, double epsilon, const GuardConfig& cfg) {
  if (!(epsilon >= 0.0)) throw std::domain_error("approximation divergence must be non-negative");
  return epsilon <= cfg.epsilon_max;
}

std::string_view meta_action_name(MetaAction a) {
  switch (a) {
    case MetaAction::none: return "none";
    case MetaAction::reevaluate: return "reevaluate";
    case MetaAction::contract: return "contract";
  }
  return "?";
}

double justification_health(const belief::BeliefEntry& e, const belief::BeliefBase& base,
                            const justify::JustificationStore& store, std::string* label,
                            const logic::SolverLimits& limits) {
  auto say = [&](const char* s, double v) {
    if (label) *label = s;
    return v;
  };
  if (!e.justification || !store.contains(*e.justification)) return say("missing", 0.0);
  if (e.provisional) return say("provisional", 0.5);
  auto chain = store.trace(*e.justification);
  if (!(chain.back().conclusion == e.formula)) return say("mismatched", 0.0);
  std::vector<logic::Formula> active = base.active_formulas();
  for (const auto& n : chain) {
    if (justify::compute_node_id(n.conclusion, n.rule, n.premises, n.provenance) != n.id) {
      return say("corrupt", 0.0);
    }
    if (n.premises.empty() && !logic::entails(active, n.conclusion, limits)) return say("unsupported", 0.0);
  }
  return say("verified", 1.0);
}

std::vector<MetaLogEntry> mscu_evaluate(const belief::BeliefBase& base, const justify::JustificationStore& store,
                                        const GuardConfig& cfg, const logic::SolverLimits& limits) {
  std::vector<MetaLogEntry> out;
  for (const auto& e : base.entries()) {
    if (!e.assertable) continue;
    std::string label;
    double score = e.probability * justification_health(e, base, store, &label, limits);
    MetaAction action = score < cfg.theta_meta ? MetaAction::reevaluate : MetaAction::none;
    out.push_back({base.epoch(), e.formula, score, action, label});
  }
  return out;
}

std::string format_meta_log(const std::vector<MetaLogEntry>& log) {
  std::string out;
  for (const auto& m : log) {
    out += std::to_string(m.epoch) + '\t' + logic::render_canonical(m.formula) + '\t' +
           belief::format_probability(m.score) + '\t' + m.health + '\t' + std::string(meta_action_name(m.action)) +
           '\n';
  }
  return out;
}

std::vector<MetaLogEntry> mscu_sweep(Context& ctx) {
  auto log = mscu_evaluate(ctx.base, ctx.store, ctx.cfg, ctx.replay.belief.limits);
  ctx.commit(ledger::Op::meta, "", sha256(format_meta_log(log)));
  return log;
}

}  // namespace veritas::guard
