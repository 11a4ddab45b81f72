#include <algorithm>
#include <cmath>

#include "veritas/guard.hpp"

namespace veritas::guard {

using ledger::Op;
using logic::Formula;
namespace rules = justify::rules;

ledger::Applied Context::commit(Op op, const std::string& formula, const Digest& digest) {
  if (digest != kZeroDigest && persist_store) persist_store();
  const ledger::Block& b = ledger.append(clock ? clock() : 0, op, formula, digest);
  ledger::Applied applied = ledger::apply_block(base, b, store, replay);
  base = applied.base;
  return applied;
}

justify::NodeId Context::record(const Formula& f, const std::vector<justify::NodeId>& premises,
                                const std::string& rule, const std::string& source, double confidence) {
  return store.record_inference(f, premises, rule, belief::Provenance{source, clock ? clock() : 0, confidence},
                                replay.belief.limits);
}

std::string format_report(const RecoveryReport& r) {
  std::string out;
  for (const auto& l : r.lines) {
    out += std::to_string(l.epoch) + '\t' + std::string(failure_kind_name(l.kind)) + '\t' + l.protocol + '\t' +
           l.subject + '\t' + l.outcome + '\n';
  }
  return out;
}

namespace {

constexpr const char* kGuardSource = "guard";

struct Run {
  const RecoveryInput& in;
  Context& ctx;
  RecoveryReport report;
  std::string protocol;

  void line(const std::string& subject, const std::string& outcome) {
    report.lines.push_back({ctx.base.epoch(), in.event.kind, protocol, subject, outcome});
  }

  void protocol_one() {
    protocol = "ProtocolI-RevisionCascade";
    if (!in.incoming) {
      auto cores = detect_contradiction(ctx.base, ctx.replay.belief.limits);
      ctx.commit(Op::meta, "");
      line(in.event.subject, cores.empty() ? "no contradiction" : "unresolved");
      return;
    }
    const belief::BeliefEntry& incoming = *in.incoming;
    std::string incoming_canon = logic::render_canonical(incoming.formula);
    std::vector<belief::BeliefEntry> candidates = ctx.base.active_entries();
    candidates.push_back(incoming);
    Resolution res = resolve_contradiction(candidates, ctx.reliability, ctx.replay.belief);

    bool rejected = false;
    for (const auto& r : res.removals) {
      std::string canon = logic::render_canonical(r.formula);
      ctx.commit(Op::recovery, canon);
      if (r.formula == incoming.formula) {
        rejected = true;
        line(canon, "rejected (" + r.reason + ")");
      } else {
        report.retracted.push_back(r.formula);
        line(canon, "retracted (" + r.reason + ")");
      }
    }
    if (!rejected) {
      if (!incoming.justification) throw std::invalid_argument("incoming entry lacks a justification node");
      auto applied = ctx.commit(Op::insert, incoming_canon, *incoming.justification);
      report.incoming_admitted = applied.outcome != belief::UpdateOutcome::stored_non_assertable;
      line(incoming_canon, std::string(belief::outcome_name(*applied.outcome)));
    }
  }

  // Active entries other than phi whose support does not already pass through phi.
  std::vector<belief::BeliefEntry> independent_support(const Formula& phi) {
    std::vector<belief::BeliefEntry> out;
    for (const auto& e : ctx.base.active_entries()) {
      if (e.formula == phi || !e.justification || !ctx.store.contains(*e.justification)) continue;
      bool circular = false;
      for (const auto& n : ctx.store.trace(*e.justification)) {
        if (n.conclusion == phi) circular = true;
      }
      if (!circular) out.push_back(e);
    }
    return out;
  }

  void protocol_two(const Formula& phi, const std::string& canon) {
    protocol = "ProtocolII-Rederivation";
    auto support = independent_support(phi);
    std::vector<Formula> fs;
    for (const auto& e : support) fs.push_back(e.formula);
    if (ctx.base.find(phi) && logic::entails(fs, phi, ctx.replay.belief.limits)) {
      for (std::size_t k = 0; k < support.size();) {
        std::vector<Formula> trial;
        for (std::size_t m = 0; m < support.size(); ++m) {
          if (m != k) trial.push_back(support[m].formula);
        }
        if (logic::entails(trial, phi, ctx.replay.belief.limits)) {
          support.erase(support.begin() + static_cast<std::ptrdiff_t>(k));
        } else {
          ++k;
        }
      }
      std::vector<justify::NodeId> premises;
      double p = 1.0;
      for (const auto& e : support) {
        premises.push_back(*e.justification);
        p = std::min(p, e.probability);
      }
      auto id = ctx.record(phi, premises, rules::rederive, kGuardSource, p);
      ctx.commit(Op::recovery, canon, id);
      const belief::BeliefEntry* after = ctx.base.find(phi);
      line(canon, std::string("rejustified from ") + std::to_string(premises.size()) + " premises at " +
                      belief::format_probability(p) + (after && after->assertable ? "" : " (held non-assertable)"));
      return;
    }
    demote(phi, canon, rules::provisional, "demoted to provisional");
  }

  void demote(const Formula& phi, const std::string& canon, const std::string& rule, const std::string& outcome) {
    if (!ctx.base.find(phi)) {
      ctx.commit(Op::meta, "");
      line(canon, "not in base");
      return;
    }
    auto id = ctx.record(phi, {}, rule, kGuardSource, 0.0);
    ctx.commit(Op::recovery, canon, id);
    line(canon, outcome);
  }

  void protocol_three(const Formula& phi, const std::string& canon) {
    protocol = "ProtocolIII-Regrounding";
    const belief::BeliefEntry* e = ctx.base.find(phi);
    if (!e) {
      ctx.commit(Op::meta, "");
      line(canon, "not in base");
      return;
    }
    auto id = ctx.record(phi, {}, rules::suspect, kGuardSource, e->probability);
    ctx.commit(Op::recovery, canon, id);
    line(canon, "suspended for re-observation");
  }

  void protocol_five() {
    protocol = "ProtocolV-PolicyOverride";
    const std::string& name = in.event.subject;
    if (!logic::is_identifier(name)) throw std::invalid_argument("policy name must be an identifier: " + name);
    double delta = in.event.delta.value_or(ctx.cfg.delta);
    Formula blocked = logic::atom("Blocked", {name});
    ctx.commit(Op::recovery, logic::render_canonical(blocked),
               ctx.record(blocked, {}, rules::policy_override, kGuardSource, 1.0));
    line(name, "blocked");

    const PolicyCandidate* best = nullptr;
    for (const auto& c : in.alternatives) {
      if (c.name == name || std::abs(c.expected_utility - c.actual_utility) > delta) continue;
      if (!best || c.expected_utility > best->expected_utility) best = &c;
    }
    if (best) {
      report.selected_policy = best->name;
      line(name, "selected " + best->name);
      return;
    }
    Formula esc = logic::atom("Escalated", {name});
    ctx.commit(Op::recovery, logic::render_canonical(esc),
               ctx.record(esc, {}, rules::escalation, kGuardSource, 1.0));
    report.escalated = true;
    line(name, "escalated: no policy within utility gap " + belief::format_probability(delta));
  }
};

}  // namespace

RecoveryReport run_recovery(const RecoveryInput& input, Context& ctx) {
  Run run{input, ctx, {}, {}};
  switch (input.event.kind) {
    case FailureKind::contradiction_injection:
      run.protocol_one();
      break;
    case FailureKind::justificatory_collapse: {
      Formula phi = logic::parse(input.event.subject);
      run.protocol_two(phi, logic::render_canonical(phi));
      break;
    }
    case FailureKind::belief_drift: {
      Formula phi = logic::parse(input.event.subject);
      run.protocol_three(phi, logic::render_canonical(phi));
      break;
    }
    case FailureKind::grounding_misalignment: {
      Formula phi = logic::parse(input.event.subject);
      run.protocol = "ProtocolIV-Demotion";
      run.demote(phi, logic::render_canonical(phi), rules::misaligned, "demoted; flagged for human review");
      run.report.human_flag = true;
      break;
    }
    case FailureKind::action_incoherence:
      run.protocol_five();
      break;
  }
  return run.report;
}

}  // namespace veritas::guard
