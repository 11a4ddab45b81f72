#include "veritas/ledger.hpp"

namespace veritas::ledger {

namespace rules = justify::rules;

belief::BeliefEntry entry_from_node(const justify::JustificationNode& node) {
  belief::StatusTag status = belief::StatusTag::derived;
  if (node.rule == rules::observation || node.rule == rules::axiom) {
    status = belief::StatusTag::operationally_justified;
  } else if (node.rule == rules::approximate) {
    status = belief::StatusTag::approximate;
  }
  return belief::make_entry(node.conclusion, node.provenance.confidence, node.provenance, status, node.id);
}

namespace {

const justify::JustificationNode& need_node(const Block& b, const justify::JustificationStore& store) {
  const justify::JustificationNode* n = store.get(b.justification);
  if (!n) {
    throw LedgerError("block " + std::to_string(b.index) + " references unknown justification " +
                      to_hex(b.justification));
  }
  if (logic::render_canonical(n->conclusion) != b.formula) {
    throw LedgerError("block " + std::to_string(b.index) + " formula differs from its justification");
  }
  return *n;
}

}  // namespace

Applied apply_block(const belief::BeliefBase& base, const Block& b, const justify::JustificationStore& store,
                    const ReplayConfig& cfg) {
  switch (b.op) {
    case Op::insert: {
      auto r = belief::update_belief_state(base, entry_from_node(need_node(b, store)), cfg.belief, cfg.gate);
      return {std::move(r.base), r.outcome};
    }
    case Op::revise:
      return {belief::revise(base, entry_from_node(need_node(b, store)), cfg.belief), belief::UpdateOutcome::revised};
    case Op::contract:
      return {belief::contract(base, logic::parse(b.formula), cfg.belief), std::nullopt};
    case Op::recovery: {
      logic::Formula phi = logic::parse(b.formula);
      if (b.justification == kZeroDigest) return {belief::retract(base, phi, "recovery"), std::nullopt};
      const auto& n = need_node(b, store);
      if (n.rule == rules::provisional || n.rule == rules::misaligned) {
        return {belief::demote(base, phi, n.provenance.confidence, n.id), std::nullopt};
      }
      if (n.rule == rules::suspect) return {belief::suspend(base, phi, n.id), std::nullopt};
      if (n.rule == rules::policy_override || n.rule == rules::escalation) return {belief::touch(base), std::nullopt};
      return {belief::rejustify(base, phi, n.provenance.confidence, n.provenance, n.id, cfg.belief, cfg.gate),
              std::nullopt};
    }
    case Op::trace_seal:
    case Op::meta:
      return {belief::touch(base), std::nullopt};
  }
  throw LedgerError("unknown op");
}

belief::BeliefBase replay(std::span<const Block> blocks, std::optional<std::uint64_t> upto,
                          const justify::JustificationStore& store, const ReplayConfig& cfg) {
  std::size_t n = blocks.size();
  if (upto) {
    if (*upto >= blocks.size()) {
      throw std::out_of_range("replay target " + std::to_string(*upto) + " beyond ledger length " +
                              std::to_string(blocks.size()));
    }
    n = *upto + 1;
  }
  auto prefix = blocks.first(n);
  VerifyResult v = verify_chain(prefix);
  if (!v.ok) throw CorruptLedger(*v.first_bad, v.reason);
  belief::BeliefBase base;
  for (const auto& b : prefix) base = apply_block(base, b, store, cfg).base;
  return base;
}

}  // namespace veritas::ledger
