#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>

#include "veritas/belief.hpp"

namespace veritas::belief {

using logic::Formula;

std::vector<BeliefEntry> BeliefBase::active_entries() const {
  std::vector<BeliefEntry> out;
  for (const auto& e : entries_) {
    if (e.assertable) out.push_back(e);
  }
  return out;
}

std::vector<Formula> BeliefBase::active_formulas() const {
  std::vector<Formula> out;
  for (const auto& e : entries_) {
    if (e.assertable) out.push_back(e.formula);
  }
  return out;
}

const BeliefEntry* BeliefBase::find(const Formula& f) const {
  for (const auto& e : entries_) {
    if (e.formula == f) return &e;
  }
  return nullptr;
}

bool BeliefBase::holds(const Formula& phi, const logic::SolverLimits& limits) const {
  return logic::entails(active_formulas(), phi, limits);
}

// Private access for the free-function operations.
class Mutation {
 public:
  static BeliefBase next(const BeliefBase& b) {
    BeliefBase out = b;
    ++out.epoch_;
    return out;
  }
  static std::vector<BeliefEntry>& entries(BeliefBase& b) { return b.entries_; }
  static std::vector<Retraction>& log(BeliefBase& b) { return b.log_; }

  static void put(BeliefBase& b, BeliefEntry entry) {
    entry.tier = classify_confidence(entry.probability);
    entry.epoch = b.epoch_;
    for (auto& e : b.entries_) {
      if (e.formula == entry.formula) {
        e = std::move(entry);
        return;
      }
    }
    b.entries_.push_back(std::move(entry));
  }

  static void remove(BeliefBase& b, const Formula& phi, const std::string& reason) {
    auto it = std::find_if(b.entries_.begin(), b.entries_.end(), [&](const BeliefEntry& e) { return e.formula == phi; });
    if (it == b.entries_.end()) return;
    b.log_.push_back({b.epoch_, it->formula, reason});
    b.entries_.erase(it);
  }
};

namespace {

using Mask = std::uint32_t;

bool is_subset(Mask a, Mask b) { return (a & ~b) == 0; }

std::vector<Formula> select(std::span<const Formula> fs, Mask m) {
  std::vector<Formula> out;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (m & (Mask{1} << i)) out.push_back(fs[i]);
  }
  return out;
}

// Maximal non-entailing subsets, as bitmasks over `fs`, largest first.
std::vector<Mask> remainder_masks(std::span<const Formula> fs, const Formula& phi, std::size_t cap,
                                  const logic::SolverLimits& limits) {
  if (fs.size() > cap || fs.size() > 24) {
    throw logic::ResourceError("remainder enumeration over " + std::to_string(fs.size()) +
                               " formulas exceeds cap " + std::to_string(cap));
  }
  if (logic::is_tautology(phi, limits)) return {};
  const Mask full = fs.empty() ? 0 : static_cast<Mask>((std::uint64_t{1} << fs.size()) - 1);
  if (!logic::entails(fs, phi, limits)) return {full};

  std::vector<std::vector<Mask>> by_size(fs.size() + 1);
  for (std::uint64_t m = 0; m <= full; ++m) by_size[std::popcount(static_cast<Mask>(m))].push_back(static_cast<Mask>(m));

  std::vector<Mask> found;
  for (std::size_t k = fs.size() + 1; k-- > 0;) {
    for (Mask m : by_size[k]) {
      bool dominated = std::any_of(found.begin(), found.end(), [&](Mask r) { return is_subset(m, r); });
      if (dominated) continue;
      if (!logic::entails(select(fs, m), phi, limits)) found.push_back(m);
    }
  }
  return found;
}

std::string family_key(const std::vector<Formula>& fs) {
  std::string key;
  for (const auto& f : fs) {
    key += logic::render_canonical(f);
    key += '\x1E';
  }
  return key;
}

std::vector<bool> keep_mask(std::span<const BeliefEntry> entries, const Formula& phi, const BeliefConfig& cfg) {
  std::vector<Formula> fs;
  for (const auto& e : entries) fs.push_back(e.formula);
  std::vector<bool> keep(entries.size(), true);
  if (!logic::entails(fs, phi, cfg.limits)) return keep;

  std::vector<Mask> rems = remainder_masks(fs, phi, cfg.remainder_cap, cfg.limits);
  Mask kept = 0;
  if (!rems.empty()) {
    auto weight = [&](Mask m) {
      double w = 0.0;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        if (m & (Mask{1} << i)) w += entries[i].provenance.confidence;
      }
      return w;
    };
    double best = -1.0;
    for (Mask m : rems) best = std::max(best, weight(m));
    kept = ~Mask{0};
    for (Mask m : rems) {
      if (std::abs(weight(m) - best) <= 1e-9) kept &= m;
    }
  }
  for (std::size_t i = 0; i < entries.size(); ++i) keep[i] = (kept & (Mask{1} << i)) != 0;
  return keep;
}

// Shared by contract and revise; `out` is already at the new epoch.
void contract_in_place(BeliefBase& out, const Formula& phi, const BeliefConfig& cfg, const std::string& reason) {
  std::vector<BeliefEntry> active = out.active_entries();
  std::vector<bool> keep = keep_mask(active, phi, cfg);
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (!keep[i]) Mutation::remove(out, active[i].formula, reason);
  }
}

}  // namespace

std::vector<std::vector<Formula>> remainders(std::span<const Formula> formulas, const Formula& phi, std::size_t cap,
                                             const logic::SolverLimits& limits) {
  std::vector<std::vector<Formula>> out;
  for (Mask m : remainder_masks(formulas, phi, cap, limits)) out.push_back(select(formulas, m));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return family_key(a) < family_key(b); });
  return out;
}

std::vector<bool> contraction_keep(std::span<const BeliefEntry> entries, const Formula& phi, const BeliefConfig& cfg) {
  return keep_mask(entries, phi, cfg);
}

BeliefBase expand(const BeliefBase& base, BeliefEntry entry, const BeliefConfig& cfg) {
  if (entry.assertable) {
    std::vector<Formula> fs = base.active_formulas();
    fs.push_back(entry.formula);
    if (!logic::is_consistent(fs, cfg.limits)) {
      throw ConsistencyError("expansion by " + logic::render_canonical(entry.formula) +
                             " would make the base inconsistent; use revision");
    }
  }
  BeliefBase out = Mutation::next(base);
  Mutation::put(out, std::move(entry));
  return out;
}

BeliefBase contract(const BeliefBase& base, const Formula& phi, const BeliefConfig& cfg,
                    std::vector<std::string>* warnings) {
  BeliefBase out = Mutation::next(base);
  if (logic::is_tautology(phi, cfg.limits)) {
    if (warnings) warnings->push_back("contraction by tautology " + logic::render_canonical(phi) + " ignored");
    return out;
  }
  contract_in_place(out, phi, cfg, "contract " + logic::render_canonical(phi));
  return out;
}

BeliefBase revise(const BeliefBase& base, BeliefEntry entry, const BeliefConfig& cfg) {
  if (!logic::is_satisfiable(entry.formula, cfg.limits)) {
    throw ConsistencyError("revision by unsatisfiable formula " + logic::render_canonical(entry.formula));
  }
  entry.assertable = true;
  BeliefBase out = Mutation::next(base);
  contract_in_place(out, logic::neg(entry.formula), cfg, "revise " + logic::render_canonical(entry.formula));
  Mutation::put(out, std::move(entry));
  return out;
}

std::string_view outcome_name(UpdateOutcome o) {
  switch (o) {
    case UpdateOutcome::admitted: return "admitted";
    case UpdateOutcome::stored_non_assertable: return "stored-non-assertable";
    case UpdateOutcome::revised: return "revised";
  }
  return "?";
}

UpdateResult update_belief_state(const BeliefBase& base, BeliefEntry entry, const BeliefConfig& cfg,
                                 const AdmissionGate& gate) {
  entry.assertable = entry.probability >= cfg.theta && (!gate || gate(entry));
  if (!entry.assertable) {
    BeliefBase out = Mutation::next(base);
    Mutation::put(out, std::move(entry));
    return {std::move(out), UpdateOutcome::stored_non_assertable};
  }
  std::vector<Formula> fs = base.active_formulas();
  fs.push_back(entry.formula);
  if (logic::is_consistent(fs, cfg.limits)) {
    return {expand(base, std::move(entry), cfg), UpdateOutcome::admitted};
  }
  return {revise(base, std::move(entry), cfg), UpdateOutcome::revised};
}

BeliefBase touch(const BeliefBase& base) { return Mutation::next(base); }

BeliefBase retract(const BeliefBase& base, const Formula& phi, const std::string& reason) {
  BeliefBase out = Mutation::next(base);
  Mutation::remove(out, phi, reason);
  return out;
}

namespace {

BeliefEntry* find_mut(BeliefBase& b, const Formula& phi) {
  for (auto& e : Mutation::entries(b)) {
    if (e.formula == phi) return &e;
  }
  return nullptr;
}

}  // namespace

BeliefBase demote(const BeliefBase& base, const Formula& phi, double probability, std::optional<Digest> justification) {
  BeliefBase out = Mutation::next(base);
  if (BeliefEntry* e = find_mut(out, phi)) {
    e->probability = probability;
    e->tier = classify_confidence(probability);
    e->assertable = false;
    e->provisional = true;
    e->justification = justification;
  }
  return out;
}

BeliefBase suspend(const BeliefBase& base, const Formula& phi, std::optional<Digest> justification) {
  BeliefBase out = Mutation::next(base);
  if (BeliefEntry* e = find_mut(out, phi)) {
    e->assertable = false;
    e->provisional = true;
    e->justification = justification;
  }
  return out;
}

BeliefBase rejustify(const BeliefBase& base, const Formula& phi, double probability, const Provenance& provenance,
                     const Digest& justification, const BeliefConfig& cfg, const AdmissionGate& gate) {
  BeliefBase out = Mutation::next(base);
  BeliefEntry* e = find_mut(out, phi);
  if (!e) return out;
  e->probability = probability;
  e->tier = classify_confidence(probability);
  e->provenance = provenance;
  e->justification = justification;
  e->provisional = false;
  e->status = StatusTag::derived;
  bool was_active = e->assertable;
  bool admissible = probability >= cfg.theta && (!gate || gate(*e));
  if (admissible && !was_active) {
    // Re-entering the active base must not break consistency.
    std::vector<Formula> fs = out.active_formulas();
    fs.push_back(phi);
    admissible = logic::is_consistent(fs, cfg.limits);
  }
  e->assertable = admissible;
  return out;
}

std::string format_probability(double p) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), p);
  return std::string(buf, res.ptr);
}

std::string export_base(const BeliefBase& base) {
  std::string out;
  for (const auto& e : base.entries()) {
    out += std::to_string(e.epoch);
    out += '\t';
    out += logic::render_canonical(e.formula);
    out += '\t';
    out += format_probability(e.probability);
    out += '\t';
    out += std::to_string(level(e.tier));
    out += '\t';
    out += e.provenance.source;
    out += '\t';
    out += std::to_string(e.provenance.timestamp_ms);
    out += '\t';
    out += status_name(e.status);
    if (!e.assertable) out += ",non-assertable";
    if (e.provisional) out += ",provisional";
    out += '\n';
  }
  return out;
}

void BeliefHistory::record(const BeliefBase& b) { snapshots_.insert_or_assign(b.epoch(), b); }

const BeliefBase& BeliefHistory::at(std::uint64_t epoch) const {
  auto it = snapshots_.find(epoch);
  if (it == snapshots_.end()) throw std::out_of_range("epoch " + std::to_string(epoch) + " not recorded");
  return it->second;
}

std::vector<Transition> epoch_diff(const BeliefHistory& history, std::uint64_t ti, std::uint64_t tj) {
  if (ti > tj) throw std::invalid_argument("epoch_diff requires ti <= tj");
  const BeliefBase& a = history.at(ti);
  const BeliefBase& b = history.at(tj);
  std::map<std::string, std::pair<const BeliefEntry*, const BeliefEntry*>> joined;
  for (const auto& e : a.entries()) joined[logic::render_canonical(e.formula)].first = &e;
  for (const auto& e : b.entries()) joined[logic::render_canonical(e.formula)].second = &e;

  std::vector<Transition> out;
  for (const auto& [key, pair] : joined) {
    const auto* before = pair.first;
    const auto* after = pair.second;
    if (before && !after) {
      out.push_back({TransitionKind::retracted, before->formula, std::nullopt});
    } else if (!before && after) {
      out.push_back({TransitionKind::added, std::nullopt, after->formula});
    } else if (before->probability != after->probability || before->status != after->status ||
               before->assertable != after->assertable || before->provisional != after->provisional ||
               before->provenance != after->provenance) {
      out.push_back({TransitionKind::changed, before->formula, after->formula});
    }
  }
  return out;
}

}  // namespace veritas::belief
