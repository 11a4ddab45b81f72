#include <algorithm>
#include <tuple>

#include "veritas/guard.hpp"

namespace veritas::guard {

using logic::Formula;

std::optional<std::vector<std::size_t>> unsat_core(std::span<const Formula> fs, const logic::SolverLimits& limits) {
  if (logic::is_consistent(fs, limits)) return std::nullopt;

  // Fast path: an explicit f / (! f) pair, both satisfiable on their own.
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (fs[i].kind() != logic::Connective::negation) continue;
    for (std::size_t j = 0; j < fs.size(); ++j) {
      if (fs[j] == fs[i].operand() && logic::is_satisfiable(fs[j], limits) &&
          logic::is_satisfiable(fs[i], limits)) {
        return std::vector<std::size_t>{std::min(i, j), std::max(i, j)};
      }
    }
  }

  // Deletion-based shrinking: drop each member whose removal keeps the set unsat.
  std::vector<std::size_t> core(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) core[i] = i;
  for (std::size_t k = 0; k < core.size();) {
    std::vector<Formula> trial;
    for (std::size_t m = 0; m < core.size(); ++m) {
      if (m != k) trial.push_back(fs[core[m]]);
    }
    if (!logic::is_consistent(trial, limits)) {
      core.erase(core.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
      ++k;
    }
  }
  return core;
}

std::vector<std::vector<Formula>> detect_contradiction(std::span<const Formula> fs,
                                                       const logic::SolverLimits& limits) {
  auto core = unsat_core(fs, limits);
  if (!core) return {};
  std::vector<Formula> out;
  for (auto i : *core) out.push_back(fs[i]);
  return {out};
}

std::vector<std::vector<Formula>> detect_contradiction(const belief::BeliefBase& base,
                                                       const logic::SolverLimits& limits) {
  return detect_contradiction(base.active_formulas(), limits);
}

Resolution resolve_contradiction(std::vector<belief::BeliefEntry> entries, const justify::SourceReliability& rel,
                                 const belief::BeliefConfig& cfg) {
  Resolution out;
  for (;;) {
    std::vector<Formula> fs;
    for (const auto& e : entries) fs.push_back(e.formula);
    auto core = unsat_core(fs, cfg.limits);
    if (!core) break;

    auto key = [&](std::size_t i) {
      const auto& p = entries[i].provenance;
      return std::make_tuple(p.confidence, p.timestamp_ms, rel.score(p.source));
    };
    auto canon = [&](std::size_t i) { return logic::render_canonical(entries[i].formula); };

    std::size_t lowest = (*core)[0];
    std::size_t highest = (*core)[0];
    for (auto i : *core) {
      if (key(i) < key(lowest) || (key(i) == key(lowest) && canon(i) < canon(lowest))) lowest = i;
      if (key(i) > key(highest) || (key(i) == key(highest) && canon(i) < canon(highest))) highest = i;
    }

    std::vector<std::size_t> drop;
    std::string reason;
    if (justify::dominance(entries[highest].provenance, entries[lowest].provenance, rel) ==
        justify::Dominance::first) {
      drop.push_back(lowest);
      reason = "dominated by " + canon(highest);
    } else {
      // Every member ties: contract the core by its lowest member.
      std::vector<belief::BeliefEntry> members;
      for (auto i : *core) members.push_back(entries[i]);
      auto keep = belief::contraction_keep(members, entries[lowest].formula, cfg);
      for (std::size_t k = 0; k < core->size(); ++k) {
        if (!keep[k]) drop.push_back((*core)[k]);
      }
      reason = "contract " + canon(lowest);
    }
    std::sort(drop.rbegin(), drop.rend());
    for (auto i : drop) {
      out.removals.push_back({entries[i].formula, reason});
      entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }
  out.survivors = std::move(entries);
  return out;
}

}  // namespace veritas::guard
