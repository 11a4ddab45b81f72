#include <algorithm>
#include <set>

#include "veritas/plan.hpp"

namespace veritas::plan {

PlanFailure::PlanFailure(std::vector<Literal> subgoal, std::string reason)
    : std::runtime_error([&] {
        std::string s = reason + ":";
        for (const auto& l : subgoal) s += " " + display(l);
        return s;
      }()),
      subgoal_(std::move(subgoal)) {}

namespace {

struct Search {
  std::vector<GroundAction> actions;
  // Largest budget at which (goals, state) is known to have no plan.
  std::map<std::pair<std::vector<Literal>, WorldState>, std::size_t> failed;
  // Regression calls left before handing over to breadth-first search.
  std::size_t allowance = 20000;

  static bool achieves(const GroundAction& a, const Literal& l) {
    bool adds = std::find(a.add.begin(), a.add.end(), l.atom) != a.add.end();
    bool dels = std::find(a.del.begin(), a.del.end(), l.atom) != a.del.end();
    return l.positive ? adds : dels && !adds;
  }

  static WorldState run(const Plan& p, WorldState s) {
    for (const auto& a : p) s = apply_effects(a, s);
    return s;
  }

  static Plan concat(Plan a, const GroundAction& mid, const Plan& b) {
    a.push_back(mid);
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }

  static bool satisfied(const std::vector<Literal>& goals, const WorldState& s) {
    return std::all_of(goals.begin(), goals.end(), [&](const Literal& l) { return holds(l, s); });
  }

  // Goal regression: only actions that achieve an unmet literal are tried.
  std::optional<Plan> regress(std::vector<Literal> goals, const WorldState& s, std::size_t budget) {
    std::sort(goals.begin(), goals.end());
    goals.erase(std::unique(goals.begin(), goals.end()), goals.end());
    std::vector<Literal> unmet;
    for (const auto& l : goals) {
      if (!holds(l, s)) unmet.push_back(l);
    }
    if (unmet.empty()) return Plan{};
    if (budget == 0 || allowance == 0) return std::nullopt;
    --allowance;
    auto key = std::make_pair(goals, s);
    if (auto it = failed.find(key); it != failed.end() && it->second >= budget) return std::nullopt;

    for (const auto& a : actions) {
      if (!std::any_of(unmet.begin(), unmet.end(), [&](const Literal& l) { return achieves(a, l); })) continue;
      if (preconditions_met(a, s)) {
        if (auto rest = regress(goals, apply_effects(a, s), budget - 1)) return concat({}, a, *rest);
        continue;
      }
      auto sub = regress(missing_preconditions(a, s), s, budget - 1);
      if (!sub || sub->size() + 1 > budget) continue;
      WorldState mid = run(*sub, s);
      if (!preconditions_met(a, mid)) continue;
      if (auto rest = regress(goals, apply_effects(a, mid), budget - sub->size() - 1)) return concat(*sub, a, *rest);
    }
    if (allowance == 0) return std::nullopt;  // cut short, so not a proof of failure
    auto& slot = failed[key];
    slot = std::max(slot, budget);
    return std::nullopt;
  }

  // Breadth-first over states; sets `exhausted` when states at the budget
  // horizon still had successors left unexplored.
  std::optional<Plan> breadth_first(const std::vector<Literal>& goals, const WorldState& init, std::size_t budget,
                                    bool& exhausted) {
    struct Node {
      WorldState state;
      std::size_t parent;
      std::size_t action;
    };
    std::vector<Node> nodes{{init, 0, 0}};
    std::set<WorldState> seen{init};
    std::size_t begin = 0;
    for (std::size_t depth = 0; begin < nodes.size(); ++depth) {
      std::size_t end = nodes.size();
      for (std::size_t n = begin; n < end; ++n) {
        for (std::size_t i = 0; i < actions.size(); ++i) {
          if (!preconditions_met(actions[i], nodes[n].state)) continue;
          WorldState next = apply_effects(actions[i], nodes[n].state);
          if (seen.count(next)) continue;
          if (depth == budget) {
            exhausted = true;
            return std::nullopt;
          }
          seen.insert(next);
          nodes.push_back({std::move(next), n, i});
          if (satisfied(goals, nodes.back().state)) {
            Plan p;
            for (std::size_t k = nodes.size() - 1; k != 0; k = nodes[k].parent) p.push_back(actions[nodes[k].action]);
            std::reverse(p.begin(), p.end());
            return p;
          }
        }
      }
      begin = end;
    }
    return std::nullopt;
  }
};

}  // namespace

Plan abduce_policy(const std::vector<Literal>& goal, const WorldState& state, const std::vector<ActionSchema>& schemas,
                   const Ontology& ont, std::size_t budget) {
  if (budget == 0) throw std::invalid_argument("depth budget must be at least 1");
  Search search;
  for (const auto& s : schemas) {
    for (auto& g : groundings(s, ont)) search.actions.push_back(std::move(g));
  }
  if (auto p = search.regress(goal, state, budget)) return *p;
  bool exhausted = false;
  if (auto p = search.breadth_first(goal, state, budget, exhausted)) return *p;
  std::vector<Literal> unmet;
  for (const auto& l : goal) {
    if (!holds(l, state)) unmet.push_back(l);
  }
  throw PlanFailure(unmet, exhausted ? "depth budget exhausted" : "no action sequence achieves");
}

}  // namespace veritas::plan
