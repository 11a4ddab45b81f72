#include <algorithm>
#include <cstdint>

#include "veritas/logic.hpp"

// Satisfiability for desk-scale bases: direct CNF by distribution, then DPLL.
// When distribution blows past the clause guard and the atom count is small
// enough, the base is decided by truth-table enumeration instead.

namespace veritas::logic {

namespace {

using Literal = int;  // +v / -v, variables numbered from 1
using Clause = std::vector<Literal>;
using Cnf = std::vector<Clause>;

class ClauseOverflow {};

struct Encoder {
  std::map<Atom, int> vars;
  std::size_t max_clauses;

  int var_of(const Atom& a) const { return vars.at(a); }

  // CNF of f (if positive) or of !f (if !positive), pushing negations inward.
  Cnf encode(const Formula& f, bool positive) {
    switch (f.kind()) {
      case Connective::atom: {
        int v = var_of(f.atom());
        return {{positive ? v : -v}};
      }
      case Connective::negation:
        return encode(f.operand(), !positive);
      case Connective::conjunction:
        return positive ? both(f.left(), true, f.right(), true) : either(f.left(), false, f.right(), false);
      case Connective::disjunction:
        return positive ? either(f.left(), true, f.right(), true) : both(f.left(), false, f.right(), false);
      case Connective::implication:
        // a -> b  ==  !a | b ;  !(a -> b)  ==  a & !b
        return positive ? either(f.left(), false, f.right(), true) : both(f.left(), true, f.right(), false);
      case Connective::equivalence: {
        // a <-> b  ==  (!a | b) & (a | !b) ;  !(a <-> b)  ==  (a | b) & (!a | !b)
        Cnf first = positive ? either(f.left(), false, f.right(), true) : either(f.left(), true, f.right(), true);
        Cnf second = positive ? either(f.left(), true, f.right(), false) : either(f.left(), false, f.right(), false);
        return append(std::move(first), std::move(second));
      }
    }
    return {};
  }

  Cnf append(Cnf a, Cnf b) {
    a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
    if (a.size() > max_clauses) throw ClauseOverflow{};
    return a;
  }

  Cnf both(const Formula& l, bool lp, const Formula& r, bool rp) { return append(encode(l, lp), encode(r, rp)); }

  Cnf either(const Formula& l, bool lp, const Formula& r, bool rp) {
    Cnf a = encode(l, lp);
    Cnf b = encode(r, rp);
    if (a.size() * b.size() > max_clauses) throw ClauseOverflow{};
    Cnf out;
    out.reserve(a.size() * b.size());
    for (const auto& ca : a) {
      for (const auto& cb : b) {
        Clause c = ca;
        c.insert(c.end(), cb.begin(), cb.end());
        if (normalise(c)) out.push_back(std::move(c));
      }
    }
    return out;
  }

  // Sorts and dedups; returns false for tautological clauses.
  static bool normalise(Clause& c) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    for (Literal lit : c) {
      if (lit > 0 && std::binary_search(c.begin(), c.end(), -lit)) return false;
    }
    return true;
  }
};

class Dpll {
 public:
  Dpll(Cnf clauses, std::size_t nvars) : clauses_(std::move(clauses)), assign_(nvars + 1, 0) {}

  bool solve() { return search(); }

  bool value(int v) const { return assign_[v] > 0; }

 private:
  // Returns false on conflict. Records assigned variables on trail.
  bool propagate(std::vector<int>& trail) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& c : clauses_) {
        int unassigned = 0;
        Literal last = 0;
        bool satisfied = false;
        for (Literal lit : c) {
          int v = std::abs(lit);
          int8_t a = assign_[v];
          if (a == 0) {
            ++unassigned;
            last = lit;
          } else if ((a > 0) == (lit > 0)) {
            satisfied = true;
            break;
          }
        }
        if (satisfied) continue;
        if (unassigned == 0) return false;
        if (unassigned == 1) {
          assign_[std::abs(last)] = last > 0 ? 1 : -1;
          trail.push_back(std::abs(last));
          changed = true;
        }
      }
    }
    return true;
  }

  int choose() const {
    // First unassigned literal of the shortest open clause.
    std::size_t best_len = SIZE_MAX;
    int best = 0;
    for (const auto& c : clauses_) {
      std::size_t open = 0;
      int candidate = 0;
      bool satisfied = false;
      for (Literal lit : c) {
        int8_t a = assign_[std::abs(lit)];
        if (a == 0) {
          ++open;
          if (!candidate) candidate = lit;
        } else if ((a > 0) == (lit > 0)) {
          satisfied = true;
          break;
        }
      }
      if (!satisfied && open > 0 && open < best_len) {
        best_len = open;
        best = candidate;
      }
    }
    return best;
  }

  void undo(const std::vector<int>& trail) {
    for (int v : trail) assign_[v] = 0;
  }

  bool search() {
    std::vector<int> trail;
    if (!propagate(trail)) {
      undo(trail);
      return false;
    }
    int lit = choose();
    if (lit == 0) return true;
    for (int polarity : {1, -1}) {
      int v = std::abs(lit);
      assign_[v] = static_cast<int8_t>((lit > 0 ? 1 : -1) * polarity);
      if (search()) return true;
      assign_[v] = 0;
    }
    undo(trail);
    return false;
  }

  Cnf clauses_;
  std::vector<int8_t> assign_;
};

std::optional<Valuation> truth_table(std::span<const Formula> base, const std::vector<Atom>& atoms) {
  const std::uint64_t rows = std::uint64_t{1} << atoms.size();
  Valuation v;
  for (const auto& a : atoms) v[a] = false;
  for (std::uint64_t row = 0; row < rows; ++row) {
    for (std::size_t i = 0; i < atoms.size(); ++i) v[atoms[i]] = (row >> i) & 1U;
    bool all = std::all_of(base.begin(), base.end(), [&](const Formula& f) { return evaluate(f, v); });
    if (all) return v;
  }
  return std::nullopt;
}

}  // namespace

bool has_complementary_pair(std::span<const Formula> base) {
  for (const auto& f : base) {
    if (f.kind() != Connective::negation) continue;
    for (const auto& g : base) {
      if (g == f.operand()) return true;
    }
  }
  return false;
}

std::optional<Valuation> find_model(std::span<const Formula> base, const SolverLimits& limits) {
  std::set<Atom> atom_set = atoms_of(base);
  if (atom_set.size() > limits.max_atoms) {
    throw ResourceError("atom count " + std::to_string(atom_set.size()) + " exceeds limit " +
                        std::to_string(limits.max_atoms));
  }
  if (has_complementary_pair(base)) return std::nullopt;

  std::vector<Atom> atoms(atom_set.begin(), atom_set.end());
  Encoder enc{{}, limits.max_clauses};
  for (std::size_t i = 0; i < atoms.size(); ++i) enc.vars.emplace(atoms[i], static_cast<int>(i + 1));

  Cnf cnf;
  try {
    for (const auto& f : base) cnf = enc.append(std::move(cnf), enc.encode(f, true));
  } catch (const ClauseOverflow&) {
    if (atoms.size() <= limits.truth_table_atoms) return truth_table(base, atoms);
    throw ResourceError("CNF exceeds " + std::to_string(limits.max_clauses) + " clauses over " +
                        std::to_string(atoms.size()) + " atoms");
  }

  Dpll solver(std::move(cnf), atoms.size());
  if (!solver.solve()) return std::nullopt;
  Valuation model;
  for (std::size_t i = 0; i < atoms.size(); ++i) model[atoms[i]] = solver.value(static_cast<int>(i + 1));
  return model;
}

bool is_consistent(std::span<const Formula> base, const SolverLimits& limits) {
  return find_model(base, limits).has_value();
}

bool entails(std::span<const Formula> base, const Formula& phi, const SolverLimits& limits) {
  std::vector<Formula> extended(base.begin(), base.end());
  extended.push_back(neg(phi));
  return !is_consistent(extended, limits);
}

bool is_tautology(const Formula& phi, const SolverLimits& limits) { return entails({}, phi, limits); }

bool is_satisfiable(const Formula& phi, const SolverLimits& limits) {
  return is_consistent(std::span<const Formula>(&phi, 1), limits);
}

bool equivalent(const Formula& a, const Formula& b, const SolverLimits& limits) {
  return is_tautology(iff(a, b), limits);
}

}  // namespace veritas::logic
