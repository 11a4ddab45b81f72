#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the library's solver, remainder or planner code.

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "veritas/logic.hpp"

namespace oracle {

using veritas::logic::Atom;
using veritas::logic::Connective;
using veritas::logic::Formula;

inline bool eval(const Formula& f, const std::map<Atom, bool>& v) {
  switch (f.kind()) {
    case Connective::atom: return v.at(f.atom());
    case Connective::negation: return !eval(f.operand(), v);
    case Connective::conjunction: return eval(f.left(), v) && eval(f.right(), v);
    case Connective::disjunction: return eval(f.left(), v) || eval(f.right(), v);
    case Connective::implication: return !eval(f.left(), v) || eval(f.right(), v);
    case Connective::equivalence: return eval(f.left(), v) == eval(f.right(), v);
  }
  return false;
}

inline void collect(const Formula& f, std::set<Atom>& out) {
  if (f.kind() == Connective::atom) {
    out.insert(f.atom());
  } else if (f.kind() == Connective::negation) {
    collect(f.operand(), out);
  } else {
    collect(f.left(), out);
    collect(f.right(), out);
  }
}

// Calls visit(valuation) for each of the 2^n rows; stops early when it returns true.
template <typename Visit>
bool any_row(std::span<const Formula> fs, Visit visit) {
  std::set<Atom> atoms;
  for (const auto& f : fs) collect(f, atoms);
  std::vector<Atom> list(atoms.begin(), atoms.end());
  for (std::uint64_t row = 0; row < (std::uint64_t{1} << list.size()); ++row) {
    std::map<Atom, bool> v;
    for (std::size_t i = 0; i < list.size(); ++i) v[list[i]] = (row >> i) & 1;
    if (visit(v)) return true;
  }
  return false;
}

inline bool consistent(std::span<const Formula> fs) {
  return any_row(fs, [&](const std::map<Atom, bool>& v) {
    for (const auto& f : fs) {
      if (!eval(f, v)) return false;
    }
    return true;
  });
}

inline bool entails(std::span<const Formula> fs, const Formula& phi) {
  std::vector<Formula> all(fs.begin(), fs.end());
  all.push_back(phi);
  return !any_row(all, [&](const std::map<Atom, bool>& v) {
    for (const auto& f : fs) {
      if (!eval(f, v)) return false;
    }
    return !eval(phi, v);
  });
}

inline Formula random_formula(std::mt19937& rng, const std::vector<Formula>& leaves, int depth) {
  std::uniform_int_distribution<int> pick(0, 5);
  int k = depth <= 0 ? 0 : pick(rng);
  if (k == 0) return leaves[std::uniform_int_distribution<std::size_t>(0, leaves.size() - 1)(rng)];
  if (k == 1) return veritas::logic::neg(random_formula(rng, leaves, depth - 1));
  static constexpr Connective ops[] = {Connective::conjunction, Connective::disjunction, Connective::implication,
                                       Connective::equivalence};
  return Formula::binary(ops[k - 2], random_formula(rng, leaves, depth - 1), random_formula(rng, leaves, depth - 1));
}

// Fixed pool of ten formulas over p, q, r shared by the exhaustive suites.
inline std::vector<Formula> pool10() {
  std::vector<Formula> out;
  for (const char* s : {"p", "q", "r", "!p", "p -> q", "q -> r", "p & q", "p | r", "!q | !r", "p <-> !r"}) {
    out.push_back(veritas::logic::parse(s));
  }
  return out;
}

// All subsets of size <= k of pool, each in pool order.
inline std::vector<std::vector<Formula>> subsets_upto(const std::vector<Formula>& pool, std::size_t k) {
  std::vector<std::vector<Formula>> out;
  for (std::uint32_t m = 0; m < (1u << pool.size()); ++m) {
    if (static_cast<std::size_t>(__builtin_popcount(m)) > k) continue;
    std::vector<Formula> s;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (m & (1u << i)) s.push_back(pool[i]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Maximal subsets of fs not entailing phi, by brute force over all masks.
inline std::vector<std::uint32_t> remainders(std::span<const Formula> fs, const Formula& phi) {
  std::vector<std::uint32_t> good;
  std::uint32_t full = (1u << fs.size()) - 1;
  for (std::uint32_t m = 0; m <= full; ++m) {
    std::vector<Formula> s;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (m & (1u << i)) s.push_back(fs[i]);
    }
    if (!oracle::entails(s, phi)) good.push_back(m);
  }
  std::vector<std::uint32_t> maximal;
  for (auto m : good) {
    bool dominated = false;
    for (auto o : good) {
      if (o != m && (m & o) == m) dominated = true;
    }
    if (!dominated) maximal.push_back(m);
  }
  return maximal;
}

}  // namespace oracle
