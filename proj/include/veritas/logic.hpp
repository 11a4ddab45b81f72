#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace veritas::logic {

// Ground atom P(c1,...,cn). Constants only; no variables.
struct Atom {
  std::string predicate;
  std::vector<std::string> args;

  bool operator==(const Atom&) const = default;
  auto operator<=>(const Atom&) const = default;
};

bool is_identifier(std::string_view s);

enum class Connective { atom, negation, conjunction, disjunction, implication, equivalence };

// Immutable propositional formula. Copies share structure.
class Formula {
 public:
  static Formula make_atom(Atom a);
  static Formula make_atom(std::string predicate, std::vector<std::string> args = {});
  static Formula negation(Formula operand);
  static Formula binary(Connective op, Formula left, Formula right);

  Connective kind() const;
  const Atom& atom() const;
  const Formula& operand() const;
  const Formula& left() const;
  const Formula& right() const;

  bool is_atom() const { return kind() == Connective::atom; }

  friend bool operator==(const Formula& a, const Formula& b);

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Formula neg(Formula f);
Formula conj(Formula l, Formula r);
Formula disj(Formula l, Formula r);
Formula impl(Formula l, Formula r);
Formula iff(Formula l, Formula r);
Formula atom(std::string predicate, std::vector<std::string> args = {});

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& found);

  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

/// Parses the textual formula language:
///
///   formula := iff
///   iff     := impl ( "<->" impl )*          left associative
///   impl    := or ( "->" impl )?             right associative
///   or      := and ( "|" and )*
///   and     := unary ( "&" unary )*
///   unary   := "!" unary | "(" formula ")" | atom
///   atom    := IDENT [ "(" IDENT ( "," IDENT )* ")" ]
///
/// Whitespace between tokens is ignored. Throws ParseError carrying the byte
/// offset of the offending token and the set of tokens that would have been
/// accepted there.
Formula parse(std::string_view text);

std::string render_canonical(const Atom& a);

/// Fully parenthesised rendering: "(p & q)", "(! Locked(Room101))".
/// This is the only byte form ever hashed.
std::string render_canonical(const Formula& f);

std::set<Atom> atoms_of(const Formula& f);
std::set<Atom> atoms_of(std::span<const Formula> fs);

using Valuation = std::map<Atom, bool>;

// Throws std::out_of_range if an atom of f is missing from v.
bool evaluate(const Formula& f, const Valuation& v);

class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverLimits {
  std::size_t max_atoms = 64;
  // CNF distribution stops past this many clauses; the solver then falls
  // back to truth-table enumeration when the atom count allows it.
  std::size_t max_clauses = 50000;
  std::size_t truth_table_atoms = 20;
};

std::optional<Valuation> find_model(std::span<const Formula> base, const SolverLimits& limits = {});
bool is_consistent(std::span<const Formula> base, const SolverLimits& limits = {});
bool entails(std::span<const Formula> base, const Formula& phi, const SolverLimits& limits = {});
bool is_tautology(const Formula& phi, const SolverLimits& limits = {});
bool is_satisfiable(const Formula& phi, const SolverLimits& limits = {});
bool equivalent(const Formula& a, const Formula& b, const SolverLimits& limits = {});

// Syntactic fast path: some f and (! f) both occur in base.
bool has_complementary_pair(std::span<const Formula> base);

}  // namespace veritas::logic
