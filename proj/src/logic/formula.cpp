#include "veritas/logic.hpp"

#include <cassert>

namespace veritas::logic {

struct Formula::Node {
  Connective kind;
  Atom atom;
  std::optional<Formula> lhs;
  std::optional<Formula> rhs;
};

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(s.front())) return false;
  for (char c : s) {
    if (!alpha(c) && !digit(c) && c != '_') return false;
  }
  return true;
}

Formula Formula::make_atom(Atom a) {
  if (!is_identifier(a.predicate)) {
    throw std::invalid_argument("invalid predicate name '" + a.predicate + "'");
  }
  for (const auto& arg : a.args) {
    if (!is_identifier(arg)) throw std::invalid_argument("invalid constant '" + arg + "'");
  }
  return Formula(std::make_shared<const Node>(Node{Connective::atom, std::move(a), std::nullopt, std::nullopt}));
}

Formula Formula::make_atom(std::string predicate, std::vector<std::string> args) {
  return make_atom(Atom{std::move(predicate), std::move(args)});
}

Formula Formula::negation(Formula operand) {
  return Formula(std::make_shared<const Node>(Node{Connective::negation, {}, std::move(operand), std::nullopt}));
}

Formula Formula::binary(Connective op, Formula left, Formula right) {
  if (op == Connective::atom || op == Connective::negation) {
    throw std::invalid_argument("binary(): connective is not binary");
  }
  return Formula(std::make_shared<const Node>(Node{op, {}, std::move(left), std::move(right)}));
}

Connective Formula::kind() const { return node_->kind; }

const Atom& Formula::atom() const {
  assert(kind() == Connective::atom);
  return node_->atom;
}

const Formula& Formula::operand() const {
  assert(kind() == Connective::negation);
  return *node_->lhs;
}

const Formula& Formula::left() const {
  assert(node_->rhs.has_value());
  return *node_->lhs;
}

const Formula& Formula::right() const {
  assert(node_->rhs.has_value());
  return *node_->rhs;
}

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Connective::atom:
      return a.atom() == b.atom();
    case Connective::negation:
      return a.operand() == b.operand();
    default:
      return a.left() == b.left() && a.right() == b.right();
  }
}

Formula neg(Formula f) { return Formula::negation(std::move(f)); }
Formula conj(Formula l, Formula r) { return Formula::binary(Connective::conjunction, std::move(l), std::move(r)); }
Formula disj(Formula l, Formula r) { return Formula::binary(Connective::disjunction, std::move(l), std::move(r)); }
Formula impl(Formula l, Formula r) { return Formula::binary(Connective::implication, std::move(l), std::move(r)); }
Formula iff(Formula l, Formula r) { return Formula::binary(Connective::equivalence, std::move(l), std::move(r)); }
Formula atom(std::string predicate, std::vector<std::string> args) {
  return Formula::make_atom(std::move(predicate), std::move(args));
}

std::string render_canonical(const Atom& a) {
  std::string out = a.predicate;
  if (!a.args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      if (i) out += ',';
      out += a.args[i];
    }
    out += ')';
  }
  return out;
}

namespace {

const char* symbol(Connective c) {
  switch (c) {
    case Connective::conjunction: return "&";
    case Connective::disjunction: return "|";
    case Connective::implication: return "->";
    case Connective::equivalence: return "<->";
    default: return "";
  }
}

void render_into(const Formula& f, std::string& out) {
  switch (f.kind()) {
    case Connective::atom:
      out += render_canonical(f.atom());
      return;
    case Connective::negation:
      out += "(! ";
      render_into(f.operand(), out);
      out += ')';
      return;
    default:
      out += '(';
      render_into(f.left(), out);
      out += ' ';
      out += symbol(f.kind());
      out += ' ';
      render_into(f.right(), out);
      out += ')';
      return;
  }
}

void collect_atoms(const Formula& f, std::set<Atom>& out) {
  switch (f.kind()) {
    case Connective::atom:
      out.insert(f.atom());
      return;
    case Connective::negation:
      collect_atoms(f.operand(), out);
      return;
    default:
      collect_atoms(f.left(), out);
      collect_atoms(f.right(), out);
  }
}

}  // namespace

std::string render_canonical(const Formula& f) {
  std::string out;
  render_into(f, out);
  return out;
}

std::set<Atom> atoms_of(const Formula& f) {
  std::set<Atom> out;
  collect_atoms(f, out);
  return out;
}

std::set<Atom> atoms_of(std::span<const Formula> fs) {
  std::set<Atom> out;
  for (const auto& f : fs) collect_atoms(f, out);
  return out;
}

bool evaluate(const Formula& f, const Valuation& v) {
  switch (f.kind()) {
    case Connective::atom: {
      auto it = v.find(f.atom());
      if (it == v.end()) throw std::out_of_range("valuation missing atom " + render_canonical(f.atom()));
      return it->second;
    }
    case Connective::negation:
      return !evaluate(f.operand(), v);
    case Connective::conjunction:
      return evaluate(f.left(), v) && evaluate(f.right(), v);
    case Connective::disjunction:
      return evaluate(f.left(), v) || evaluate(f.right(), v);
    case Connective::implication:
      return !evaluate(f.left(), v) || evaluate(f.right(), v);
    case Connective::equivalence:
      return evaluate(f.left(), v) == evaluate(f.right(), v);
  }
  return false;
}

}  // namespace veritas::logic
