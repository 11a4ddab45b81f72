#include <doctest.h>

#include <map>
#include <random>

#include "../support/oracle.hpp"
#include "veritas/logic.hpp"

using namespace veritas::logic;

TEST_CASE("parse builds the expected trees") {
  CHECK(parse("p & (p -> q)") == conj(atom("p"), impl(atom("p"), atom("q"))));
  CHECK(parse("At(Agent1, LocationA)") == atom("At", {"Agent1", "LocationA"}));
  CHECK(parse("  !  ! p") == neg(neg(atom("p"))));
  CHECK(parse("p -> q -> r") == impl(atom("p"), impl(atom("q"), atom("r"))));
  CHECK(parse("p <-> q <-> r") == iff(iff(atom("p"), atom("q")), atom("r")));
  CHECK(parse("p | q & r") == disj(atom("p"), conj(atom("q"), atom("r"))));
  CHECK(parse("p & q -> r | s") == impl(conj(atom("p"), atom("q")), disj(atom("r"), atom("s"))));
}

TEST_CASE("parse errors carry offset and expectations") {
  try {
    parse("p ->");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
    CHECK(!e.expected().empty());
  }
  for (const char* bad : {"", "p q", "(p", "P(a,)", "p & & q", "P(", "1p", "p $ q", "p)"}) {
    CHECK_THROWS_AS(parse(bad), ParseError);
  }
  try {
    parse("p & $");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("canonical rendering") {
  CHECK(render_canonical(conj(atom("p"), atom("q"))) == "(p & q)");
  CHECK(render_canonical(neg(atom("Locked", {"Room101"}))) == "(! Locked(Room101))");
  CHECK(render_canonical(parse("At(a , b) <-> p | q")) == "(At(a,b) <-> (p | q))");
}

TEST_CASE("render/parse round trip and injectivity over random trees") {
  std::mt19937 rng(20240611);
  std::vector<Formula> leaves = {atom("p"), atom("q"), atom("R", {"a"}), atom("S", {"a", "b"})};
  std::map<std::string, Formula> seen;
  for (int i = 0; i < 1000; ++i) {
    Formula f = oracle::random_formula(rng, leaves, 6);
    std::string text = render_canonical(f);
    CHECK(parse(text) == f);
    auto [it, fresh] = seen.emplace(text, f);
    if (!fresh) CHECK(it->second == f);
  }
}

TEST_CASE("atoms_of") {
  CHECK(atoms_of(impl(atom("p"), atom("q"))) == std::set<Atom>{{"p", {}}, {"q", {}}});
  CHECK(atoms_of(atom("p")) == std::set<Atom>{{"p", {}}});
  CHECK(atoms_of(neg(conj(atom("p"), atom("p")))) == std::set<Atom>{{"p", {}}});
}

TEST_CASE("consistency and entailment examples") {
  std::vector<Formula> empty;
  CHECK(is_consistent(empty));
  std::vector<Formula> contra = {atom("p"), neg(atom("p"))};
  CHECK_FALSE(is_consistent(contra));
  std::vector<Formula> three = {atom("p"), impl(atom("p"), atom("q")), neg(atom("q"))};
  CHECK_FALSE(is_consistent(three));
  CHECK_FALSE(has_complementary_pair(three));
  CHECK(has_complementary_pair(contra));
  std::vector<Formula> mp = {atom("p"), impl(atom("p"), atom("q"))};
  CHECK(entails(mp, atom("q")));
  CHECK(entails(empty, parse("p | !p")));
  CHECK(is_tautology(parse("(p -> q) | (q -> p)")));
  CHECK_FALSE(is_satisfiable(parse("p & !p")));
  CHECK(equivalent(parse("p -> q"), parse("!q -> !p")));
}

TEST_CASE("every subset of a four-formula pool agrees with the truth table") {
  std::vector<Formula> pool = {parse("p -> q"), parse("!q | r"), parse("p & !r"), parse("q <-> !p")};
  for (std::uint32_t m = 0; m < 16; ++m) {
    std::vector<Formula> s;
    for (int i = 0; i < 4; ++i) {
      if (m & (1u << i)) s.push_back(pool[i]);
    }
    CHECK(is_consistent(s) == oracle::consistent(s));
  }
}

TEST_CASE("random entailment queries over five atoms agree with the truth table") {
  std::mt19937 rng(77);
  std::vector<Formula> leaves = {atom("a"), atom("b"), atom("c"), atom("d"), atom("e")};
  for (int i = 0; i < 300; ++i) {
    std::vector<Formula> base;
    int n = std::uniform_int_distribution<int>(0, 4)(rng);
    for (int k = 0; k < n; ++k) base.push_back(oracle::random_formula(rng, leaves, 3));
    Formula phi = oracle::random_formula(rng, leaves, 3);
    bool expected = oracle::entails(base, phi);
    CHECK(entails(base, phi) == expected);
    std::vector<Formula> with_neg = base;
    with_neg.push_back(neg(phi));
    CHECK(entails(base, phi) == !is_consistent(with_neg));
    // Monotonicity in the base.
    std::vector<Formula> bigger = base;
    bigger.push_back(oracle::random_formula(rng, leaves, 2));
    if (expected) CHECK(entails(bigger, phi));
  }
}

TEST_CASE("truth-table fallback when the clause guard trips") {
  SolverLimits tight;
  tight.max_clauses = 4;
  std::mt19937 rng(5);
  std::vector<Formula> leaves = {atom("a"), atom("b"), atom("c"), atom("d")};
  for (int i = 0; i < 100; ++i) {
    std::vector<Formula> base = {oracle::random_formula(rng, leaves, 5), oracle::random_formula(rng, leaves, 5)};
    CHECK(is_consistent(base, tight) == oracle::consistent(base));
  }
}

TEST_CASE("atom limit raises a resource error") {
  std::vector<Formula> many;
  for (int i = 0; i < 65; ++i) many.push_back(atom("P", {"c" + std::to_string(i)}));
  CHECK_THROWS_AS(is_consistent(many), ResourceError);
  SolverLimits roomy;
  roomy.max_atoms = 100;
  CHECK(is_consistent(many, roomy));
}

TEST_CASE("identifiers are validated") {
  CHECK_THROWS_AS(atom("1bad"), std::invalid_argument);
  CHECK_THROWS_AS(atom("P", {"a b"}), std::invalid_argument);
  CHECK(is_identifier("Room_101"));
  CHECK_FALSE(is_identifier("_x"));
}
