#include <algorithm>
#include <fstream>
#include <sstream>

#include "veritas/plan.hpp"

namespace veritas::plan {

DomainError::DomainError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

// ---- ontology ---------------------------------------------------------------

void Ontology::add_concept(const std::string& name) {
  if (!logic::is_identifier(name)) throw OntologyError("concept name must be an identifier: " + name);
  concepts_.insert(name);
}

bool Ontology::add_subsumption(const std::string& child, const std::string& parent) {
  if (!has_concept(child)) throw OntologyError("unknown concept " + child);
  if (!has_concept(parent)) throw OntologyError("unknown concept " + parent);
  if (edges_.contains({child, parent})) return false;
  if (subsumes(parent, child)) throw OntologyError("cycle: " + parent + " is already below " + child);
  edges_.insert({child, parent});
  return true;
}

void Ontology::set_type(const std::string& name, const std::string& concept_name) {
  if (!logic::is_identifier(name)) throw OntologyError("typed name must be an identifier: " + name);
  if (!has_concept(concept_name)) throw OntologyError("unknown concept " + concept_name);
  typing_[name] = concept_name;
}

bool Ontology::subsumes(const std::string& child, const std::string& parent) const {
  if (!has_concept(child) || !has_concept(parent)) return false;
  std::vector<std::string> stack{child};
  std::set<std::string> seen;
  while (!stack.empty()) {
    std::string c = stack.back();
    stack.pop_back();
    if (c == parent) return true;
    if (!seen.insert(c).second) continue;
    for (auto it = edges_.lower_bound({c, ""}); it != edges_.end() && it->first == c; ++it) {
      stack.push_back(it->second);
    }
  }
  return false;
}

std::optional<std::string> Ontology::type_of(const std::string& name) const {
  auto it = typing_.find(name);
  if (it == typing_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Ontology::members(const std::string& concept_name) const {
  std::vector<std::string> out;
  for (const auto& [name, c] : typing_) {
    if (subsumes(c, concept_name)) out.push_back(name);
  }
  return out;
}

// ---- display ----------------------------------------------------------------

std::string display(const Atom& a) {
  std::string out = a.predicate;
  if (a.args.empty()) return out;
  out += '(';
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ", ";
    out += a.args[i];
  }
  return out + ')';
}

std::string display(const Literal& l) { return (l.positive ? "" : "¬") + display(l.atom); }

std::string display(const GroundAction& a) { return display(Atom{a.name, a.args}); }

// ---- parsing helpers --------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Splits on commas outside parentheses; an all-blank input gives no items.
std::vector<std::string> split_top(std::string_view s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  for (const auto& item : out) {
    if (item.empty()) throw std::invalid_argument("empty list item");
  }
  return out;
}

Literal literal_of(std::string_view text) {
  logic::Formula f = logic::parse(text);
  if (f.is_atom()) return {f.atom(), true};
  if (f.kind() == logic::Connective::negation && f.operand().is_atom()) return {f.operand().atom(), false};
  throw std::invalid_argument("not a literal: " + std::string(text));
}

Atom atom_of(std::string_view text) {
  Literal l = literal_of(text);
  if (!l.positive) throw std::invalid_argument("expected an atom: " + std::string(text));
  return l.atom;
}

std::vector<Atom> parse_atoms(std::string_view text) {
  std::vector<Atom> out;
  for (const auto& item : split_top(text)) out.push_back(atom_of(item));
  return out;
}

ActionSchema parse_action(std::string_view rest, const Ontology& ont) {
  auto open = rest.find('(');
  auto close = rest.find(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw std::invalid_argument("expected <name>(<params>)");
  }
  ActionSchema s;
  s.name = trim(rest.substr(0, open));
  if (!logic::is_identifier(s.name)) throw std::invalid_argument("bad action name '" + s.name + "'");
  std::set<std::string> names;
  for (const auto& p : split_top(rest.substr(open + 1, close - open - 1))) {
    auto colon = p.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("parameter needs a type: " + p);
    Param param{trim(std::string_view(p).substr(0, colon)), trim(std::string_view(p).substr(colon + 1))};
    if (!logic::is_identifier(param.name)) throw std::invalid_argument("bad parameter name " + param.name);
    if (!ont.has_concept(param.type)) throw std::invalid_argument("unknown concept " + param.type);
    if (!names.insert(param.name).second) throw std::invalid_argument("duplicate parameter " + param.name);
    s.params.push_back(param);
  }

  std::string_view body = rest.substr(close + 1);
  const char* keys[] = {"pre:", "add:", "del:"};
  std::size_t pos[3];
  for (int k = 0; k < 3; ++k) pos[k] = body.find(keys[k]);
  for (int k = 0; k < 3; ++k) {
    if (pos[k] == std::string_view::npos) continue;
    std::size_t end = body.size();
    for (int m = 0; m < 3; ++m) {
      if (pos[m] != std::string_view::npos && pos[m] > pos[k]) end = std::min(end, pos[m]);
    }
    std::string_view section = body.substr(pos[k] + 4, end - pos[k] - 4);
    if (k == 0) {
      for (const auto& item : split_top(section)) s.pre.push_back(literal_of(item));
    } else {
      (k == 1 ? s.add : s.del) = parse_atoms(section);
    }
  }
  std::size_t first = std::min({pos[0], pos[1], pos[2]});
  if (!trim(body.substr(0, first == std::string_view::npos ? body.size() : first)).empty()) {
    throw std::invalid_argument("unexpected text after parameters");
  }

  auto check = [&](const Atom& a) {
    for (const auto& arg : a.args) {
      if (!names.contains(arg) && !ont.type_of(arg)) {
        throw std::invalid_argument("'" + arg + "' in " + display(a) + " is neither a parameter nor an entity");
      }
    }
  };
  for (const auto& l : s.pre) check(l.atom);
  for (const auto& a : s.add) check(a);
  for (const auto& a : s.del) check(a);
  for (const auto& a : s.add) {
    if (std::find(s.del.begin(), s.del.end(), a) != s.del.end()) {
      throw std::invalid_argument(display(a) + " is both added and deleted");
    }
  }
  return s;
}

}  // namespace

std::vector<Literal> parse_literals(std::string_view text) {
  std::vector<Literal> out;
  for (const auto& item : split_top(text)) out.push_back(literal_of(item));
  return out;
}

Domain parse_domain(std::string_view text) {
  Domain d;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t n = 0;
  while (std::getline(in, raw)) {
    ++n;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    try {
      auto space = line.find_first_of(" \t:");
      std::string head = line.substr(0, space);
      std::string rest = space == std::string::npos ? "" : line.substr(space);
      if (head == "concept") {
        std::istringstream words(rest);
        std::string name, parent, extra;
        words >> name >> parent >> extra;
        if (name.empty() || !extra.empty()) throw std::invalid_argument("expected concept <name> [<parent>]");
        d.ontology.add_concept(name);
        if (!parent.empty()) d.ontology.add_subsumption(name, parent);
      } else if (head == "entity") {
        auto colon = rest.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("expected entity <name> : <concept>");
        d.ontology.set_type(trim(std::string_view(rest).substr(0, colon)),
                            trim(std::string_view(rest).substr(colon + 1)));
      } else if (head == "action") {
        ActionSchema s = parse_action(rest, d.ontology);
        if (find_schema(d.schemas, s.name)) throw std::invalid_argument("duplicate action " + s.name);
        d.schemas.push_back(std::move(s));
      } else if (head == "init" || head == "goal") {
        std::string_view r = rest;
        auto colon = r.find(':');
        if (colon == std::string_view::npos || !trim(r.substr(0, colon)).empty()) {
          throw std::invalid_argument("expected '" + head + ":'");
        }
        if (head == "init") {
          for (auto& a : parse_atoms(r.substr(colon + 1))) d.init.insert(std::move(a));
        } else {
          for (auto& l : parse_literals(r.substr(colon + 1))) d.goal.push_back(std::move(l));
        }
      } else {
        throw std::invalid_argument("unknown directive '" + head + "'");
      }
    } catch (const DomainError&) {
      throw;
    } catch (const std::exception& e) {
      throw DomainError(n, e.what());
    }
  }
  return d;
}

Domain load_domain(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DomainError(0, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_domain(ss.str());
}

logic::Formula goal_formula(const std::vector<Literal>& goal) {
  if (goal.empty()) throw std::invalid_argument("empty goal");
  auto lit = [](const Literal& l) {
    logic::Formula a = logic::Formula::make_atom(l.atom);
    return l.positive ? a : logic::neg(a);
  };
  logic::Formula f = lit(goal[0]);
  for (std::size_t i = 1; i < goal.size(); ++i) f = logic::conj(f, lit(goal[i]));
  return f;
}

// ---- grounding and typing -----------------------------------------------

const ActionSchema* find_schema(const std::vector<ActionSchema>& schemas, const std::string& name) {
  for (const auto& s : schemas) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

GroundAction ground(const ActionSchema& s, const std::vector<std::string>& args) {
  if (args.size() != s.params.size()) {
    throw std::invalid_argument(s.name + " takes " + std::to_string(s.params.size()) + " arguments");
  }
  auto subst = [&](Atom a) {
    for (auto& x : a.args) {
      for (std::size_t i = 0; i < s.params.size(); ++i) {
        if (x == s.params[i].name) {
          x = args[i];
          break;
        }
      }
    }
    return a;
  };
  GroundAction g{s.name, args, {}, {}, {}};
  for (const auto& l : s.pre) g.pre.push_back({subst(l.atom), l.positive});
  for (const auto& a : s.add) g.add.push_back(subst(a));
  for (const auto& a : s.del) g.del.push_back(subst(a));
  return g;
}

std::optional<TypeViolation> type_check(const GroundAction& a, const ActionSchema& s, const Ontology& ont) {
  if (a.name != s.name || a.args.size() != s.params.size()) {
    return TypeViolation{display(a) + " does not instantiate " + s.name};
  }
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    auto t = ont.type_of(a.args[i]);
    if (!t) return TypeViolation{"untyped entity " + a.args[i]};
    if (!ont.subsumes(*t, s.params[i].type)) {
      return TypeViolation{a.args[i] + " : " + *t + " is not a " + s.params[i].type};
    }
  }
  return std::nullopt;
}

std::vector<GroundAction> groundings(const ActionSchema& s, const Ontology& ont) {
  std::vector<std::vector<std::string>> domains;
  for (const auto& p : s.params) domains.push_back(ont.members(p.type));
  std::vector<GroundAction> out;
  std::vector<std::string> args(s.params.size());
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == domains.size()) {
      out.push_back(ground(s, args));
      return;
    }
    for (const auto& c : domains[i]) {
      args[i] = c;
      self(self, i + 1);
    }
  };
  rec(rec, 0);
  return out;
}

// ---- state --------------------------------------------------------------------

bool holds(const Literal& l, const WorldState& s) { return s.contains(l.atom) == l.positive; }

bool preconditions_met(const GroundAction& a, const WorldState& s) {
  return std::all_of(a.pre.begin(), a.pre.end(), [&](const Literal& l) { return holds(l, s); });
}

std::vector<Literal> missing_preconditions(const GroundAction& a, const WorldState& s) {
  std::vector<Literal> out;
  for (const auto& l : a.pre) {
    if (!holds(l, s)) out.push_back(l);
  }
  return out;
}

WorldState apply_effects(const GroundAction& a, const WorldState& s) {
  if (!preconditions_met(a, s)) throw PreconditionError("preconditions of " + display(a) + " do not hold");
  WorldState out = s;
  for (const auto& d : a.del) out.erase(d);
  for (const auto& x : a.add) out.insert(x);
  return out;
}

}  // namespace veritas::plan
