#include <charconv>
#include <functional>
#include <set>

#include "veritas/justify.hpp"

namespace veritas::justify {

using logic::Formula;

namespace {

constexpr char kUnit = '\x1F';

bool valid_rule(std::string_view rule) {
  if (rule.empty()) return false;
  for (char c : rule) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

std::string node_preimage(const Formula& conclusion, const std::string& rule, const std::vector<NodeId>& premises,
                          const belief::Provenance& prov) {
  std::string out = logic::render_canonical(conclusion);
  out += kUnit;
  out += rule;
  out += kUnit;
  for (std::size_t i = 0; i < premises.size(); ++i) {
    if (i) out += ',';
    out += to_hex(premises[i]);
  }
  out += kUnit;
  out += prov.source;
  out += kUnit;
  out += std::to_string(prov.timestamp_ms);
  out += kUnit;
  out += belief::format_probability(prov.confidence);
  return out;
}

NodeId compute_node_id(const Formula& conclusion, const std::string& rule, const std::vector<NodeId>& premises,
                       const belief::Provenance& prov) {
  return sha256(node_preimage(conclusion, rule, premises, prov));
}

NodeId JustificationStore::record_inference(const Formula& conclusion, const std::vector<NodeId>& premises,
                                            const std::string& rule, const belief::Provenance& prov,
                                            const logic::SolverLimits& limits) {
  if (!valid_rule(rule)) throw std::invalid_argument("invalid rule label '" + rule + "'");
  if (!logic::is_identifier(prov.source)) throw std::invalid_argument("invalid source '" + prov.source + "'");
  belief::validate(prov);

  std::vector<Formula> premise_formulas;
  for (const auto& p : premises) {
    const JustificationNode* n = get(p);
    if (!n) throw JustifyError(JustifyError::Kind::unknown_premise, "unknown premise " + to_hex(p));
    premise_formulas.push_back(n->conclusion);
  }

  NodeId id = compute_node_id(conclusion, rule, premises, prov);
  std::string key = logic::render_canonical(conclusion);
  if (contains(id)) {
    latest_.insert_or_assign(key, id);
    return id;
  }

  for (const auto& p : premises) {
    for (const auto& anc : trace(p)) {
      if (anc.conclusion == conclusion) {
        throw JustifyError(JustifyError::Kind::cycle, "circular justification: " + key + " depends on itself");
      }
    }
  }
  if (!premises.empty() && !logic::entails(premise_formulas, conclusion, limits)) {
    throw JustifyError(JustifyError::Kind::unsound_step,
                       "premises do not entail " + key + " under rule " + rule);
  }

  index_.emplace(id, nodes_.size());
  nodes_.push_back({id, conclusion, rule, premises, prov});
  latest_.insert_or_assign(key, id);
  return id;
}

const JustificationNode* JustificationStore::get(const NodeId& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

std::optional<NodeId> JustificationStore::latest(const Formula& f) const {
  auto it = latest_.find(logic::render_canonical(f));
  if (it == latest_.end()) return std::nullopt;
  return it->second;
}

std::vector<JustificationNode> JustificationStore::trace(const NodeId& id) const {
  if (!get(id)) throw JustifyError(JustifyError::Kind::no_justification, "no node " + to_hex(id));
  std::vector<JustificationNode> out;
  std::set<NodeId> seen;
  std::function<void(const NodeId&)> visit = [&](const NodeId& n) {
    if (!seen.insert(n).second) return;
    const JustificationNode* node = get(n);
    for (const auto& p : node->premises) visit(p);
    out.push_back(*node);
  };
  visit(id);
  return out;
}

std::vector<JustificationNode> JustificationStore::trace(const Formula& f) const {
  auto id = latest(f);
  if (!id) {
    throw JustifyError(JustifyError::Kind::no_justification, "no justification for " + logic::render_canonical(f));
  }
  return trace(*id);
}

std::size_t JustificationStore::depth(const NodeId& id) const {
  std::map<NodeId, std::size_t> memo;
  std::function<std::size_t(const NodeId&)> go = [&](const NodeId& n) -> std::size_t {
    if (auto it = memo.find(n); it != memo.end()) return it->second;
    const JustificationNode* node = get(n);
    if (!node) throw JustifyError(JustifyError::Kind::no_justification, "no node " + to_hex(n));
    std::size_t d = 0;
    for (const auto& p : node->premises) d = std::max(d, go(p) + 1);
    memo[n] = d;
    return d;
  };
  return go(id);
}

std::string JustificationStore::serialize() const {
  std::string out;
  for (const auto& n : nodes_) {
    out += node_preimage(n.conclusion, n.rule, n.premises, n.provenance);
    out += '\n';
  }
  return out;
}

JustificationStore JustificationStore::load(std::string_view text) {
  JustificationStore store;
  std::size_t lineno = 0;
  for (auto line : split(text, '\n')) {
    ++lineno;
    if (line.empty()) continue;
    auto bad = [&](const std::string& why) {
      return JustifyError(JustifyError::Kind::malformed, "node store line " + std::to_string(lineno) + ": " + why);
    };
    auto fields = split(line, kUnit);
    if (fields.size() != 6) throw bad("expected 6 fields");
    std::vector<NodeId> premises;
    if (!fields[2].empty()) {
      for (auto hex : split(fields[2], ',')) {
        auto d = digest_from_hex(hex);
        if (!d) throw bad("bad premise id");
        premises.push_back(*d);
      }
    }
    belief::Provenance prov;
    prov.source = std::string(fields[3]);
    auto ts = std::from_chars(fields[4].data(), fields[4].data() + fields[4].size(), prov.timestamp_ms);
    auto cf = std::from_chars(fields[5].data(), fields[5].data() + fields[5].size(), prov.confidence);
    if (ts.ec != std::errc{} || ts.ptr != fields[4].data() + fields[4].size()) throw bad("bad timestamp");
    if (cf.ec != std::errc{} || cf.ptr != fields[5].data() + fields[5].size()) throw bad("bad confidence");
    try {
      store.record_inference(logic::parse(fields[0]), premises, std::string(fields[1]), prov);
    } catch (const JustifyError&) {
      throw;
    } catch (const std::exception& e) {
      throw bad(e.what());
    }
  }
  return store;
}

double SourceReliability::score(const std::string& source) const {
  auto it = scores.find(source);
  return it == scores.end() ? default_score : it->second;
}

Dominance dominance(const belief::Provenance& a, const belief::Provenance& b, const SourceReliability& rel) {
  auto cmp = [](auto x, auto y) { return x > y ? Dominance::first : Dominance::second; };
  if (a.confidence != b.confidence) return cmp(a.confidence, b.confidence);
  if (a.timestamp_ms != b.timestamp_ms) return cmp(a.timestamp_ms, b.timestamp_ms);
  double ra = rel.score(a.source);
  double rb = rel.score(b.source);
  if (ra != rb) return cmp(ra, rb);
  return Dominance::incomparable;
}

}  // namespace veritas::justify
