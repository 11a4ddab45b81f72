#include <charconv>
#include <set>

#include "veritas/justify.hpp"

namespace veritas::justify {

using logic::Formula;

Digest hash_chain(const std::vector<JustificationNode>& chain) {
  std::string bytes;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (i) bytes += '\x1E';
    bytes += logic::render_canonical(chain[i].conclusion);
  }
  return sha256(bytes);
}

PublicProof build_public_proof(const JustificationStore& store, const Formula& phi) {
  auto chain = store.trace(phi);
  Digest d = hash_chain(chain);
  return {phi, std::move(chain), d};
}

std::string_view proof_status_name(ProofStatus s) {
  switch (s) {
    case ProofStatus::accept: return "accept";
    case ProofStatus::digest_mismatch: return "digest-mismatch";
    case ProofStatus::bad_step: return "bad-step";
    case ProofStatus::not_anchored: return "not-anchored";
    case ProofStatus::malformed: return "malformed";
  }
  return "?";
}

ProofVerdict verify_public_proof(const PublicProof& proof, const AnchorLookup& anchored,
                                 const logic::SolverLimits& limits) {
  if (proof.chain.empty()) return {ProofStatus::malformed, std::nullopt, "empty chain"};
  if (hash_chain(proof.chain) != proof.digest) {
    return {ProofStatus::digest_mismatch, std::nullopt, "chain digest does not match " + to_hex(proof.digest)};
  }

  std::map<NodeId, Formula> earlier;
  for (std::size_t i = 0; i < proof.chain.size(); ++i) {
    const auto& n = proof.chain[i];
    if (compute_node_id(n.conclusion, n.rule, n.premises, n.provenance) != n.id) {
      return {ProofStatus::bad_step, i, "node id does not match its content"};
    }
    std::vector<Formula> premises;
    for (const auto& p : n.premises) {
      auto it = earlier.find(p);
      if (it == earlier.end()) return {ProofStatus::bad_step, i, "premise " + to_hex(p) + " not earlier in chain"};
      premises.push_back(it->second);
    }
    if (!premises.empty() && !logic::entails(premises, n.conclusion, limits)) {
      return {ProofStatus::bad_step, i,
              logic::render_canonical(n.conclusion) + " is not entailed by its premises (" + n.rule + ")"};
    }
    earlier.emplace(n.id, n.conclusion);
  }
  if (!(proof.chain.back().conclusion == proof.conclusion)) {
    return {ProofStatus::bad_step, proof.chain.size() - 1, "chain does not end at the proved conclusion"};
  }
  if (!anchored || !anchored(proof.digest)) {
    return {ProofStatus::not_anchored, std::nullopt, "digest " + to_hex(proof.digest) + " not found in ledger"};
  }
  return {ProofStatus::accept, std::nullopt, ""};
}

std::string serialize_proof(const PublicProof& proof) {
  std::string out = "proof\nconclusion\t" + logic::render_canonical(proof.conclusion) + "\ndigest\t" +
                    to_hex(proof.digest) + "\n";
  for (const auto& n : proof.chain) {
    out += "node\t" + to_hex(n.id) + '\t' + logic::render_canonical(n.conclusion) + '\t' + n.rule + '\t';
    for (std::size_t i = 0; i < n.premises.size(); ++i) {
      if (i) out += ',';
      out += to_hex(n.premises[i]);
    }
    out += '\t' + n.provenance.source + '\t' + std::to_string(n.provenance.timestamp_ms) + '\t' +
           belief::format_probability(n.provenance.confidence) + '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> fields_of(std::string_view s, char sep) {
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

Digest need_digest(std::string_view hex) {
  auto d = digest_from_hex(hex);
  if (!d) throw JustifyError(JustifyError::Kind::malformed, "bad digest '" + std::string(hex) + "'");
  return *d;
}

template <typename T>
T need_number(std::string_view s) {
  T v{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw JustifyError(JustifyError::Kind::malformed, "bad number '" + std::string(s) + "'");
  }
  return v;
}

Formula need_formula(std::string_view s) {
  try {
    return logic::parse(s);
  } catch (const std::exception& e) {
    throw JustifyError(JustifyError::Kind::malformed, e.what());
  }
}

}  // namespace

PublicProof parse_proof(std::string_view text) {
  auto lines = fields_of(text, '\n');
  if (lines.size() < 5 || lines[0] != "proof" || !lines.back().empty()) {
    throw JustifyError(JustifyError::Kind::malformed, "not a proof file");
  }
  auto head = fields_of(lines[1], '\t');
  auto dig = fields_of(lines[2], '\t');
  if (head.size() != 2 || head[0] != "conclusion" || dig.size() != 2 || dig[0] != "digest") {
    throw JustifyError(JustifyError::Kind::malformed, "bad proof header");
  }
  PublicProof proof{need_formula(head[1]), {}, need_digest(dig[1])};
  for (std::size_t i = 3; i + 1 < lines.size(); ++i) {
    auto f = fields_of(lines[i], '\t');
    if (f.size() != 8 || f[0] != "node") throw JustifyError(JustifyError::Kind::malformed, "bad node line");
    JustificationNode n{need_digest(f[1]), need_formula(f[2]), std::string(f[3]), {}, {}};
    if (!f[4].empty()) {
      for (auto hex : fields_of(f[4], ',')) n.premises.push_back(need_digest(hex));
    }
    n.provenance.source = std::string(f[5]);
    n.provenance.timestamp_ms = need_number<std::int64_t>(f[6]);
    n.provenance.confidence = need_number<double>(f[7]);
    proof.chain.push_back(std::move(n));
  }
  if (serialize_proof(proof) != text) {
    throw JustifyError(JustifyError::Kind::malformed, "proof file is not in canonical form");
  }
  return proof;
}

}  // namespace veritas::justify
