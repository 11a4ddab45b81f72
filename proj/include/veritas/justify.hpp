#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "veritas/belief.hpp"
#include "veritas/crypto.hpp"
#include "veritas/logic.hpp"

namespace veritas::justify {

using NodeId = Digest;

// Rule labels with a fixed meaning for replay and recovery.
namespace rules {
inline const std::string observation = "observation";
inline const std::string axiom = "axiom";
inline const std::string approximate = "approximate";
inline const std::string deduction = "deduction";
inline const std::string rederive = "rederive";
inline const std::string provisional = "provisional";
inline const std::string misaligned = "misaligned";
inline const std::string suspect = "suspect";
inline const std::string policy_override = "policy-override";
inline const std::string escalation = "escalation";
}  // namespace rules

struct JustificationNode {
  NodeId id;
  logic::Formula conclusion;
  std::string rule;
  std::vector<NodeId> premises;
  belief::Provenance provenance;
};

// Bytes hashed to form a node id, fields separated by 0x1F.
std::string node_preimage(const logic::Formula& conclusion, const std::string& rule,
                          const std::vector<NodeId>& premises, const belief::Provenance& prov);
NodeId compute_node_id(const logic::Formula& conclusion, const std::string& rule,
                       const std::vector<NodeId>& premises, const belief::Provenance& prov);

class JustifyError : public std::runtime_error {
 public:
  enum class Kind { unknown_premise, cycle, unsound_step, no_justification, malformed };

  JustifyError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Append-only, content-addressed justification DAG.
class JustificationStore {
 public:
  /// Records one inference step and returns its id. Re-recording identical
  /// content returns the existing id. A node with premises must have its
  /// conclusion entailed by theirs. Deriving a formula from an ancestor that
  /// already concluded it is rejected as circular.
  NodeId record_inference(const logic::Formula& conclusion, const std::vector<NodeId>& premises,
                          const std::string& rule, const belief::Provenance& prov,
                          const logic::SolverLimits& limits = {});

  const JustificationNode* get(const NodeId& id) const;
  bool contains(const NodeId& id) const { return index_.count(id) != 0; }

  // Most recently recorded node concluding f.
  std::optional<NodeId> latest(const logic::Formula& f) const;

  // Ancestors of the node, leaves first, the node itself last.
  std::vector<JustificationNode> trace(const NodeId& id) const;
  // Trace of latest(f); throws JustifyError(no_justification) if there is none.
  std::vector<JustificationNode> trace(const logic::Formula& f) const;

  // Longest premise path from the node down to a leaf.
  std::size_t depth(const NodeId& id) const;

  const std::vector<JustificationNode>& nodes() const { return nodes_; }

  // One line per node in insertion order; ids are recomputed by load().
  std::string serialize() const;
  static JustificationStore load(std::string_view text);

 private:
  std::vector<JustificationNode> nodes_;
  std::map<NodeId, std::size_t> index_;
  std::map<std::string, NodeId> latest_;
};

// SHA-256 over canonical conclusions joined by 0x1E, in chain order.
Digest hash_chain(const std::vector<JustificationNode>& chain);

struct PublicProof {
  logic::Formula conclusion;
  std::vector<JustificationNode> chain;
  Digest digest;
};

PublicProof build_public_proof(const JustificationStore& store, const logic::Formula& phi);

enum class ProofStatus { accept, digest_mismatch, bad_step, not_anchored, malformed };

std::string_view proof_status_name(ProofStatus s);

struct ProofVerdict {
  ProofStatus status;
  std::optional<std::size_t> step;
  std::string detail;

  bool accepted() const { return status == ProofStatus::accept; }
};

using AnchorLookup = std::function<bool(const Digest&)>;

/// Checks, in order: the chain digest, then every step (node id, premise
/// ordering, local entailment, final conclusion), then ledger anchoring.
ProofVerdict verify_public_proof(const PublicProof& proof, const AnchorLookup& anchored,
                                 const logic::SolverLimits& limits = {});

std::string serialize_proof(const PublicProof& proof);
// Throws JustifyError(malformed).
PublicProof parse_proof(std::string_view text);

enum class Dominance { first, second, incomparable };

// Per-source reliability; unknown sources score default_score.
struct SourceReliability {
  std::map<std::string, double> scores;
  double default_score = 0.5;

  double score(const std::string& source) const;
};

// Lexicographic over (confidence, timestamp, reliability), higher wins.
Dominance dominance(const belief::Provenance& a, const belief::Provenance& b, const SourceReliability& rel = {});

}  // namespace veritas::justify
