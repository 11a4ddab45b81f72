#include <cstring>

#include "veritas/ledger.hpp"

namespace veritas::ledger {

namespace {

Digest hash_pair(const Digest& l, const Digest& r) {
  std::array<std::uint8_t, 64> buf;
  std::memcpy(buf.data(), l.data(), 32);
  std::memcpy(buf.data() + 32, r.data(), 32);
  return sha256(std::span<const std::uint8_t>(buf));
}

std::vector<Digest> next_level(const std::vector<Digest>& level) {
  std::vector<Digest> up;
  for (std::size_t i = 0; i < level.size(); i += 2) {
    const Digest& r = i + 1 < level.size() ? level[i + 1] : level[i];
    up.push_back(hash_pair(level[i], r));
  }
  return up;
}

}  // namespace

Digest merkle_root(std::span<const Digest> leaves) {
  if (leaves.empty()) throw std::invalid_argument("merkle root of an empty ledger");
  std::vector<Digest> level(leaves.begin(), leaves.end());
  while (level.size() > 1) level = next_level(level);
  return level[0];
}

MerkleProof inclusion_proof(std::span<const Digest> leaves, std::size_t index) {
  if (index >= leaves.size()) {
    throw std::out_of_range("leaf " + std::to_string(index) + " out of range for " + std::to_string(leaves.size()));
  }
  MerkleProof proof{leaves[index], {}, {}};
  std::vector<Digest> level(leaves.begin(), leaves.end());
  std::size_t i = index;
  while (level.size() > 1) {
    std::size_t sib = i ^ 1;
    if (sib >= level.size()) sib = i;
    proof.path.push_back({level[sib], (i & 1) != 0});
    level = next_level(level);
    i /= 2;
  }
  proof.root = level[0];
  return proof;
}

bool verify_inclusion(const MerkleProof& proof, const Digest& root) {
  Digest acc = proof.leaf;
  for (const auto& step : proof.path) {
    acc = step.sibling_is_left ? hash_pair(step.sibling, acc) : hash_pair(acc, step.sibling);
  }
  return acc == root && proof.root == root;
}

std::vector<Digest> leaves_of(std::span<const Block> blocks) {
  std::vector<Digest> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back(b.h);
  return out;
}

Digest merkle_root(std::span<const Block> blocks) { return merkle_root(std::span<const Digest>(leaves_of(blocks))); }

Digest truth_message(std::string_view formula, std::int64_t timestamp) {
  std::string msg(formula);
  msg += '\x1F';
  msg += std::to_string(timestamp);
  return sha256(msg);
}

TruthRecord sign_truth_record(std::span<const Block> blocks, const std::string& formula, std::int64_t timestamp,
                              const ed25519::SecretKey& sk) {
  std::optional<std::size_t> at;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].formula == formula) at = i;
  }
  if (!at) throw LedgerError("no ledger block carries " + formula);
  Digest msg = truth_message(formula, timestamp);
  auto leaves = leaves_of(blocks);
  return {formula, timestamp, ed25519::sign(msg, sk), inclusion_proof(leaves, *at)};
}

std::string_view truth_verdict_name(TruthVerdict v) {
  switch (v) {
    case TruthVerdict::accept: return "accept";
    case TruthVerdict::reject_signature: return "reject(signature)";
    case TruthVerdict::reject_inclusion: return "reject(inclusion)";
  }
  return "?";
}

TruthVerdict verify_truth_record(const TruthRecord& rec, const ed25519::PublicKey& pk, const Digest& root) {
  Digest msg = truth_message(rec.formula, rec.timestamp);
  if (!ed25519::verify(msg, rec.signature, pk)) return TruthVerdict::reject_signature;
  if (!verify_inclusion(rec.inclusion, root)) return TruthVerdict::reject_inclusion;
  return TruthVerdict::accept;
}

}  // namespace veritas::ledger
