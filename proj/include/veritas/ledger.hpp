#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "veritas/belief.hpp"
#include "veritas/crypto.hpp"
#include "veritas/justify.hpp"

namespace veritas::ledger {

enum class Op { insert, contract, revise, recovery, trace_seal, meta };

std::string_view op_name(Op op);
std::optional<Op> op_from_name(std::string_view name);

struct Block {
  std::uint64_t index = 0;
  std::int64_t timestamp = 0;
  Op op = Op::meta;
  std::string formula;  // canonical rendering; may be empty for meta blocks
  Digest justification{};
  Digest h_prev{};
  Digest h{};

  bool operator==(const Block&) const = default;
};

// "index 0x1F timestamp 0x1F op 0x1F formula 0x1F jdigest 0x1F h_prev", the hashed bytes.
std::string preimage(const Block& b);
Digest compute_hash(const Block& b);
// preimage, 0x1F, h, newline: one on-disk record.
std::string serialize(const Block& b);
// Strict: returns nullopt unless serialize() of the result reproduces `line` (without its newline).
std::optional<Block> parse_block(std::string_view line);

struct VerifyResult {
  bool ok = true;
  std::optional<std::uint64_t> first_bad;
  std::string reason;
};

VerifyResult verify_chain(std::span<const Block> blocks);
// Verifies raw file bytes; a record that does not parse is bad at its own index.
VerifyResult verify_text(std::string_view text);

class LedgerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorruptLedger : public LedgerError {
 public:
  CorruptLedger(std::uint64_t index, const std::string& reason)
      : LedgerError("ledger corrupt at block " + std::to_string(index) + ": " + reason), index_(index) {}
  std::uint64_t index() const { return index_; }

 private:
  std::uint64_t index_;
};

/// Append-only hash-chained log, optionally backed by a .vlog file.
/// File-backed ledgers hold an exclusive lock for their lifetime (a second
/// open fails rather than waits) and write
/// each block durably before append() returns.
class Ledger {
 public:
  Ledger() = default;
  // Creates the file if absent. Throws CorruptLedger if it does not verify.
  static Ledger open(const std::filesystem::path& path);
  static Ledger from_text(std::string_view text);

  Ledger(Ledger&& other) noexcept;
  Ledger& operator=(Ledger&& other) noexcept;
  Ledger(const Ledger&) = delete;
  Ledger& operator=(const Ledger&) = delete;
  ~Ledger();

  const Block& append(std::int64_t timestamp, Op op, std::string formula, const Digest& justification = kZeroDigest);

  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t size() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }
  bool anchors(const Digest& d) const;
  std::string text() const;

 private:
  std::vector<Block> blocks_;
  std::optional<std::filesystem::path> path_;
  int fd_ = -1;
};

// Binary Merkle tree over block hashes; odd nodes are paired with themselves.
struct MerkleStep {
  Digest sibling;
  bool sibling_is_left;
};

struct MerkleProof {
  Digest leaf;
  std::vector<MerkleStep> path;
  Digest root;
};

Digest merkle_root(std::span<const Digest> leaves);
MerkleProof inclusion_proof(std::span<const Digest> leaves, std::size_t index);
bool verify_inclusion(const MerkleProof& proof, const Digest& root);

std::vector<Digest> leaves_of(std::span<const Block> blocks);
Digest merkle_root(std::span<const Block> blocks);

struct TruthRecord {
  std::string formula;
  std::int64_t timestamp;
  ed25519::Signature signature;
  MerkleProof inclusion;
};

// SHA-256(formula 0x1F timestamp), the signed message.
Digest truth_message(std::string_view formula, std::int64_t timestamp);

// Proves inclusion of the latest block carrying `formula`. Throws LedgerError if none does.
TruthRecord sign_truth_record(std::span<const Block> blocks, const std::string& formula, std::int64_t timestamp,
                              const ed25519::SecretKey& sk);

enum class TruthVerdict { accept, reject_signature, reject_inclusion };

std::string_view truth_verdict_name(TruthVerdict v);
TruthVerdict verify_truth_record(const TruthRecord& rec, const ed25519::PublicKey& pk, const Digest& root);

struct ReplayConfig {
  belief::BeliefConfig belief;
  belief::AdmissionGate gate;
};

// Belief entry described by a justification node.
belief::BeliefEntry entry_from_node(const justify::JustificationNode& node);

struct Applied {
  belief::BeliefBase base;
  std::optional<belief::UpdateOutcome> outcome;
};

/// The single state transition shared by replay and the live engine. Every
/// block advances the epoch by exactly one.
Applied apply_block(const belief::BeliefBase& base, const Block& block, const justify::JustificationStore& store,
                    const ReplayConfig& cfg);

/// Reconstructs the base from blocks[0..upto] (all blocks when upto is empty).
/// Throws CorruptLedger if that prefix does not verify.
belief::BeliefBase replay(std::span<const Block> blocks, std::optional<std::uint64_t> upto,
                          const justify::JustificationStore& store, const ReplayConfig& cfg);

}  // namespace veritas::ledger
