#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace veritas {

using Digest = std::array<std::uint8_t, 32>;

inline constexpr Digest kZeroDigest{};

std::string to_hex(std::span<const std::uint8_t> bytes);
inline std::string to_hex(const Digest& d) { return to_hex(std::span<const std::uint8_t>(d)); }

// Lowercase hex only; nullopt on any other input.
std::optional<Digest> digest_from_hex(std::string_view hex);

Digest sha256(std::string_view bytes);
Digest sha256(std::span<const std::uint8_t> bytes);

namespace ed25519 {

using PublicKey = std::array<std::uint8_t, 32>;
using SecretKey = std::array<std::uint8_t, 64>;
using Seed = std::array<std::uint8_t, 32>;
using Signature = std::array<std::uint8_t, 64>;

struct KeyPair {
  PublicKey public_key;
  SecretKey secret_key;
};

KeyPair keypair_from_seed(const Seed& seed);
KeyPair generate_keypair();
Signature sign(std::span<const std::uint8_t> message, const SecretKey& sk);
bool verify(std::span<const std::uint8_t> message, const Signature& sig, const PublicKey& pk);

}  // namespace ed25519

}  // namespace veritas
