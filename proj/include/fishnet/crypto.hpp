#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fishnet/keccak.hpp"

namespace fishnet::crypto {

struct CryptoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ECDSA over NIST P-384. Private key is the 48-byte scalar, public key the
// 97-byte uncompressed point. Signatures are fixed-width raw r||s (96 bytes);
// hex is transport-only.
struct KeyPair {
  std::vector<std::uint8_t> private_key;  // 48 bytes
  std::vector<std::uint8_t> public_key;   // 97 bytes, uncompressed

  std::string public_hex() const;
  std::string private_hex() const;

  static KeyPair from_private_hex(std::string_view hex);
};

// Random key pair (unseeded) or a deterministic one derived from a seed.
KeyPair generate_keypair();
KeyPair generate_keypair(std::span<const std::uint8_t> seed);
KeyPair generate_keypair(std::string_view seed);

// Signs the 32 raw digest bytes. Nonce derivation is deterministic
// (RFC 6979 with HMAC-SHA384), so identical (key, digest) pairs yield
// identical signatures.
std::vector<std::uint8_t> sign_digest(const KeyPair& key, const Digest& digest);

// True iff `signature` is a valid r||s signature of `digest` under the
// uncompressed public point. Malformed input returns false, never throws.
bool verify_digest(std::span<const std::uint8_t> public_key,
                   const Digest& digest,
                   std::span<const std::uint8_t> signature);
bool verify_digest_hex(std::string_view public_key_hex,
                       std::string_view digest_hex,
                       std::string_view signature_hex);

// Seedable 32-byte nonce source for the ledger's challenge generator.
class NonceRng {
 public:
  explicit NonceRng(std::optional<std::uint64_t> seed = std::nullopt);
  std::array<std::uint8_t, 32> next();

 private:
  std::uint64_t state_[4];
};

}  // namespace fishnet::crypto
