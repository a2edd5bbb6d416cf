#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace fishnet {

using Digest = std::array<std::uint8_t, 32>;

// Original Keccak-256 (pre-SHA-3 padding, 0x01 domain byte), as used by the
// Ethereum ecosystem. Not FIPS-202 SHA3-256.
Digest keccak256(std::span<const std::uint8_t> data);
Digest keccak256(std::string_view data);

std::string digest_hex(const Digest& d);

}  // namespace fishnet
