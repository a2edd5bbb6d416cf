#include "fishnet/keccak.hpp"

#include <cstring>

#include "fishnet/hex.hpp"

namespace fishnet {

namespace {

constexpr int kRounds = 24;
constexpr std::size_t kRateBytes = 136;  // 1600-bit state, 256-bit capacity x2

constexpr std::uint64_t kRoundConstants[kRounds] = {
    0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808aULL,
    0x8000000080008000ULL, 0x000000000000808bULL, 0x0000000080000001ULL,
    0x8000000080008081ULL, 0x8000000000008009ULL, 0x000000000000008aULL,
    0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000aULL,
    0x000000008000808bULL, 0x800000000000008bULL, 0x8000000000008089ULL,
    0x8000000000008003ULL, 0x8000000000008002ULL, 0x8000000000000080ULL,
    0x000000000000800aULL, 0x800000008000000aULL, 0x8000000080008081ULL,
    0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL,
};

constexpr int kRotations[25] = {
    0,  1,  62, 28, 27, 36, 44, 6,  55, 20, 3,  10, 43,
    25, 39, 41, 45, 15, 21, 8,  18, 2,  61, 56, 14,
};

inline std::uint64_t rotl(std::uint64_t v, int n) {
  return n == 0 ? v : (v << n) | (v >> (64 - n));
}

void keccak_f1600(std::uint64_t state[25]) {
  for (int round = 0; round < kRounds; ++round) {
    // theta
    std::uint64_t c[5];
    for (int x = 0; x < 5; ++x)
      c[x] = state[x] ^ state[x + 5] ^ state[x + 10] ^ state[x + 15] ^
             state[x + 20];
    for (int x = 0; x < 5; ++x) {
      std::uint64_t d = c[(x + 4) % 5] ^ rotl(c[(x + 1) % 5], 1);
      for (int y = 0; y < 25; y += 5) state[x + y] ^= d;
    }
    // rho + pi
    std::uint64_t b[25];
    for (int x = 0; x < 5; ++x)
      for (int y = 0; y < 5; ++y)
        b[y + 5 * ((2 * x + 3 * y) % 5)] = rotl(state[x + 5 * y],
                                                kRotations[x + 5 * y]);
    // chi
    for (int y = 0; y < 25; y += 5)
      for (int x = 0; x < 5; ++x)
        state[y + x] = b[y + x] ^ (~b[y + (x + 1) % 5] & b[y + (x + 2) % 5]);
    // iota
    state[0] ^= kRoundConstants[round];
  }
}

}  // namespace

Digest keccak256(std::span<const std::uint8_t> data) {
  std::uint64_t state[25] = {};
  std::uint8_t block[kRateBytes];

  std::size_t offset = 0;
  while (data.size() - offset >= kRateBytes) {
    for (std::size_t i = 0; i < kRateBytes / 8; ++i) {
      std::uint64_t lane;
      std::memcpy(&lane, data.data() + offset + i * 8, 8);
      state[i] ^= lane;  // little-endian hosts only; asserted in tests
    }
    keccak_f1600(state);
    offset += kRateBytes;
  }

  // Final block with legacy Keccak padding: 0x01 ... 0x80.
  std::size_t remaining = data.size() - offset;
  std::memset(block, 0, kRateBytes);
  if (remaining > 0) std::memcpy(block, data.data() + offset, remaining);
  block[remaining] = 0x01;
  block[kRateBytes - 1] |= 0x80;
  for (std::size_t i = 0; i < kRateBytes / 8; ++i) {
    std::uint64_t lane;
    std::memcpy(&lane, block + i * 8, 8);
    state[i] ^= lane;
  }
  keccak_f1600(state);

  Digest out;
  std::memcpy(out.data(), state, 32);
  return out;
}

Digest keccak256(std::string_view data) {
  return keccak256(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string digest_hex(const Digest& d) {
  return hex_encode(std::span<const std::uint8_t>(d.data(), d.size()));
}

}  // namespace fishnet
