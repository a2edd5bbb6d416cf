#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace testref {

// Independent Keccak-256 oracle for cross-checking the library's
// implementation. Deliberately written in a different style: byte-array
// state, per-byte absorption, and rotation offsets derived on the fly from
// the (t+1)(t+2)/2 walk instead of precomputed tables.
std::string keccak256_hex(const std::vector<std::uint8_t>& data);
std::string keccak256_hex(const std::string& data);

}  // namespace testref
