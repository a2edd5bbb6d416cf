#include "fishnet/agents.hpp"

#include <charconv>
#include <sstream>

namespace fishnet {

std::optional<std::uint32_t> parse_ipv4(std::string_view text) {
  std::uint32_t value = 0;
  int octets = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  while (octets < 4) {
    unsigned octet = 0;
    auto [next, ec] = std::from_chars(p, end, octet);
    if (ec != std::errc() || next == p || octet > 255) return std::nullopt;
    value = (value << 8) | octet;
    ++octets;
    p = next;
    if (octets < 4) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return value;
}

std::optional<CidrBlock> CidrBlock::parse(std::string_view text) {
  std::size_t slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto addr = parse_ipv4(text.substr(0, slash));
  if (!addr) return std::nullopt;
  std::string_view prefix_text = text.substr(slash + 1);
  int prefix = -1;
  auto [next, ec] = std::from_chars(
      prefix_text.data(), prefix_text.data() + prefix_text.size(), prefix);
  if (ec != std::errc() || next != prefix_text.data() + prefix_text.size() ||
      prefix < 0 || prefix > 32)
    return std::nullopt;
  return CidrBlock{*addr, prefix};
}

bool CidrBlock::contains(std::uint32_t ip) const {
  if (prefix == 0) return true;
  std::uint32_t mask = prefix == 32 ? 0xffffffffu
                                    : ~((1u << (32 - prefix)) - 1);
  return (ip & mask) == (address & mask);
}

std::string CidrBlock::to_string() const {
  std::ostringstream out;
  out << ((address >> 24) & 0xff) << '.' << ((address >> 16) & 0xff) << '.'
      << ((address >> 8) & 0xff) << '.' << (address & 0xff) << '/' << prefix;
  return out.str();
}

}  // namespace fishnet
