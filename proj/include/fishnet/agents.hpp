#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fishnet {

// IPv4 CIDR block. The desk-scale deployment runs over loopback, IPv6 is out
// of scope.
struct CidrBlock {
  std::uint32_t address = 0;
  int prefix = 0;

  static std::optional<CidrBlock> parse(std::string_view text);
  bool contains(std::uint32_t ip) const;
  std::string to_string() const;

  bool operator==(const CidrBlock&) const = default;
};

std::optional<std::uint32_t> parse_ipv4(std::string_view text);

// Registered crawler identity, distributed via the ledger's agent registry.
struct CrawlerAgentConfig {
  std::string name;
  std::string user_agent_pattern;  // substring match against User-Agent
  std::vector<CidrBlock> ip_ranges;
  std::string public_key_hex;

  bool operator==(const CrawlerAgentConfig&) const = default;
};

}  // namespace fishnet
