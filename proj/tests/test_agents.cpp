#include <doctest.h>

#include "fishnet/agents.hpp"

using namespace fishnet;

TEST_CASE("parses IPv4 addresses") {
  CHECK(parse_ipv4("127.0.0.1") == 0x7f000001u);
  CHECK(parse_ipv4("0.0.0.0") == 0u);
  CHECK(parse_ipv4("255.255.255.255") == 0xffffffffu);
  CHECK_FALSE(parse_ipv4("256.0.0.1").has_value());
  CHECK_FALSE(parse_ipv4("1.2.3").has_value());
  CHECK_FALSE(parse_ipv4("a.b.c.d").has_value());
  CHECK_FALSE(parse_ipv4("").has_value());
}

TEST_CASE("CIDR parse and membership") {
  auto block = CidrBlock::parse("127.0.0.0/8");
  REQUIRE(block.has_value());
  CHECK(block->contains(*parse_ipv4("127.0.0.1")));
  CHECK(block->contains(*parse_ipv4("127.255.255.255")));
  CHECK_FALSE(block->contains(*parse_ipv4("128.0.0.1")));

  auto host = CidrBlock::parse("10.1.2.3/32");
  REQUIRE(host.has_value());
  CHECK(host->contains(*parse_ipv4("10.1.2.3")));
  CHECK_FALSE(host->contains(*parse_ipv4("10.1.2.4")));

  auto all = CidrBlock::parse("0.0.0.0/0");
  REQUIRE(all.has_value());
  CHECK(all->contains(*parse_ipv4("203.0.113.9")));
}

TEST_CASE("CIDR rejects malformed blocks") {
  CHECK_FALSE(CidrBlock::parse("127.0.0.0").has_value());
  CHECK_FALSE(CidrBlock::parse("127.0.0.0/33").has_value());
  CHECK_FALSE(CidrBlock::parse("127.0.0.0/-1").has_value());
  CHECK_FALSE(CidrBlock::parse("bogus/8").has_value());
}

TEST_CASE("CIDR to_string round-trips") {
  for (const char* text : {"127.0.0.0/8", "10.1.2.3/32", "0.0.0.0/0"}) {
    auto block = CidrBlock::parse(text);
    REQUIRE(block.has_value());
    CHECK(block->to_string() == text);
  }
}
