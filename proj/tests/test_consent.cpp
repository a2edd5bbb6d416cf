#include <doctest.h>

#include "fishnet/consent.hpp"

using namespace fishnet::consent;

TEST_CASE("parses the documented header grammar") {
  auto config = parse_consent_config("GPTBot:0;Googlebot:1;default:0");
  CHECK(config.rules.at("GPTBot") == Flag::deny);
  CHECK(config.rules.at("Googlebot") == Flag::allow);
  CHECK(config.default_rule == Flag::deny);
}

TEST_CASE("default rule is allow when absent") {
  auto config = parse_consent_config("GPTBot:0");
  CHECK(config.default_rule == Flag::allow);
  CHECK(check_consent(config, "AnythingElse") == Flag::allow);
}

TEST_CASE("check_consent is exact and case-sensitive on names") {
  auto config = parse_consent_config("Googlebot:1;default:0");
  CHECK(check_consent(config, "Googlebot") == Flag::allow);
  CHECK(check_consent(config, "googlebot") == Flag::deny);
  CHECK(check_consent(config, "Googlebot2") == Flag::deny);
}

TEST_CASE("serialize produces canonical order and round-trips") {
  auto config = parse_consent_config("Zeta:1;Alpha:0;default:0");
  auto text = serialize_consent_config(config);
  CHECK(text == "Alpha:0;Zeta:1;default:0");
  CHECK(parse_consent_config(text) == config);
}

TEST_CASE("serialize always names the default rule") {
  CHECK(serialize_consent_config(parse_consent_config("Bot:1")) ==
        "Bot:1;default:1");
  CHECK(serialize_consent_config(ConsentConfig{}) == "default:1");
}

TEST_CASE("parse rejects malformed configs with a named token") {
  CHECK_THROWS_WITH_AS(parse_consent_config("GPTBot"), //
                       doctest::Contains("GPTBot"), ConfigParseError);
  CHECK_THROWS_AS(parse_consent_config("GPTBot:2"), ConfigParseError);
  CHECK_THROWS_AS(parse_consent_config("GPTBot:yes"), ConfigParseError);
  CHECK_THROWS_AS(parse_consent_config(":1"), ConfigParseError);
  CHECK_THROWS_AS(parse_consent_config("A:1;A:0"), ConfigParseError);
}

TEST_CASE("empty config text is malformed, not allow-all") {
  CHECK_THROWS_AS(parse_consent_config(""), ConfigParseError);
  CHECK_THROWS_AS(parse_consent_config("A:1;"), ConfigParseError);
}

TEST_CASE("masking replaces content with the fixed placeholder") {
  TaggedContent item;
  item.content = "secret";
  item.tag = ConsentTag{"aa", "bb"};
  auto masked = mask_content(item);
  CHECK(masked.content == kMaskPlaceholder);
  CHECK(masked.masked);
  CHECK_FALSE(masked.tag.has_value());
  CHECK_FALSE(masked.config.has_value());
  // Idempotent.
  CHECK(mask_content(masked) == masked);
}

TEST_CASE("attach_tag refuses masked content") {
  TaggedContent item;
  item.content = "text";
  auto masked = mask_content(item);
  CHECK_THROWS_AS(attach_tag(masked, ConsentTag{"aa", "bb"}),
                  std::logic_error);
  auto tagged = attach_tag(item, ConsentTag{"aa", "bb"});
  CHECK(tagged.tag == ConsentTag{"aa", "bb"});
}
