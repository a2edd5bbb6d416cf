#include <doctest.h>

#include "fishnet/robots.hpp"

using namespace fishnet::robots;
using namespace std::chrono_literals;

TEST_CASE("parses groups, comments, and unknown directives leniently") {
  auto policy = parse_robots(
      "# site policy\n"
      "User-agent: Googlebot\n"
      "Disallow: /private/\n"
      "Allow: /private/press/\n"
      "\n"
      "User-agent: *\n"
      "Crawl-delay: 10\n"  // unknown directive: skipped
      "Disallow: /admin/\n"
      "total garbage line\n");
  REQUIRE(policy.groups.size() == 2);
  CHECK(policy.groups[0].agents == std::vector<std::string>{"Googlebot"});
  CHECK(policy.groups[0].rules.size() == 2);
  CHECK(policy.groups[1].agents == std::vector<std::string>{"*"});
}

TEST_CASE("consecutive user-agent lines share one group") {
  auto policy = parse_robots(
      "User-agent: A\n"
      "User-agent: B\n"
      "Disallow: /x/\n");
  REQUIRE(policy.groups.size() == 1);
  CHECK(policy.groups[0].agents == std::vector<std::string>{"A", "B"});
  CHECK_FALSE(is_path_allowed(policy, "A", "/x/1"));
  CHECK_FALSE(is_path_allowed(policy, "B", "/x/1"));
  CHECK(is_path_allowed(policy, "C", "/x/1"));
}

TEST_CASE("most specific agent group wins over wildcard") {
  auto policy = parse_robots(
      "User-agent: *\n"
      "Disallow: /\n"
      "\n"
      "User-agent: Googlebot\n"
      "Disallow: /private/\n");
  CHECK(is_path_allowed(policy, "Googlebot", "/public/page"));
  CHECK_FALSE(is_path_allowed(policy, "Googlebot", "/private/page"));
  CHECK_FALSE(is_path_allowed(policy, "GPTBot", "/public/page"));
}

TEST_CASE("longest match decides; allow wins exact ties") {
  auto policy = parse_robots(
      "User-agent: *\n"
      "Disallow: /a/\n"
      "Allow: /a/b/\n"
      "Disallow: /tie/\n"
      "Allow: /tie/\n");
  CHECK_FALSE(is_path_allowed(policy, "Bot", "/a/x"));
  CHECK(is_path_allowed(policy, "Bot", "/a/b/x"));
  CHECK(is_path_allowed(policy, "Bot", "/tie/x"));  // equal length: allow
  CHECK(is_path_allowed(policy, "Bot", "/elsewhere"));
}

TEST_CASE("no matching group or rule means allowed") {
  auto policy = parse_robots("User-agent: Other\nDisallow: /\n");
  CHECK(is_path_allowed(policy, "Googlebot", "/anything"));
  CHECK(is_path_allowed(parse_robots(""), "Googlebot", "/anything"));
}

TEST_CASE("empty disallow value is a no-op") {
  auto policy = parse_robots("User-agent: *\nDisallow:\n");
  CHECK(is_path_allowed(policy, "Bot", "/anything"));
}

TEST_CASE("serve_robots round-trips through the parser") {
  std::vector<SitePolicyGroup> site = {
      {"*", {{false, "/private/"}, {true, "/private/press/"}}}};
  auto text = serve_robots(site);
  auto policy = parse_robots(text);
  CHECK_FALSE(is_path_allowed(policy, "AnyBot", "/private/x"));
  CHECK(is_path_allowed(policy, "AnyBot", "/private/press/x"));
  CHECK(is_path_allowed(policy, "AnyBot", "/posts"));
}

TEST_CASE("back-off delay tracks response time with clamping") {
  BackoffPolicy policy;  // 50ms..10s, k=2
  // Oracle: delay = clamp(2 * last_rt, 50ms, 10s) on success; the very
  // first request has no history and uses the minimum.
  CHECK(next_fetch_delay(std::nullopt, 100ms, 200, policy) == 50ms);
  CHECK(next_fetch_delay(50ms, 10ms, 200, policy) == 50ms);
  CHECK(next_fetch_delay(50ms, 100ms, 200, policy) == 200ms);
  CHECK(next_fetch_delay(50ms, 30'000ms, 200, policy) == 10'000ms);
  CHECK(next_fetch_delay(500ms, 100ms, 200, policy) == 200ms);
}

TEST_CASE("back-off doubles the previous delay on 429 and 5xx") {
  BackoffPolicy policy;
  CHECK(next_fetch_delay(100ms, 10ms, 429, policy) == 200ms);
  CHECK(next_fetch_delay(100ms, 10ms, 503, policy) == 200ms);
  // Doubling saturates at the maximum.
  CHECK(next_fetch_delay(8'000ms, 10ms, 429, policy) == 10'000ms);
  // 4xx other than 429 is not a back-off trigger.
  CHECK(next_fetch_delay(100ms, 10ms, 404, policy) == 50ms);
}
