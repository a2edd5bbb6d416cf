#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fishnet::robots {

struct RobotsRule {
  bool allow = false;
  std::string path;  // starts with "/" or empty (empty = no-op)
};

struct RobotsGroup {
  std::vector<std::string> agents;  // product tokens, "*" for wildcard
  std::vector<RobotsRule> rules;
};

struct RobotsPolicy {
  std::vector<RobotsGroup> groups;
  std::string source_host;
};

// Lenient RFC 9309 subset: User-agent / Allow / Disallow, '#' comments,
// case-insensitive directive names, unknown directives and garbage lines
// skipped.
RobotsPolicy parse_robots(std::string_view text);

// Most-specific matching group (exact agent token beats "*"), then
// longest-match rule precedence; Allow wins ties; no match = allowed.
bool is_path_allowed(const RobotsPolicy& policy, std::string_view agent,
                     std::string_view path);

// Canonical robots.txt rendering for the server side.
struct SitePolicyGroup {
  std::string agent;
  std::vector<RobotsRule> rules;
};
std::string serve_robots(const std::vector<SitePolicyGroup>& policy);

// Adaptive per-host back-off: delay = clamp(k * last_response_time, min, max),
// doubling the previous delay on 429 or 5xx.
struct BackoffPolicy {
  std::chrono::milliseconds min_delay{50};
  std::chrono::milliseconds max_delay{10000};
  double k = 2.0;
};

std::chrono::milliseconds next_fetch_delay(
    std::optional<std::chrono::milliseconds> previous_delay,
    std::chrono::milliseconds last_response_time, int last_status,
    const BackoffPolicy& policy = {});

}  // namespace fishnet::robots
