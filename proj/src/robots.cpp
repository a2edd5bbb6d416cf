#include "fishnet/robots.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace fishnet::robots {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

RobotsPolicy parse_robots(std::string_view text) {
  RobotsPolicy policy;
  RobotsGroup current;
  bool in_agent_run = false;  // consecutive User-agent lines share one group

  auto flush = [&] {
    if (!current.agents.empty()) policy.groups.push_back(std::move(current));
    current = {};
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? std::string_view::npos
                                           : eol - pos);
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);

    std::size_t colon = line.find(':');
    if (colon != std::string_view::npos) {
      std::string_view directive = trim(line.substr(0, colon));
      std::string value(trim(line.substr(colon + 1)));

      if (iequals(directive, "user-agent")) {
        if (!in_agent_run) flush();
        in_agent_run = true;
        if (!value.empty()) current.agents.push_back(value);
      } else if (iequals(directive, "allow") ||
                 iequals(directive, "disallow")) {
        in_agent_run = false;
        if (!current.agents.empty() &&
            (value.empty() || value.front() == '/'))
          current.rules.push_back({iequals(directive, "allow"), value});
      } else {
        // Unknown directives (Crawl-delay, Sitemap, ...) do not break a
        // group but end an agent-line run.
        in_agent_run = false;
      }
    }

    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  flush();
  return policy;
}

bool is_path_allowed(const RobotsPolicy& policy, std::string_view agent,
                     std::string_view path) {
  // Gather rules from exact-token groups; fall back to wildcard groups.
  std::vector<const RobotsRule*> rules;
  auto collect = [&](bool wildcard) {
    for (const auto& group : policy.groups) {
      bool matches = false;
      for (const auto& token : group.agents) {
        if (wildcard ? token == "*" : iequals(token, agent)) matches = true;
      }
      if (!matches) continue;
      for (const auto& rule : group.rules) rules.push_back(&rule);
    }
  };
  collect(false);
  if (rules.empty()) {
    bool any_specific = false;
    for (const auto& group : policy.groups)
      for (const auto& token : group.agents)
        if (iequals(token, agent)) any_specific = true;
    if (!any_specific) collect(true);
    // An agent with a dedicated (possibly empty) group ignores the wildcard.
  }

  const RobotsRule* best = nullptr;
  for (const RobotsRule* rule : rules) {
    if (rule->path.empty()) continue;  // empty pattern matches nothing
    if (path.substr(0, rule->path.size()) != rule->path) continue;
    if (!best || rule->path.size() > best->path.size() ||
        (rule->path.size() == best->path.size() && rule->allow))
      best = rule;
  }
  return best ? best->allow : true;
}

std::string serve_robots(const std::vector<SitePolicyGroup>& policy) {
  std::ostringstream out;
  bool first = true;
  for (const auto& group : policy) {
    if (!first) out << '\n';
    first = false;
    out << "User-agent: " << group.agent << '\n';
    for (const auto& rule : group.rules)
      out << (rule.allow ? "Allow: " : "Disallow: ") << rule.path << '\n';
  }
  return out.str();
}

std::chrono::milliseconds next_fetch_delay(
    std::optional<std::chrono::milliseconds> previous_delay,
    std::chrono::milliseconds last_response_time, int last_status,
    const BackoffPolicy& policy) {
  if (!previous_delay) return policy.min_delay;
  if (last_status == 429 || (last_status >= 500 && last_status < 600))
    return std::min(2 * *previous_delay, policy.max_delay);
  auto scaled = std::chrono::milliseconds(
      static_cast<long long>(policy.k * last_response_time.count()));
  return std::clamp(scaled, policy.min_delay, policy.max_delay);
}

}  // namespace fishnet::robots
