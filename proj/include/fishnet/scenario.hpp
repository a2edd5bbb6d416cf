#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fishnet/consent.hpp"

namespace fishnet::scenario {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UserSpec {
  std::string id;
  consent::ConsentConfig config;
  std::vector<std::string> posts;
};

struct WithdrawalStep {
  std::string user_id;
  std::size_t post_index = 0;
};

struct ScenarioSpec {
  std::vector<UserSpec> users;
  std::vector<std::string> crawlers;   // registered agents; names double as
                                       // dataset-holder party ids
  std::vector<std::string> ml_parties;
  std::vector<WithdrawalStep> withdrawals;
  std::uint64_t seed = 42;

  // Throws ScenarioError when a withdrawal references a missing post.
  void validate() const;

  static ScenarioSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// The 2-users / 4-posts / Googlebot-allowed / GPTBot-denied / 1-withdrawal
// lifecycle fixture.
ScenarioSpec reference_spec();

struct ScenarioReport {
  bool passed = false;
  std::vector<std::string> failures;
  nlohmann::json details;  // deterministic given spec + seed
  nlohmann::json timing;   // wall-clock fields, excluded from determinism
};

// Boots a ledger service and consent server over loopback HTTP, pushes
// tagged posts, crawls, ingests, executes scripted withdrawals, waits for
// quiescence, then checks the lifecycle invariants against independent
// oracles. State lives under `workdir`.
ScenarioReport run_scenario(const ScenarioSpec& spec,
                            const std::string& workdir);

}  // namespace fishnet::scenario
