#pragma once

// Wire representations shared by the ledger HTTP service and client.

#include <json.hpp>

#include "fishnet/ledger.hpp"

namespace fishnet::ledger {

using nlohmann::json;

inline json agent_to_json(const CrawlerAgentConfig& config) {
  json ranges = json::array();
  for (const auto& range : config.ip_ranges) ranges.push_back(range.to_string());
  return {{"name", config.name},
          {"user_agent_pattern", config.user_agent_pattern},
          {"ip_ranges", ranges},
          {"public_key", config.public_key_hex}};
}

inline CrawlerAgentConfig agent_from_json(const json& j) {
  CrawlerAgentConfig config;
  config.name = j.at("name").get<std::string>();
  config.user_agent_pattern = j.at("user_agent_pattern").get<std::string>();
  for (const auto& text : j.at("ip_ranges")) {
    auto block = CidrBlock::parse(text.get<std::string>());
    if (!block)
      throw LedgerError("invalid CIDR block \"" + text.get<std::string>() +
                        "\"");
    config.ip_ranges.push_back(*block);
  }
  config.public_key_hex = j.at("public_key").get<std::string>();
  return config;
}

inline json event_to_json(const LedgerEvent& event) {
  return {{"seq", event.seq},
          {"kind", std::string(to_string(event.kind))},
          {"actor", event.actor},
          {"tag_hash", event.tag_hash},
          {"detail", event.detail}};
}

inline LedgerEvent event_from_json(const json& j) {
  LedgerEvent event;
  event.seq = j.at("seq").get<std::uint64_t>();
  auto kind = event_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw LedgerError("unknown event kind");
  event.kind = *kind;
  event.actor = j.at("actor").get<std::string>();
  event.tag_hash = j.at("tag_hash").get<std::string>();
  event.detail = j.at("detail").get<std::string>();
  return event;
}

inline json entry_to_json(const TagLedgerEntry& entry) {
  json events = json::array();
  for (const auto& event : entry.events) events.push_back(event_to_json(event));
  const char* state = entry.withdrawal == WithdrawalState::none
                          ? "none"
                          : entry.withdrawal == WithdrawalState::requested
                                ? "requested"
                                : "completed";
  return {{"hash", entry.hash},
          {"signature", entry.signature},
          {"custodians", entry.custodians},
          {"events", events},
          {"withdrawal", state},
          {"withdrawal_seq", entry.withdrawal_seq},
          {"pending_deletions", entry.pending_deletions}};
}

inline TagLedgerEntry entry_from_json(const json& j) {
  TagLedgerEntry entry;
  entry.hash = j.at("hash").get<std::string>();
  entry.signature = j.at("signature").get<std::string>();
  for (const auto& c : j.at("custodians"))
    entry.custodians.insert(c.get<std::string>());
  for (const auto& e : j.at("events"))
    entry.events.push_back(event_from_json(e));
  std::string state = j.at("withdrawal").get<std::string>();
  entry.withdrawal = state == "none" ? WithdrawalState::none
                     : state == "requested" ? WithdrawalState::requested
                                            : WithdrawalState::completed;
  entry.withdrawal_seq = j.at("withdrawal_seq").get<std::uint64_t>();
  for (const auto& c : j.at("pending_deletions"))
    entry.pending_deletions.insert(c.get<std::string>());
  return entry;
}

}  // namespace fishnet::ledger
