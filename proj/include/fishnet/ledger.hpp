#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fishnet/agents.hpp"
#include "fishnet/crypto.hpp"

namespace fishnet::ledger {

struct LedgerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EventKind {
  crawl,
  transfer,
  training,
  withdrawal_requested,
  deletion_completed,
  retraining_completed,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(std::string_view text);

struct LedgerEvent {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::crawl;
  std::string actor;
  std::string tag_hash;
  std::string detail;

  bool operator==(const LedgerEvent&) const = default;
};

enum class WithdrawalState { none, requested, completed };

struct TagLedgerEntry {
  std::string hash;
  std::string signature;
  std::set<std::string> custodians;
  std::vector<LedgerEvent> events;
  WithdrawalState withdrawal = WithdrawalState::none;
  std::uint64_t withdrawal_seq = 0;  // seq of the withdrawal-requested event
  // Custodians at request time that have not yet reported deletion.
  std::set<std::string> pending_deletions;
};

struct Challenge {
  std::string id;
  std::string nonce_hex;  // 32 bytes
  std::uint64_t expiry_seq = 0;
  bool consumed = false;
};

struct BatchItem {
  std::string hash;
  std::string signature;
  std::string custodian;
};

struct TxReceipt {
  std::uint64_t tx_id = 0;
  std::uint64_t first_seq = 0;
  std::uint64_t last_seq = 0;
  std::size_t entry_count = 0;
};

struct WithdrawalRequest {
  std::string tag_hash;        // H_d
  std::string tag_signature;   // S_d
  std::string public_key_hex;  // K_pub
  std::string challenge_id;
  std::string challenge_signature;  // S_c over keccak256(nonce)
};

struct WithdrawalOutcome {
  bool accepted = false;
  std::uint64_t seq = 0;      // withdrawal-requested event (original on repeat)
  std::string reason;         // rejection reason when !accepted
};

inline constexpr const char* kRejectBadTagSignature = "bad-tag-signature";
inline constexpr const char* kRejectBadChallengeSignature =
    "bad-challenge-signature";
inline constexpr const char* kRejectChallengeExpiredOrConsumed =
    "challenge-expired-or-consumed";
inline constexpr const char* kRejectUnknownTag = "unknown-tag";

enum class CompletionAction { deletion, retraining };

// Deterministic single-node simulation of the three on-chain roles: Consent
// Logger, Agent Configurations, and Consent Request Handler. Single-writer:
// every call is serialized through one internal lock, so replaying a call
// sequence reproduces the state byte for byte (given the same rng seed).
class Ledger {
 public:
  static constexpr std::size_t kMaxBatchEntries = 47000;
  static constexpr std::uint64_t kChallengeLifetimeSeqs = 1000;

  explicit Ledger(std::optional<std::uint64_t> rng_seed = std::nullopt);

  // Agent Configurations. Re-registering a name replaces the prior config.
  std::uint64_t register_agent(CrawlerAgentConfig config);
  std::vector<CrawlerAgentConfig> agents() const;
  std::uint64_t registry_version() const;

  // Consent Logger.
  TxReceipt submit_tag_batch(const std::vector<BatchItem>& entries);
  std::uint64_t append_event(const std::string& tag_hash, EventKind kind,
                             const std::string& actor,
                             const std::string& detail = "");
  std::optional<TagLedgerEntry> query_tag(const std::string& hash) const;

  // Consent Request Handler.
  Challenge issue_challenge();
  std::optional<Challenge> query_challenge(const std::string& id) const;
  WithdrawalOutcome submit_withdrawal(const WithdrawalRequest& request);
  std::uint64_t report_completion(const std::string& tag_hash,
                                  const std::string& custodian,
                                  CompletionAction action);

  // Notification is pull-based. Returns events with seq > since (optionally
  // restricted to one party's tags or one tag) plus the high-water mark.
  std::pair<std::vector<LedgerEvent>, std::uint64_t> poll_events(
      std::uint64_t since, const std::optional<std::string>& party = {},
      const std::optional<std::string>& tag_hash = {}) const;
  std::uint64_t high_water() const;

  // Canonical JSONL rendering of the full event log, for determinism checks.
  std::string event_log_text() const;

 private:
  std::uint64_t next_seq_locked();
  std::uint64_t append_event_locked(const std::string& tag_hash,
                                    EventKind kind, const std::string& actor,
                                    const std::string& detail);

  mutable std::mutex mutex_;
  crypto::NonceRng rng_;
  std::uint64_t seq_ = 0;
  std::uint64_t tx_counter_ = 0;
  std::uint64_t challenge_counter_ = 0;
  std::uint64_t registry_version_ = 0;
  std::map<std::string, CrawlerAgentConfig> agents_;
  std::map<std::string, TagLedgerEntry> tags_;
  std::map<std::string, Challenge> challenges_;
  std::vector<LedgerEvent> log_;
};

}  // namespace fishnet::ledger
