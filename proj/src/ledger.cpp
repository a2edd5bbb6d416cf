#include "fishnet/ledger.hpp"

#include <algorithm>
#include <sstream>

#include "fishnet/hex.hpp"

namespace fishnet::ledger {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::crawl: return "crawl";
    case EventKind::transfer: return "transfer";
    case EventKind::training: return "training";
    case EventKind::withdrawal_requested: return "withdrawal-requested";
    case EventKind::deletion_completed: return "deletion-completed";
    case EventKind::retraining_completed: return "retraining-completed";
  }
  return "unknown";
}

std::optional<EventKind> event_kind_from_string(std::string_view text) {
  if (text == "crawl") return EventKind::crawl;
  if (text == "transfer") return EventKind::transfer;
  if (text == "training") return EventKind::training;
  if (text == "withdrawal-requested") return EventKind::withdrawal_requested;
  if (text == "deletion-completed") return EventKind::deletion_completed;
  if (text == "retraining-completed") return EventKind::retraining_completed;
  return std::nullopt;
}

Ledger::Ledger(std::optional<std::uint64_t> rng_seed) : rng_(rng_seed) {}

std::uint64_t Ledger::register_agent(CrawlerAgentConfig config) {
  if (config.name.empty()) throw LedgerError("agent name must be non-empty");
  if (config.ip_ranges.empty())
    throw LedgerError("agent must declare at least one IP range");
  std::lock_guard lock(mutex_);
  agents_[config.name] = std::move(config);
  return ++registry_version_;
}

std::vector<CrawlerAgentConfig> Ledger::agents() const {
  std::lock_guard lock(mutex_);
  std::vector<CrawlerAgentConfig> out;
  out.reserve(agents_.size());
  for (const auto& [name, config] : agents_) out.push_back(config);
  return out;
}

std::uint64_t Ledger::registry_version() const {
  std::lock_guard lock(mutex_);
  return registry_version_;
}

std::uint64_t Ledger::next_seq_locked() { return ++seq_; }

std::uint64_t Ledger::append_event_locked(const std::string& tag_hash,
                                          EventKind kind,
                                          const std::string& actor,
                                          const std::string& detail) {
  auto& entry = tags_[tag_hash];
  if (entry.hash.empty()) entry.hash = tag_hash;
  LedgerEvent event{next_seq_locked(), kind, actor, tag_hash, detail};
  entry.events.push_back(event);
  log_.push_back(event);
  if (kind == EventKind::transfer || kind == EventKind::training)
    entry.custodians.insert(actor);
  return event.seq;
}

TxReceipt Ledger::submit_tag_batch(const std::vector<BatchItem>& entries) {
  if (entries.empty()) throw LedgerError("empty batch");
  if (entries.size() > kMaxBatchEntries)
    throw LedgerError("batch exceeds capacity of 47000 entries");
  std::lock_guard lock(mutex_);
  TxReceipt receipt;
  receipt.tx_id = ++tx_counter_;
  receipt.entry_count = entries.size();
  receipt.first_seq = seq_ + 1;
  for (const auto& item : entries) {
    auto& entry = tags_[item.hash];
    if (entry.hash.empty()) entry.hash = item.hash;
    if (entry.signature.empty()) entry.signature = item.signature;
    entry.custodians.insert(item.custodian);
    next_seq_locked();
  }
  receipt.last_seq = seq_;
  return receipt;
}

std::uint64_t Ledger::append_event(const std::string& tag_hash,
                                   EventKind kind, const std::string& actor,
                                   const std::string& detail) {
  std::lock_guard lock(mutex_);
  // Crawl events may race the server's tag batch; they lazily create the
  // entry. All other kinds require a known tag.
  if (kind != EventKind::crawl && !tags_.contains(tag_hash))
    throw LedgerError("unknown tag " + tag_hash);
  return append_event_locked(tag_hash, kind, actor, detail);
}

std::optional<TagLedgerEntry> Ledger::query_tag(const std::string& hash) const {
  std::lock_guard lock(mutex_);
  auto it = tags_.find(hash);
  if (it == tags_.end()) return std::nullopt;
  return it->second;
}

Challenge Ledger::issue_challenge() {
  std::lock_guard lock(mutex_);
  Challenge challenge;
  challenge.id = "ch-" + std::to_string(++challenge_counter_);
  auto nonce = rng_.next();
  challenge.nonce_hex = hex_encode(nonce);
  challenge.expiry_seq = seq_ + kChallengeLifetimeSeqs;
  challenges_[challenge.id] = challenge;
  return challenge;
}

std::optional<Challenge> Ledger::query_challenge(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = challenges_.find(id);
  if (it == challenges_.end()) return std::nullopt;
  return it->second;
}

WithdrawalOutcome Ledger::submit_withdrawal(const WithdrawalRequest& request) {
  std::lock_guard lock(mutex_);
  auto tag_it = tags_.find(request.tag_hash);
  if (tag_it == tags_.end()) return {false, 0, kRejectUnknownTag};
  TagLedgerEntry& entry = tag_it->second;

  // Repeat requests are idempotent: the original receipt stands.
  if (entry.withdrawal != WithdrawalState::none)
    return {true, entry.withdrawal_seq, ""};

  auto ch_it = challenges_.find(request.challenge_id);
  if (ch_it == challenges_.end() || ch_it->second.consumed ||
      seq_ > ch_it->second.expiry_seq)
    return {false, 0, kRejectChallengeExpiredOrConsumed};

  // The presented S_d must be the signature recorded when the tag was
  // batched, and it must verify under the presented key. Together these bind
  // the key to the original tagger; a fresh signature from a different key
  // would pass the cryptographic check alone.
  if (entry.signature.empty() || request.tag_signature != entry.signature ||
      !crypto::verify_digest_hex(request.public_key_hex, request.tag_hash,
                                 request.tag_signature))
    return {false, 0, kRejectBadTagSignature};

  auto nonce = hex_decode(ch_it->second.nonce_hex);
  auto nonce_digest = keccak256(std::span<const std::uint8_t>(*nonce));
  if (!crypto::verify_digest_hex(request.public_key_hex,
                                 digest_hex(nonce_digest),
                                 request.challenge_signature))
    return {false, 0, kRejectBadChallengeSignature};

  ch_it->second.consumed = true;
  entry.withdrawal = WithdrawalState::requested;
  entry.pending_deletions = entry.custodians;
  entry.withdrawal_seq = append_event_locked(
      request.tag_hash, EventKind::withdrawal_requested, "user", "");
  return {true, entry.withdrawal_seq, ""};
}

std::uint64_t Ledger::report_completion(const std::string& tag_hash,
                                        const std::string& custodian,
                                        CompletionAction action) {
  std::lock_guard lock(mutex_);
  auto it = tags_.find(tag_hash);
  if (it == tags_.end()) throw LedgerError("unknown tag " + tag_hash);
  TagLedgerEntry& entry = it->second;
  if (entry.withdrawal == WithdrawalState::none)
    throw LedgerError("no active withdrawal for tag " + tag_hash);
  if (!entry.custodians.contains(custodian))
    throw LedgerError("reporter " + custodian + " is not a custodian");

  EventKind kind = action == CompletionAction::deletion
                       ? EventKind::deletion_completed
                       : EventKind::retraining_completed;
  std::uint64_t seq = append_event_locked(tag_hash, kind, custodian, "");
  if (action == CompletionAction::deletion) {
    entry.pending_deletions.erase(custodian);
    if (entry.pending_deletions.empty())
      entry.withdrawal = WithdrawalState::completed;
  }
  return seq;
}

std::pair<std::vector<LedgerEvent>, std::uint64_t> Ledger::poll_events(
    std::uint64_t since, const std::optional<std::string>& party,
    const std::optional<std::string>& tag_hash) const {
  std::lock_guard lock(mutex_);
  std::vector<LedgerEvent> out;
  for (const auto& event : log_) {
    if (event.seq <= since) continue;
    if (tag_hash && event.tag_hash != *tag_hash) continue;
    if (party) {
      auto it = tags_.find(event.tag_hash);
      if (it == tags_.end() || !it->second.custodians.contains(*party))
        continue;
    }
    out.push_back(event);
  }
  return {std::move(out), seq_};
}

std::uint64_t Ledger::high_water() const {
  std::lock_guard lock(mutex_);
  return seq_;
}

std::string Ledger::event_log_text() const {
  std::lock_guard lock(mutex_);
  std::ostringstream out;
  for (const auto& event : log_) {
    out << event.seq << '\t' << to_string(event.kind) << '\t' << event.actor
        << '\t' << event.tag_hash << '\t' << event.detail << '\n';
  }
  return out.str();
}

}  // namespace fishnet::ledger
