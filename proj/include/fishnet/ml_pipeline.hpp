#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fishnet/dataset.hpp"
#include "fishnet/ledger_client.hpp"

namespace fishnet::ml {

struct ConsentRecord {
  std::string tag_hash;
  std::string tag_sig;
  std::vector<std::uint64_t> item_ids;
  std::int64_t ingest_time = 0;
};

struct TrainingItem {
  std::uint64_t id = 0;
  std::string content;
  std::optional<std::string> tag_hash;
};

struct IngestSummary {
  std::size_t ingested = 0;
  std::size_t duplicates = 0;
  std::size_t quarantined = 0;
  std::size_t skipped_masked = 0;
  std::vector<std::string> quarantine_reasons;
};

struct WithdrawalHandling {
  bool held = false;
  std::size_t removed_items = 0;
  bool reported = false;
};

// Tag-preserving deduplication: first occurrence wins, keyed by
// (tag hash, content) so identical text posted by two users survives twice.
std::vector<dataset::DatasetRecord> deduplicate(
    const std::vector<dataset::DatasetRecord>& records);

// One ML party's stores: Consent Records plus the training set, persisted as
// JSON lines under a directory. A single consumer loop owns the stores.
class MlParty {
 public:
  MlParty(std::string party_id, std::string state_dir);

  const std::string& party_id() const { return party_id_; }

  // Verifies each tagged record (keccak256(content) == tag hash), skips
  // masked records, deduplicates, populates stores, and logs one training
  // event per tagged record -- which makes this party a custodian.
  IngestSummary ingest_dataset(const std::string& dataset_path,
                               ledger::LedgerClient& ledger);

  // Withdrawal-requested handler: removes the tag's items and consent
  // record, fires the retraining trigger stub, and reports deletion and
  // retraining completion on the ledger. Idempotent per tag.
  WithdrawalHandling handle_withdrawal_event(const ledger::LedgerEvent& event,
                                             ledger::LedgerClient& ledger);

  // One polling cycle against the persisted high-water mark. Returns the
  // number of withdrawal events acted upon.
  std::size_t watch_once(ledger::LedgerClient& ledger);

  std::vector<TrainingItem> training_items() const;
  std::map<std::string, ConsentRecord> consent_records() const;
  std::uint64_t training_set_version() const { return version_; }
  bool holds_tag(const std::string& tag_hash) const;
  const std::vector<std::string>& retraining_log() const {
    return retraining_log_;
  }

 private:
  void persist() const;
  void load();

  std::string party_id_;
  std::string state_dir_;
  std::uint64_t next_item_id_ = 0;
  std::uint64_t version_ = 0;
  std::uint64_t ledger_cursor_ = 0;
  std::vector<TrainingItem> items_;
  std::map<std::string, ConsentRecord> consent_records_;
  std::set<std::string> withdrawn_;
  std::vector<std::string> retraining_log_;
};

}  // namespace fishnet::ml
