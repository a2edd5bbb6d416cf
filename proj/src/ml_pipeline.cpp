#include "fishnet/ml_pipeline.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fishnet/keccak.hpp"

namespace fishnet::ml {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::vector<dataset::DatasetRecord> deduplicate(
    const std::vector<dataset::DatasetRecord>& records) {
  std::vector<dataset::DatasetRecord> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& record : records) {
    auto key = std::make_pair(record.consent_tag_hash.value_or(""),
                              record.content);
    if (seen.insert(key).second) out.push_back(record);
  }
  return out;
}

MlParty::MlParty(std::string party_id, std::string state_dir)
    : party_id_(std::move(party_id)), state_dir_(std::move(state_dir)) {
  fs::create_directories(state_dir_);
  load();
}

IngestSummary MlParty::ingest_dataset(const std::string& dataset_path,
                                      ledger::LedgerClient& ledger) {
  auto records = dataset::read_dataset(dataset_path);
  IngestSummary summary;

  std::vector<dataset::DatasetRecord> usable;
  for (const auto& record : records) {
    if (record.masked) {
      ++summary.skipped_masked;
      continue;
    }
    if (record.consent_tag_hash) {
      auto recomputed = digest_hex(keccak256(record.content));
      if (recomputed != *record.consent_tag_hash) {
        ++summary.quarantined;
        summary.quarantine_reasons.push_back(
            "hash mismatch for " + record.url + ": content does not match " +
            *record.consent_tag_hash);
        continue;
      }
    }
    usable.push_back(record);
  }

  auto deduped = deduplicate(usable);
  summary.duplicates = usable.size() - deduped.size();

  std::int64_t now = std::time(nullptr);
  for (const auto& record : deduped) {
    // Skip records already ingested in a previous run of this party.
    if (record.consent_tag_hash &&
        consent_records_.contains(*record.consent_tag_hash)) {
      ++summary.duplicates;
      continue;
    }
    TrainingItem item{++next_item_id_, record.content,
                      record.consent_tag_hash};
    items_.push_back(item);
    ++summary.ingested;
    if (record.consent_tag_hash) {
      auto& consent = consent_records_[*record.consent_tag_hash];
      consent.tag_hash = *record.consent_tag_hash;
      consent.tag_sig = record.consent_tag_sig.value_or("");
      consent.item_ids.push_back(item.id);
      consent.ingest_time = now;
      ledger.append_event(*record.consent_tag_hash,
                          ledger::EventKind::training, party_id_,
                          "ingested from " + record.url);
    }
  }
  if (summary.ingested) ++version_;
  persist();
  return summary;
}

WithdrawalHandling MlParty::handle_withdrawal_event(
    const ledger::LedgerEvent& event, ledger::LedgerClient& ledger) {
  WithdrawalHandling handling;
  if (event.kind != ledger::EventKind::withdrawal_requested) return handling;
  if (withdrawn_.contains(event.tag_hash)) return handling;  // exactly once

  auto it = consent_records_.find(event.tag_hash);
  if (it == consent_records_.end()) {
    // Not a custodian of this tag; nothing to delete, nothing to report.
    withdrawn_.insert(event.tag_hash);
    persist();
    return handling;
  }
  handling.held = true;

  std::erase_if(items_, [&](const TrainingItem& item) {
    if (item.tag_hash == event.tag_hash) {
      ++handling.removed_items;
      return true;
    }
    return false;
  });
  consent_records_.erase(it);
  ++version_;

  // Retraining trigger stub: log locally, then report on the ledger.
  retraining_log_.push_back("retraining-started for " + event.tag_hash);
  ledger.report_completion(event.tag_hash, party_id_,
                           ledger::CompletionAction::retraining);
  ledger.report_completion(event.tag_hash, party_id_,
                           ledger::CompletionAction::deletion);
  handling.reported = true;

  withdrawn_.insert(event.tag_hash);
  persist();
  return handling;
}

std::size_t MlParty::watch_once(ledger::LedgerClient& ledger) {
  auto [events, high_water] = ledger.poll_events(ledger_cursor_, party_id_);
  std::size_t handled = 0;
  for (const auto& event : events) {
    if (event.kind != ledger::EventKind::withdrawal_requested) continue;
    if (handle_withdrawal_event(event, ledger).held) ++handled;
  }
  ledger_cursor_ = high_water;
  persist();
  return handled;
}

std::vector<TrainingItem> MlParty::training_items() const { return items_; }

std::map<std::string, ConsentRecord> MlParty::consent_records() const {
  return consent_records_;
}

bool MlParty::holds_tag(const std::string& tag_hash) const {
  return consent_records_.contains(tag_hash);
}

void MlParty::persist() const {
  {
    std::ofstream out(fs::path(state_dir_) / "training_set.jsonl",
                      std::ios::trunc);
    for (const auto& item : items_) {
      ordered_json j;
      j["id"] = item.id;
      j["content"] = item.content;
      if (item.tag_hash) j["tag_hash"] = *item.tag_hash;
      out << j.dump() << '\n';
    }
  }
  {
    std::ofstream out(fs::path(state_dir_) / "consent_records.jsonl",
                      std::ios::trunc);
    for (const auto& [hash, record] : consent_records_) {
      ordered_json j;
      j["tag_hash"] = record.tag_hash;
      j["tag_sig"] = record.tag_sig;
      j["item_ids"] = record.item_ids;
      j["ingest_time"] = record.ingest_time;
      out << j.dump() << '\n';
    }
  }
  {
    ordered_json j;
    j["next_item_id"] = next_item_id_;
    j["version"] = version_;
    j["ledger_cursor"] = ledger_cursor_;
    j["withdrawn"] = withdrawn_;
    std::ofstream out(fs::path(state_dir_) / "state.json", std::ios::trunc);
    out << j.dump(2) << '\n';
  }
}

void MlParty::load() {
  {
    std::ifstream in(fs::path(state_dir_) / "training_set.jsonl");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = json::parse(line);
      TrainingItem item;
      item.id = j.at("id").get<std::uint64_t>();
      item.content = j.at("content").get<std::string>();
      if (j.contains("tag_hash"))
        item.tag_hash = j.at("tag_hash").get<std::string>();
      items_.push_back(std::move(item));
    }
  }
  {
    std::ifstream in(fs::path(state_dir_) / "consent_records.jsonl");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = json::parse(line);
      ConsentRecord record;
      record.tag_hash = j.at("tag_hash").get<std::string>();
      record.tag_sig = j.at("tag_sig").get<std::string>();
      record.item_ids =
          j.at("item_ids").get<std::vector<std::uint64_t>>();
      record.ingest_time = j.at("ingest_time").get<std::int64_t>();
      consent_records_[record.tag_hash] = std::move(record);
    }
  }
  std::ifstream in(fs::path(state_dir_) / "state.json");
  if (in) {
    auto j = json::parse(in);
    next_item_id_ = j.at("next_item_id").get<std::uint64_t>();
    version_ = j.at("version").get<std::uint64_t>();
    ledger_cursor_ = j.at("ledger_cursor").get<std::uint64_t>();
    for (const auto& h : j.at("withdrawn"))
      withdrawn_.insert(h.get<std::string>());
  }
}

}  // namespace fishnet::ml
