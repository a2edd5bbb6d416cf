#include <doctest.h>

#include <unistd.h>

#include <filesystem>

#include "fishnet/consent.hpp"
#include "fishnet/crypto.hpp"
#include "fishnet/hex.hpp"
#include "fishnet/keccak.hpp"
#include "fishnet/ledger_client.hpp"
#include "fishnet/ml_pipeline.hpp"

using namespace fishnet;
using namespace fishnet::ml;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fishnet-ml-" + std::to_string(::getpid()) + "-" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

dataset::DatasetRecord make_record(const std::string& content,
                                   bool tagged = true) {
  dataset::DatasetRecord record;
  record.url = "http://site/posts";
  record.selector = "p.post-body";
  record.content = content;
  if (tagged) {
    record.consent_tag_hash = digest_hex(keccak256(content));
    record.consent_tag_sig = "sig";
  }
  record.crawl_time = 1;
  record.crawler = "Googlebot";
  return record;
}

// Signs the record with a real key and lands it on the ledger so the tag can
// later be withdrawn through the genuine challenge-response flow.
crypto::KeyPair sign_and_batch(ledger::Ledger& chain,
                               dataset::DatasetRecord& record,
                               const std::string& seed) {
  auto key = crypto::generate_keypair(seed);
  auto digest = keccak256(record.content);
  record.consent_tag_sig = hex_encode(crypto::sign_digest(key, digest));
  chain.submit_tag_batch(
      {{*record.consent_tag_hash, *record.consent_tag_sig, "web-server"}});
  return key;
}

void withdraw_for_real(ledger::Ledger& chain, const crypto::KeyPair& key,
                       const dataset::DatasetRecord& record) {
  auto challenge = chain.issue_challenge();
  auto nonce = hex_decode(challenge.nonce_hex);
  REQUIRE(nonce.has_value());
  ledger::WithdrawalRequest request;
  request.tag_hash = *record.consent_tag_hash;
  request.tag_signature = *record.consent_tag_sig;
  request.public_key_hex = key.public_hex();
  request.challenge_id = challenge.id;
  request.challenge_signature = hex_encode(crypto::sign_digest(
      key, keccak256(std::span<const std::uint8_t>(*nonce))));
  auto outcome = chain.submit_withdrawal(request);
  REQUIRE(outcome.accepted);
}

}  // namespace

TEST_CASE("deduplication keys on (tag hash, content), first wins") {
  auto a = make_record("same");
  auto b = make_record("same");
  b.url = "http://site/other";           // different source, same key
  auto untagged_a = make_record("same", false);
  auto untagged_b = make_record("same", false);
  auto other = make_record("different");

  auto out = deduplicate({a, b, untagged_a, untagged_b, other});
  REQUIRE(out.size() == 3);
  CHECK(out[0].url == a.url);  // first occurrence kept
  CHECK(out[1] == untagged_a);
  CHECK(out[2] == other);
}

TEST_CASE("ingest verifies hashes, skips masked, logs training events") {
  TempDir dir;
  ledger::Ledger chain(3);
  ledger::InProcessLedgerClient ledger(chain);

  auto good = make_record("genuine content");
  chain.submit_tag_batch({{*good.consent_tag_hash, "sig", "web-server"}});

  auto forged = make_record("claimed content");
  forged.content = "actual different content";  // hash no longer matches

  dataset::DatasetRecord masked;
  masked.url = "http://site/posts";
  masked.selector = "p.post-body";
  masked.content = consent::kMaskPlaceholder;
  masked.masked = true;
  masked.crawler = "Googlebot";

  auto untagged = make_record("legacy", false);

  auto path = (dir.path / "set.jsonl.gz").string();
  dataset::write_dataset(
      std::vector<dataset::DatasetRecord>{good, forged, masked, untagged,
                                          good},
      path);

  MlParty party("ml-corp", (dir.path / "state").string());
  auto summary = party.ingest_dataset(path, ledger);
  CHECK(summary.ingested == 2);  // good + untagged
  CHECK(summary.duplicates == 1);
  CHECK(summary.quarantined == 1);
  CHECK(summary.skipped_masked == 1);
  REQUIRE(summary.quarantine_reasons.size() == 1);
  CHECK(summary.quarantine_reasons[0].find("hash mismatch") !=
        std::string::npos);

  CHECK(party.holds_tag(*good.consent_tag_hash));
  CHECK(party.training_items().size() == 2);
  CHECK(party.training_set_version() == 1);

  // One training event on the ledger; the party is now a custodian.
  auto entry = chain.query_tag(*good.consent_tag_hash);
  REQUIRE(entry.has_value());
  CHECK(entry->custodians.contains("ml-corp"));
  std::size_t training_events = 0;
  for (const auto& event : entry->events)
    if (event.kind == ledger::EventKind::training) ++training_events;
  CHECK(training_events == 1);
}

TEST_CASE("state persists across party restarts") {
  TempDir dir;
  ledger::Ledger chain(3);
  ledger::InProcessLedgerClient ledger(chain);
  auto record = make_record("persistent");
  chain.submit_tag_batch({{*record.consent_tag_hash, "sig", "web-server"}});
  auto path = (dir.path / "set.jsonl.gz").string();
  dataset::write_dataset(std::vector<dataset::DatasetRecord>{record}, path);

  {
    MlParty party("ml-corp", (dir.path / "state").string());
    party.ingest_dataset(path, ledger);
  }
  MlParty reloaded("ml-corp", (dir.path / "state").string());
  CHECK(reloaded.holds_tag(*record.consent_tag_hash));
  CHECK(reloaded.training_items().size() == 1);
  // Re-ingesting the same dataset adds nothing.
  auto summary = reloaded.ingest_dataset(path, ledger);
  CHECK(summary.ingested == 0);
  CHECK(reloaded.training_items().size() == 1);
}

TEST_CASE("withdrawal removes items, bumps version, reports exactly once") {
  TempDir dir;
  ledger::Ledger chain(3);
  ledger::InProcessLedgerClient ledger(chain);
  auto record = make_record("to withdraw");
  std::string hash = *record.consent_tag_hash;
  auto key = sign_and_batch(chain, record, "withdrawing-user");
  auto path = (dir.path / "set.jsonl.gz").string();
  dataset::write_dataset(std::vector<dataset::DatasetRecord>{record}, path);

  MlParty party("ml-corp", (dir.path / "state").string());
  party.ingest_dataset(path, ledger);
  auto version_before = party.training_set_version();

  withdraw_for_real(chain, key, record);
  ledger::LedgerEvent event;
  event.kind = ledger::EventKind::withdrawal_requested;
  event.tag_hash = hash;
  auto handling = party.handle_withdrawal_event(event, ledger);
  CHECK(handling.held);
  CHECK(handling.removed_items == 1);
  CHECK(handling.reported);
  CHECK_FALSE(party.holds_tag(hash));
  CHECK(party.training_items().empty());
  CHECK(party.training_set_version() > version_before);
  REQUIRE(party.retraining_log().size() == 1);

  // Exactly once: the repeat is a no-op.
  auto repeat = party.handle_withdrawal_event(event, ledger);
  CHECK_FALSE(repeat.held);
  CHECK_FALSE(repeat.reported);

  auto entry = chain.query_tag(hash);
  std::size_t deletions = 0, retrainings = 0;
  for (const auto& e : entry->events) {
    if (e.kind == ledger::EventKind::deletion_completed &&
        e.actor == "ml-corp")
      ++deletions;
    if (e.kind == ledger::EventKind::retraining_completed) ++retrainings;
  }
  CHECK(deletions == 1);
  CHECK(retrainings == 1);
}

TEST_CASE("watch_once advances a persisted cursor over the party's events") {
  TempDir dir;
  ledger::Ledger chain(3);
  ledger::InProcessLedgerClient ledger(chain);
  auto record = make_record("watched");
  std::string hash = *record.consent_tag_hash;
  auto key = sign_and_batch(chain, record, "watching-user");
  auto path = (dir.path / "set.jsonl.gz").string();
  dataset::write_dataset(std::vector<dataset::DatasetRecord>{record}, path);

  MlParty party("ml-corp", (dir.path / "state").string());
  party.ingest_dataset(path, ledger);
  CHECK(party.watch_once(ledger) == 0);  // nothing pending

  withdraw_for_real(chain, key, record);
  CHECK(party.watch_once(ledger) == 1);
  CHECK_FALSE(party.holds_tag(hash));

  // The cursor persisted: a fresh instance does not reprocess the event.
  MlParty reloaded("ml-corp", (dir.path / "state").string());
  CHECK(reloaded.watch_once(ledger) == 0);
}
