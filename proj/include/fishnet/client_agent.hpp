#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fishnet/consent.hpp"
#include "fishnet/crypto.hpp"
#include "fishnet/ledger_client.hpp"

namespace fishnet::client {

struct AgentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kKeystoreEnv = "FISHNET_KEYSTORE";

// Named P-384 key pairs in a directory (one `<id>.key` file holding the
// private scalar in hex) plus the local consent record file.
class Keystore {
 public:
  explicit Keystore(std::string directory);

  crypto::KeyPair create_key(const std::string& id,
                             std::optional<std::string> seed = std::nullopt);
  std::optional<crypto::KeyPair> load_key(const std::string& id) const;
  std::optional<crypto::KeyPair> find_by_public_hex(
      const std::string& public_hex) const;
  std::vector<std::string> key_ids() const;

  std::string records_path() const;
  const std::string& directory() const { return directory_; }

 private:
  std::string directory_;
};

// One line of the local record file. Field names are the file contract:
// hash, sig, pubkey, consent_config, url, method, ts.
struct LocalConsentRecord {
  std::string hash;
  std::string sig;
  std::string pubkey;
  std::string consent_config;
  std::string url;
  std::string method;
  std::int64_t ts = 0;

  bool operator==(const LocalConsentRecord&) const = default;
};

struct RecordFilter {
  std::optional<std::string> url_substring;
  std::optional<std::int64_t> from_ts;
  std::optional<std::int64_t> to_ts;
};

struct RecordListing {
  std::vector<LocalConsentRecord> records;  // newest first
  std::size_t skipped_lines = 0;            // corrupt lines, never fatal
};

// Append-only JSON-lines store; single writer, any number of readers.
class RecordStore {
 public:
  explicit RecordStore(std::string path);

  void append(const LocalConsentRecord& record);
  RecordListing list(const RecordFilter& filter = {}) const;
  std::optional<LocalConsentRecord> find_by_hash(
      const std::string& hash) const;

 private:
  std::string path_;
};

struct HttpRequestModel {
  std::string method;
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;

  bool operator==(const HttpRequestModel&) const = default;
};

struct AgentSettings {
  crypto::KeyPair key;
  consent::ConsentConfig config;
};

struct TagResult {
  HttpRequestModel request;
  std::optional<LocalConsentRecord> record;
};

// Algorithm-3 transform. Tags POST/PUT/PATCH requests that carry a body and
// no non-crawlable marker; everything else passes through byte-identical.
// Never touches the body.
TagResult tag_outgoing_request(const HttpRequestModel& request,
                               const AgentSettings& settings,
                               std::int64_t now_seconds);

struct JourneyReport {
  std::string tag_hash;
  std::vector<ledger::LedgerEvent> events;  // sequence-ordered
};

// Throws AgentError when the hash is not in the local store.
JourneyReport track_journey(const RecordStore& store,
                            const std::string& tag_hash,
                            ledger::LedgerClient& ledger);

struct WithdrawalReceipt {
  std::uint64_t seq = 0;
  bool repeated = false;  // idempotent repeat referencing the original
};

// Challenge-response withdrawal: S_c = sign(K_pri, keccak256(nonce)).
// Ledger rejections surface verbatim as AgentError.
WithdrawalReceipt request_withdrawal(const RecordStore& store,
                                     const Keystore& keystore,
                                     const std::string& tag_hash,
                                     ledger::LedgerClient& ledger);

// Forward-proxy packaging of the tag transform, for unmodified HTTP clients.
class TaggingProxy {
 public:
  TaggingProxy(AgentSettings settings, std::string records_path);
  ~TaggingProxy();

  int start(const std::string& host, int port);  // port 0 = ephemeral
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace fishnet::client
