#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fishnet/agents.hpp"
#include "fishnet/consent.hpp"
#include "fishnet/ledger_client.hpp"
#include "fishnet/robots.hpp"

namespace fishnet::server {

struct StoredDatum {
  std::uint64_t data_id = 0;
  std::string content;
  std::string author;
  std::optional<std::uint64_t> consent_id;
  bool non_crawlable = false;
  std::int64_t created_at = 0;
};

struct ConsentStoreEntry {
  std::uint64_t consent_id = 0;
  std::uint64_t data_id = 0;
  std::string hash;
  std::string signature;
  consent::ConsentConfig config;
};

// Embedded store for data plus linked consent entries. Datum and consent
// linkage is atomic per submission (single lock).
class SiteStore {
 public:
  struct DatumView {
    StoredDatum datum;
    std::optional<ConsentStoreEntry> consent;
  };

  std::uint64_t save_datum(std::string content, std::string author,
                           bool non_crawlable, std::int64_t created_at);
  std::uint64_t link_consent(std::uint64_t data_id, std::string hash,
                             std::string signature,
                             consent::ConsentConfig config);

  std::vector<DatumView> list() const;
  std::optional<DatumView> find_by_hash(const std::string& hash) const;
  bool contains_hash(const std::string& hash) const;
  // Removes every datum whose consent hash matches. Returns removed count.
  std::size_t erase_by_hash(const std::string& hash);
  std::size_t size() const;
  std::uint64_t mutation_count() const;

 private:
  mutable std::mutex mutex_;
  std::uint64_t next_data_id_ = 0;
  std::uint64_t next_consent_id_ = 0;
  std::uint64_t mutations_ = 0;
  std::map<std::uint64_t, StoredDatum> data_;
  std::map<std::uint64_t, ConsentStoreEntry> consents_;  // by consent_id
};

struct RequestMeta {
  std::string user_agent;
  std::string remote_ip;
  std::optional<std::string> crawler_timestamp;  // unix seconds, decimal
  std::optional<std::string> crawler_signature;  // over keccak256(timestamp)
};

struct VisitorClass {
  enum class Kind { regular, crawler, rejected };
  Kind kind = Kind::regular;
  std::string crawler_name;  // set when kind == crawler
  std::string evidence;
};

// Classification is total: pattern+IP+signature all good -> crawler; pattern
// matched but IP or signature check failed -> rejected; no pattern -> regular.
VisitorClass identify_visitor(const RequestMeta& meta,
                              std::span<const CrawlerAgentConfig> registry,
                              std::int64_t now_seconds,
                              std::int64_t freshness_window_seconds = 120);

struct SubmissionRequest {
  std::string method;  // POST | PUT | PATCH
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string author = "anon";
  std::int64_t now_seconds = 0;
};

struct SubmissionResult {
  std::uint64_t data_id = 0;
  std::optional<std::uint64_t> consent_id;
};

struct SubmissionRejected : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Algorithm-1 path: persist the datum; verify and link consent headers when
// present; honor (and strip) the non-crawlable marker. Throws
// SubmissionRejected on hash mismatch, malformed config, or a request that
// carries both consent headers and the non-crawlable marker.
SubmissionResult handle_data_submission(SiteStore& store,
                                        const SubmissionRequest& request);

struct ServeResult {
  int status = 200;
  std::string content_type;
  std::string body;
  // (tag hash, crawler name) pairs to be logged as crawl events.
  std::vector<std::pair<std::string, std::string>> crawl_events;
};

enum class ServeFormat { html, json };

// Algorithm-2 path: filter, mask, or tag-inject per visitor class.
ServeResult handle_content_request(const SiteStore& store,
                                   const VisitorClass& visitor,
                                   ServeFormat format);

std::string render_tagged_html(std::span<const consent::TaggedContent> items);

struct AccessLogEntry {
  std::string path;
  std::string user_agent;
  std::string visitor;  // "regular" | "rejected" | crawler name
  std::int64_t time = 0;
};

// The HTTP server: POST /submit, GET /posts, GET /api/posts, GET /robots.txt.
// Ledger traffic (tag batches, crawl events, withdrawal handling) runs on a
// background pump so a ledger outage never blocks serving.
class ConsentServer {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 0;
    std::string party_id = "web-server";
    std::vector<robots::SitePolicyGroup> robots_policy;
    std::chrono::milliseconds flush_interval{100};
    std::int64_t freshness_window_seconds = 120;
    bool cache_enabled = false;
    std::string spool_path;  // pending ledger uploads survive restarts
  };

  ConsentServer(Options options, ledger::LedgerClient* ledger);
  ~ConsentServer();

  int start();
  void stop();
  int port() const { return port_; }
  std::string base_url() const;

  SiteStore& store();
  const Options& options() const;

  // Registry snapshot management; the pump refreshes from the ledger.
  void set_registry(std::vector<CrawlerAgentConfig> registry);
  std::vector<CrawlerAgentConfig> registry() const;

  std::vector<AccessLogEntry> access_log() const;

  // One pump cycle: refresh registry, flush tag batch + crawl events,
  // process withdrawal notifications. Exposed for deterministic tests.
  void pump_once();
  // Blocks until every queued upload is acknowledged by the ledger.
  void drain();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace fishnet::server
