#include "fishnet/client_agent.hpp"

#include <httplib.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "fishnet/hex.hpp"
#include "fishnet/keccak.hpp"

namespace fishnet::client {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Keystore

Keystore::Keystore(std::string directory) : directory_(std::move(directory)) {
  fs::create_directories(directory_);
}

crypto::KeyPair Keystore::create_key(const std::string& id,
                                     std::optional<std::string> seed) {
  auto key = seed ? crypto::generate_keypair(*seed)
                  : crypto::generate_keypair();
  std::ofstream out(fs::path(directory_) / (id + ".key"), std::ios::trunc);
  if (!out) throw AgentError("cannot write key file for " + id);
  out << key.private_hex() << '\n';
  return key;
}

std::optional<crypto::KeyPair> Keystore::load_key(const std::string& id) const {
  std::ifstream in(fs::path(directory_) / (id + ".key"));
  if (!in) return std::nullopt;
  std::string hex;
  in >> hex;
  return crypto::KeyPair::from_private_hex(hex);
}

std::optional<crypto::KeyPair> Keystore::find_by_public_hex(
    const std::string& public_hex) const {
  for (const auto& id : key_ids()) {
    auto key = load_key(id);
    if (key && key->public_hex() == public_hex) return key;
  }
  return std::nullopt;
}

std::vector<std::string> Keystore::key_ids() const {
  std::vector<std::string> ids;
  if (!fs::exists(directory_)) return ids;
  for (const auto& entry : fs::directory_iterator(directory_)) {
    if (entry.path().extension() == ".key")
      ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string Keystore::records_path() const {
  return (fs::path(directory_) / "records.jsonl").string();
}

// ---------------------------------------------------------------------------
// RecordStore

RecordStore::RecordStore(std::string path) : path_(std::move(path)) {}

void RecordStore::append(const LocalConsentRecord& record) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw AgentError("cannot append to record store " + path_);
  ordered_json j;
  j["hash"] = record.hash;
  j["sig"] = record.sig;
  j["pubkey"] = record.pubkey;
  j["consent_config"] = record.consent_config;
  j["url"] = record.url;
  j["method"] = record.method;
  j["ts"] = record.ts;
  out << j.dump() << '\n';
}

RecordListing RecordStore::list(const RecordFilter& filter) const {
  RecordListing listing;
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LocalConsentRecord record;
    try {
      auto j = json::parse(line);
      record.hash = j.at("hash").get<std::string>();
      record.sig = j.at("sig").get<std::string>();
      record.pubkey = j.at("pubkey").get<std::string>();
      record.consent_config = j.at("consent_config").get<std::string>();
      record.url = j.at("url").get<std::string>();
      record.method = j.at("method").get<std::string>();
      record.ts = j.at("ts").get<std::int64_t>();
    } catch (...) {
      ++listing.skipped_lines;
      continue;
    }
    if (filter.url_substring &&
        record.url.find(*filter.url_substring) == std::string::npos)
      continue;
    if (filter.from_ts && record.ts < *filter.from_ts) continue;
    if (filter.to_ts && record.ts > *filter.to_ts) continue;
    listing.records.push_back(std::move(record));
  }
  std::stable_sort(listing.records.begin(), listing.records.end(),
                   [](const auto& a, const auto& b) { return a.ts > b.ts; });
  return listing;
}

std::optional<LocalConsentRecord> RecordStore::find_by_hash(
    const std::string& hash) const {
  for (const auto& record : list().records)
    if (record.hash == hash) return record;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Tag transform (Algorithm 3)

TagResult tag_outgoing_request(const HttpRequestModel& request,
                               const AgentSettings& settings,
                               std::int64_t now_seconds) {
  bool in_scope = request.method == "POST" || request.method == "PUT" ||
                  request.method == "PATCH";
  bool non_crawlable = false;
  for (const auto& [name, value] : request.headers)
    if (name == consent::kNonCrawlableHeader && value == "1")
      non_crawlable = true;

  if (!in_scope || non_crawlable || request.body.empty())
    return {request, std::nullopt};

  auto digest = keccak256(request.body);
  auto hash = digest_hex(digest);
  auto sig = hex_encode(crypto::sign_digest(settings.key, digest));
  auto config = consent::serialize_consent_config(settings.config);

  HttpRequestModel tagged = request;
  tagged.headers.emplace_back(consent::kTagHashHeader, hash);
  tagged.headers.emplace_back(consent::kTagSigHeader, sig);
  tagged.headers.emplace_back(consent::kConfigHeader, config);

  LocalConsentRecord record{hash,        sig,
                            settings.key.public_hex(), config,
                            request.url, request.method,
                            now_seconds};
  return {std::move(tagged), std::move(record)};
}

// ---------------------------------------------------------------------------
// Journey + withdrawal

JourneyReport track_journey(const RecordStore& store,
                            const std::string& tag_hash,
                            ledger::LedgerClient& ledger) {
  if (!store.find_by_hash(tag_hash))
    throw AgentError("unknown tag: " + tag_hash + " is not in local records");
  JourneyReport report;
  report.tag_hash = tag_hash;
  auto entry = ledger.query_tag(tag_hash);
  if (entry) report.events = entry->events;
  return report;
}

WithdrawalReceipt request_withdrawal(const RecordStore& store,
                                     const Keystore& keystore,
                                     const std::string& tag_hash,
                                     ledger::LedgerClient& ledger) {
  auto record = store.find_by_hash(tag_hash);
  if (!record)
    throw AgentError("unknown tag: " + tag_hash + " is not in local records");
  auto key = keystore.find_by_public_hex(record->pubkey);
  if (!key)
    throw AgentError("no usable key for public key " + record->pubkey);

  auto prior = ledger.query_tag(tag_hash);
  bool already_requested =
      prior && prior->withdrawal != ledger::WithdrawalState::none;

  auto challenge = ledger.issue_challenge();
  auto nonce = hex_decode(challenge.nonce_hex);
  if (!nonce) throw AgentError("malformed challenge nonce from ledger");
  auto nonce_digest = keccak256(std::span<const std::uint8_t>(*nonce));
  auto challenge_sig = hex_encode(crypto::sign_digest(*key, nonce_digest));

  ledger::WithdrawalRequest request{tag_hash, record->sig, record->pubkey,
                                    challenge.id, challenge_sig};
  auto outcome = ledger.submit_withdrawal(request);
  if (!outcome.accepted)
    throw AgentError("withdrawal rejected: " + outcome.reason);

  return {outcome.seq, already_requested};
}

// ---------------------------------------------------------------------------
// Forward proxy

struct TaggingProxy::Impl {
  Impl(AgentSettings s, std::string records_path)
      : settings(std::move(s)), records(std::move(records_path)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      forward(req, res);
    };
    http.Get(R"(.*)", handler);
    http.Post(R"(.*)", handler);
    http.Put(R"(.*)", handler);
    http.Patch(R"(.*)", handler);
    http.Delete(R"(.*)", handler);
  }

  // Splits an absolute-form target into origin and path.
  static bool split_url(const std::string& target, std::string& origin,
                        std::string& path) {
    auto scheme_end = target.find("://");
    if (scheme_end == std::string::npos) return false;
    auto path_start = target.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      origin = target;
      path = "/";
    } else {
      origin = target.substr(0, path_start);
      path = target.substr(path_start);
    }
    return true;
  }

  void forward(const httplib::Request& req, httplib::Response& res) {
    std::string origin, path;
    std::string target = req.target.empty() ? req.path : req.target;
    if (!split_url(target, origin, path)) {
      res.status = 400;
      res.set_content("proxy requires absolute-form request target",
                      "text/plain");
      return;
    }

    HttpRequestModel model;
    model.method = req.method;
    model.url = target;
    model.body = req.body;
    for (const auto& [name, value] : req.headers) {
      // Hop-by-hop and transport headers are regenerated by the client.
      if (name == "Host" || name == "Connection" || name == "Content-Length" ||
          name == "Accept-Encoding" || name == "REMOTE_ADDR" ||
          name == "REMOTE_PORT" || name == "LOCAL_ADDR" ||
          name == "LOCAL_PORT" || name == "Proxy-Connection")
        continue;
      model.headers.emplace_back(name, value);
    }

    auto result = tag_outgoing_request(model, settings, std::time(nullptr));
    if (result.record) records.append(*result.record);

    httplib::Client upstream(origin);
    upstream.set_connection_timeout(5);
    upstream.set_read_timeout(10);
    httplib::Headers headers;
    for (const auto& [name, value] : result.request.headers)
      headers.emplace(name, value);

    httplib::Result upstream_res;
    const std::string& body = result.request.body;
    std::string content_type = req.get_header_value("Content-Type");
    if (req.method == "GET") {
      upstream_res = upstream.Get(path, headers);
    } else if (req.method == "POST") {
      upstream_res = upstream.Post(path, headers, body, content_type);
    } else if (req.method == "PUT") {
      upstream_res = upstream.Put(path, headers, body, content_type);
    } else if (req.method == "PATCH") {
      upstream_res = upstream.Patch(path, headers, body, content_type);
    } else if (req.method == "DELETE") {
      upstream_res = upstream.Delete(path, headers, body, content_type);
    } else {
      res.status = 405;
      return;
    }

    if (!upstream_res) {
      res.status = 502;
      res.set_content("upstream unreachable", "text/plain");
      return;
    }
    res.status = upstream_res->status;
    for (const auto& [name, value] : upstream_res->headers) {
      if (name == "Content-Length" || name == "Transfer-Encoding") continue;
      res.set_header(name, value);
    }
    res.set_content(upstream_res->body,
                    upstream_res->get_header_value("Content-Type"));
  }

  AgentSettings settings;
  RecordStore records;
  httplib::Server http;
  std::thread thread;
};

TaggingProxy::TaggingProxy(AgentSettings settings, std::string records_path)
    : impl_(std::make_unique<Impl>(std::move(settings),
                                   std::move(records_path))) {}

TaggingProxy::~TaggingProxy() { stop(); }

int TaggingProxy::start(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->http.bind_to_any_port(host);
  } else {
    if (!impl_->http.bind_to_port(host, port)) return -1;
    port_ = port;
  }
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return port_;
}

void TaggingProxy::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
  if (impl_ && impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace fishnet::client
