#include "fishnet/server.hpp"

#include <httplib.h>

#include <atomic>
#include <cctype>
#include <condition_variable>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fishnet/html.hpp"
#include "fishnet/keccak.hpp"

namespace fishnet::server {

using nlohmann::json;

// ---------------------------------------------------------------------------
// SiteStore

std::uint64_t SiteStore::save_datum(std::string content, std::string author,
                                    bool non_crawlable,
                                    std::int64_t created_at) {
  std::lock_guard lock(mutex_);
  std::uint64_t id = ++next_data_id_;
  data_[id] = StoredDatum{id,           std::move(content), std::move(author),
                          std::nullopt, non_crawlable,      created_at};
  ++mutations_;
  return id;
}

std::uint64_t SiteStore::link_consent(std::uint64_t data_id, std::string hash,
                                      std::string signature,
                                      consent::ConsentConfig config) {
  std::lock_guard lock(mutex_);
  auto it = data_.find(data_id);
  if (it == data_.end()) throw std::out_of_range("unknown data id");
  std::uint64_t id = ++next_consent_id_;
  consents_[id] = ConsentStoreEntry{id, data_id, std::move(hash),
                                    std::move(signature), std::move(config)};
  it->second.consent_id = id;
  ++mutations_;
  return id;
}

std::vector<SiteStore::DatumView> SiteStore::list() const {
  std::lock_guard lock(mutex_);
  std::vector<DatumView> out;
  out.reserve(data_.size());
  for (const auto& [id, datum] : data_) {
    DatumView view{datum, std::nullopt};
    if (datum.consent_id) view.consent = consents_.at(*datum.consent_id);
    out.push_back(std::move(view));
  }
  return out;
}

std::optional<SiteStore::DatumView> SiteStore::find_by_hash(
    const std::string& hash) const {
  std::lock_guard lock(mutex_);
  for (const auto& [id, entry] : consents_) {
    if (entry.hash == hash)
      return DatumView{data_.at(entry.data_id), entry};
  }
  return std::nullopt;
}

bool SiteStore::contains_hash(const std::string& hash) const {
  return find_by_hash(hash).has_value();
}

std::size_t SiteStore::erase_by_hash(const std::string& hash) {
  std::lock_guard lock(mutex_);
  std::size_t removed = 0;
  for (auto it = consents_.begin(); it != consents_.end();) {
    if (it->second.hash == hash) {
      data_.erase(it->second.data_id);
      it = consents_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  if (removed) ++mutations_;
  return removed;
}

std::size_t SiteStore::size() const {
  std::lock_guard lock(mutex_);
  return data_.size();
}

std::uint64_t SiteStore::mutation_count() const {
  std::lock_guard lock(mutex_);
  return mutations_;
}

// ---------------------------------------------------------------------------
// Visitor identification

VisitorClass identify_visitor(const RequestMeta& meta,
                              std::span<const CrawlerAgentConfig> registry,
                              std::int64_t now_seconds,
                              std::int64_t freshness_window_seconds) {
  const CrawlerAgentConfig* matched = nullptr;
  for (const auto& agent : registry) {
    if (!agent.user_agent_pattern.empty() &&
        meta.user_agent.find(agent.user_agent_pattern) != std::string::npos) {
      matched = &agent;
      break;
    }
  }
  if (!matched) return {VisitorClass::Kind::regular, "", "no pattern match"};

  auto ip = parse_ipv4(meta.remote_ip);
  bool in_range = false;
  if (ip) {
    for (const auto& range : matched->ip_ranges)
      if (range.contains(*ip)) in_range = true;
  }
  if (!in_range)
    return {VisitorClass::Kind::rejected, "",
            "pattern " + matched->name + " but IP " + meta.remote_ip +
                " outside registered ranges"};

  if (meta.crawler_timestamp || meta.crawler_signature) {
    if (!meta.crawler_timestamp || !meta.crawler_signature)
      return {VisitorClass::Kind::rejected, "",
              "incomplete crawler auth headers"};
    std::int64_t ts = 0;
    try {
      ts = std::stoll(*meta.crawler_timestamp);
    } catch (...) {
      return {VisitorClass::Kind::rejected, "", "unparseable timestamp"};
    }
    if (std::llabs(now_seconds - ts) > freshness_window_seconds)
      return {VisitorClass::Kind::rejected, "", "stale timestamp"};
    auto digest = keccak256(*meta.crawler_timestamp);
    if (!crypto::verify_digest_hex(matched->public_key_hex,
                                   digest_hex(digest),
                                   *meta.crawler_signature))
      return {VisitorClass::Kind::rejected, "", "bad timestamp signature"};
  }
  return {VisitorClass::Kind::crawler, matched->name,
          "pattern+ip" +
              std::string(meta.crawler_timestamp ? "+signature" : "")};
}

// ---------------------------------------------------------------------------
// Submission (Algorithm 1)

namespace {

std::optional<std::string> get_header(const SubmissionRequest& request,
                                      std::string_view name) {
  auto ieq = [](std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
             return std::tolower(static_cast<unsigned char>(x)) ==
                    std::tolower(static_cast<unsigned char>(y));
           });
  };
  for (const auto& [key, value] : request.headers)
    if (ieq(key, name)) return value;
  return std::nullopt;
}

}  // namespace

SubmissionResult handle_data_submission(SiteStore& store,
                                        const SubmissionRequest& request) {
  if (request.method != "POST" && request.method != "PUT" &&
      request.method != "PATCH")
    throw SubmissionRejected("method " + request.method +
                             " does not carry storable data");
  if (request.body.empty()) throw SubmissionRejected("empty body");

  auto hash = get_header(request, consent::kTagHashHeader);
  auto sig = get_header(request, consent::kTagSigHeader);
  auto config_text = get_header(request, consent::kConfigHeader);
  auto non_crawlable = get_header(request, consent::kNonCrawlableHeader);
  bool marked_non_crawlable = non_crawlable && *non_crawlable == "1";
  bool tagged = hash.has_value() || sig.has_value() || config_text.has_value();

  if (marked_non_crawlable && tagged)
    throw SubmissionRejected(
        "request carries both consent headers and the non-crawlable marker");
  if (tagged && (!hash || !sig))
    throw SubmissionRejected("incomplete consent tag headers");

  consent::ConsentConfig config;
  if (tagged) {
    if (config_text) {
      try {
        config = consent::parse_consent_config(*config_text);
      } catch (const consent::ConfigParseError& e) {
        throw SubmissionRejected(std::string("malformed consent config: ") +
                                 e.what());
      }
    }
    auto recomputed = digest_hex(keccak256(request.body));
    if (recomputed != *hash)
      throw SubmissionRejected("consent tag hash does not match body");
  }

  // The marker is stripped here: it never reaches storage or responses.
  std::uint64_t data_id = store.save_datum(request.body, request.author,
                                           marked_non_crawlable,
                                           request.now_seconds);
  SubmissionResult result{data_id, std::nullopt};
  if (tagged)
    result.consent_id = store.link_consent(data_id, *hash, *sig, config);
  return result;
}

// ---------------------------------------------------------------------------
// Serving (Algorithm 2)

std::string render_tagged_html(std::span<const consent::TaggedContent> items) {
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html>\n<head><title>posts</title></head>\n<body>\n"
      << "<div class=\"article-contents\">\n";
  for (const auto& item : items) {
    out << "  <p class=\"post-body\"";
    if (item.tag) {
      out << " " << consent::kHashAttribute << "=\"" << item.tag->hash_hex
          << "\" " << consent::kSigAttribute << "=\"" << item.tag->sig_hex
          << "\"";
    }
    out << ">" << html::escape(item.content) << "</p>\n";
  }
  out << "</div>\n</body>\n</html>\n";
  return out.str();
}

ServeResult handle_content_request(const SiteStore& store,
                                   const VisitorClass& visitor,
                                   ServeFormat format) {
  if (visitor.kind == VisitorClass::Kind::rejected)
    return {403, "text/plain", "", {}};

  ServeResult result;
  std::vector<consent::TaggedContent> items;
  for (const auto& view : store.list()) {
    if (visitor.kind == VisitorClass::Kind::crawler &&
        view.datum.non_crawlable)
      continue;
    consent::TaggedContent item;
    item.content = view.datum.content;
    if (visitor.kind == VisitorClass::Kind::crawler && view.consent) {
      if (consent::check_consent(view.consent->config,
                                 visitor.crawler_name) ==
          consent::Flag::allow) {
        item = consent::attach_tag(
            std::move(item),
            consent::ConsentTag{view.consent->hash, view.consent->signature});
        result.crawl_events.emplace_back(view.consent->hash,
                                         visitor.crawler_name);
      } else {
        item = consent::mask_content(std::move(item));
      }
    }
    // Regular visitors and untagged legacy data get plain content.
    items.push_back(std::move(item));
  }

  if (format == ServeFormat::html) {
    result.content_type = "text/html";
    result.body = render_tagged_html(items);
  } else {
    json posts = json::array();
    for (const auto& item : items) {
      json entry{{"content", item.content}};
      if (item.tag) {
        entry["consent_tag_hash"] = item.tag->hash_hex;
        entry["consent_tag_sig"] = item.tag->sig_hex;
      }
      if (item.masked) entry["masked"] = true;
      posts.push_back(std::move(entry));
    }
    result.content_type = "application/json";
    result.body = json{{"posts", posts}}.dump();
  }
  return result;
}

// ---------------------------------------------------------------------------
// HTTP server with ledger pump

struct ConsentServer::Impl {
  Impl(Options opts, ledger::LedgerClient* ledger_client)
      : options(std::move(opts)), ledger(ledger_client) {
    load_spool();
    wire_routes();
  }

  // --- spool (pending ledger uploads survive a restart) ---

  void load_spool() {
    if (options.spool_path.empty()) return;
    std::ifstream in(options.spool_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        auto j = json::parse(line);
        if (j.at("type") == "tag") {
          pending_batch.push_back({j.at("hash"), j.at("sig"),
                                   j.at("custodian")});
        } else {
          auto kind = ledger::event_kind_from_string(
              j.at("kind").get<std::string>());
          if (kind)
            pending_events.push_back({j.at("hash"), *kind, j.at("actor"),
                                      j.value("detail", std::string{})});
        }
      } catch (...) {
        // skip corrupt spool lines
      }
    }
  }

  void persist_spool() {
    if (options.spool_path.empty()) return;
    std::string tmp = options.spool_path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      for (const auto& item : pending_batch)
        out << json{{"type", "tag"},
                    {"hash", item.hash},
                    {"sig", item.signature},
                    {"custodian", item.custodian}}
                   .dump()
            << '\n';
      for (const auto& [hash, kind, actor, detail] : pending_events)
        out << json{{"type", "event"},
                    {"hash", hash},
                    {"kind", std::string(ledger::to_string(kind))},
                    {"actor", actor},
                    {"detail", detail}}
                   .dump()
            << '\n';
    }
    std::filesystem::rename(tmp, options.spool_path);
  }

  // --- request plumbing ---

  RequestMeta meta_from(const httplib::Request& req) {
    RequestMeta meta;
    meta.user_agent = req.get_header_value("User-Agent");
    meta.remote_ip = req.remote_addr;
    if (req.has_header("X-Crawler-Timestamp"))
      meta.crawler_timestamp = req.get_header_value("X-Crawler-Timestamp");
    if (req.has_header("X-Crawler-Sig"))
      meta.crawler_signature = req.get_header_value("X-Crawler-Sig");
    return meta;
  }

  VisitorClass classify(const httplib::Request& req) {
    auto snapshot = [this] {
      std::lock_guard lock(registry_mutex);
      return registry;
    }();
    return identify_visitor(meta_from(req), snapshot, std::time(nullptr),
                            options.freshness_window_seconds);
  }

  void log_access(const httplib::Request& req, const VisitorClass& visitor) {
    std::lock_guard lock(log_mutex);
    std::string who = visitor.kind == VisitorClass::Kind::crawler
                          ? visitor.crawler_name
                          : visitor.kind == VisitorClass::Kind::rejected
                                ? "rejected"
                                : "regular";
    access_log.push_back({req.path, req.get_header_value("User-Agent"), who,
                          std::time(nullptr)});
  }

  void enqueue_tag(const std::string& hash, const std::string& sig) {
    std::lock_guard lock(queue_mutex);
    pending_batch.push_back({hash, sig, options.party_id});
    persist_spool();
  }

  void enqueue_crawl_events(
      const std::vector<std::pair<std::string, std::string>>& events,
      const std::string& path) {
    if (events.empty()) return;
    std::lock_guard lock(queue_mutex);
    for (const auto& [hash, crawler] : events)
      pending_events.push_back(
          {hash, ledger::EventKind::crawl, crawler, path});
    persist_spool();
  }

  void serve_content(const httplib::Request& req, httplib::Response& res,
                     ServeFormat format) {
    auto visitor = classify(req);
    log_access(req, visitor);

    std::string cache_key =
        (format == ServeFormat::html ? "html|" : "json|") +
        (visitor.kind == VisitorClass::Kind::crawler ? visitor.crawler_name
         : visitor.kind == VisitorClass::Kind::rejected ? "!rejected"
                                                        : "!regular");
    if (options.cache_enabled) {
      std::lock_guard lock(cache_mutex);
      auto it = cache.find(cache_key);
      if (it != cache.end() && it->second.first == site.mutation_count()) {
        res.status = it->second.second.status;
        res.set_content(it->second.second.body,
                        it->second.second.content_type);
        return;
      }
    }

    auto result = handle_content_request(site, visitor, format);
    enqueue_crawl_events(result.crawl_events, req.path);
    if (options.cache_enabled) {
      std::lock_guard lock(cache_mutex);
      cache[cache_key] = {site.mutation_count(), result};
    }
    res.status = result.status;
    res.set_content(result.body, result.content_type);
  }

  void handle_get(const httplib::Request& req, httplib::Response& res) {
    if (req.path == "/robots.txt") {
      auto visitor = classify(req);
      log_access(req, visitor);
      res.set_content(robots::serve_robots(options.robots_policy),
                      "text/plain");
      return;
    }
    if (req.path == "/posts" || req.path.starts_with("/pages/")) {
      serve_content(req, res, ServeFormat::html);
      return;
    }
    if (req.path == "/api/posts") {
      serve_content(req, res, ServeFormat::json);
      return;
    }
    auto visitor = classify(req);
    log_access(req, visitor);
    res.status = 404;
    res.set_content("not found", "text/plain");
  }

  void handle_submit(const httplib::Request& req, httplib::Response& res) {
    SubmissionRequest submission;
    submission.method = req.method;
    submission.body = req.body;
    for (const auto& [key, value] : req.headers)
      submission.headers.emplace_back(key, value);
    if (req.has_header("X-Author"))
      submission.author = req.get_header_value("X-Author");
    submission.now_seconds = std::time(nullptr);

    try {
      auto result = handle_data_submission(site, submission);
      if (result.consent_id) {
        auto hash = get_header(submission, consent::kTagHashHeader);
        auto sig = get_header(submission, consent::kTagSigHeader);
        enqueue_tag(*hash, *sig);
      }
      json body{{"data_id", result.data_id}};
      if (result.consent_id) body["consent_id"] = *result.consent_id;
      res.set_content(body.dump(), "application/json");
    } catch (const SubmissionRejected& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  }

  void wire_routes() {
    auto submit = [this](const httplib::Request& req, httplib::Response& res) {
      handle_submit(req, res);
    };
    http.Post("/submit", submit);
    http.Put("/submit", submit);
    http.Patch("/submit", submit);
    http.Get(R"(/.*)", [this](const httplib::Request& req,
                              httplib::Response& res) {
      handle_get(req, res);
    });
  }

  // --- ledger pump ---

  void pump_once() {
    if (!ledger) return;
    // One cycle at a time: the background thread and explicit callers must
    // not interleave withdrawal handling.
    std::lock_guard pump_lock(pump_mutex);
    try {
      auto agents = ledger->agents();
      std::lock_guard lock(registry_mutex);
      registry = std::move(agents);
    } catch (const std::exception&) {
      // registry refresh is best-effort; keep the last snapshot
    }

    // Flush the tag batch first so crawl events rarely need lazy creation.
    std::vector<ledger::BatchItem> batch;
    {
      std::lock_guard lock(queue_mutex);
      batch = pending_batch;
    }
    if (!batch.empty()) {
      try {
        ledger->submit_tag_batch(batch);
        std::lock_guard lock(queue_mutex);
        pending_batch.erase(pending_batch.begin(),
                            pending_batch.begin() + batch.size());
        persist_spool();
      } catch (const std::exception&) {
        // retry next cycle
      }
    }

    for (;;) {
      std::tuple<std::string, ledger::EventKind, std::string, std::string>
          event;
      {
        std::lock_guard lock(queue_mutex);
        if (pending_events.empty()) break;
        event = pending_events.front();
      }
      try {
        ledger->append_event(std::get<0>(event), std::get<1>(event),
                             std::get<2>(event), std::get<3>(event));
      } catch (const ledger::TransportError&) {
        break;  // retry next cycle
      } catch (const ledger::LedgerError&) {
        // unknown tag et al. -- drop, nothing to retry
      }
      std::lock_guard lock(queue_mutex);
      pending_events.erase(pending_events.begin());
      persist_spool();
    }

    // Withdrawal notifications: delete held content and report completion.
    try {
      auto [events, high_water] =
          ledger->poll_events(ledger_cursor, options.party_id);
      for (const auto& event : events) {
        if (event.kind != ledger::EventKind::withdrawal_requested) continue;
        if (withdrawals_handled.contains(event.tag_hash)) continue;
        site.erase_by_hash(event.tag_hash);
        ledger->report_completion(event.tag_hash, options.party_id,
                                  ledger::CompletionAction::deletion);
        withdrawals_handled.insert(event.tag_hash);
      }
      ledger_cursor = high_water;
    } catch (const std::exception&) {
      // cursor not advanced; events re-examined next cycle
    }
  }

  bool queues_empty() {
    std::lock_guard lock(queue_mutex);
    return pending_batch.empty() && pending_events.empty();
  }

  Options options;
  ledger::LedgerClient* ledger;
  SiteStore site;
  httplib::Server http;
  std::thread http_thread;
  std::thread pump_thread;
  std::atomic<bool> pumping{false};

  std::mutex registry_mutex;
  std::vector<CrawlerAgentConfig> registry;

  std::mutex log_mutex;
  std::vector<AccessLogEntry> access_log;

  std::mutex queue_mutex;
  std::vector<ledger::BatchItem> pending_batch;
  std::vector<std::tuple<std::string, ledger::EventKind, std::string,
                         std::string>>
      pending_events;

  std::mutex pump_mutex;
  std::uint64_t ledger_cursor = 0;
  std::set<std::string> withdrawals_handled;

  std::mutex cache_mutex;
  std::map<std::string, std::pair<std::uint64_t, ServeResult>> cache;
};

ConsentServer::ConsentServer(Options options, ledger::LedgerClient* ledger)
    : impl_(std::make_unique<Impl>(std::move(options), ledger)) {}

ConsentServer::~ConsentServer() { stop(); }

int ConsentServer::start() {
  if (impl_->options.port == 0) {
    port_ = impl_->http.bind_to_any_port(impl_->options.host);
  } else {
    if (!impl_->http.bind_to_port(impl_->options.host, impl_->options.port))
      return -1;
    port_ = impl_->options.port;
  }
  impl_->http_thread =
      std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();

  impl_->pumping = true;
  impl_->pump_thread = std::thread([this] {
    while (impl_->pumping) {
      impl_->pump_once();
      std::this_thread::sleep_for(impl_->options.flush_interval);
    }
  });
  return port_;
}

void ConsentServer::stop() {
  if (!impl_) return;
  impl_->pumping = false;
  if (impl_->pump_thread.joinable()) impl_->pump_thread.join();
  if (impl_->http.is_running()) impl_->http.stop();
  if (impl_->http_thread.joinable()) impl_->http_thread.join();
}

std::string ConsentServer::base_url() const {
  return "http://" + impl_->options.host + ":" + std::to_string(port_);
}

SiteStore& ConsentServer::store() { return impl_->site; }

const ConsentServer::Options& ConsentServer::options() const {
  return impl_->options;
}

void ConsentServer::set_registry(std::vector<CrawlerAgentConfig> registry) {
  std::lock_guard lock(impl_->registry_mutex);
  impl_->registry = std::move(registry);
}

std::vector<CrawlerAgentConfig> ConsentServer::registry() const {
  std::lock_guard lock(impl_->registry_mutex);
  return impl_->registry;
}

std::vector<AccessLogEntry> ConsentServer::access_log() const {
  std::lock_guard lock(impl_->log_mutex);
  return impl_->access_log;
}

void ConsentServer::pump_once() { impl_->pump_once(); }

void ConsentServer::drain() {
  for (int i = 0; i < 200; ++i) {
    impl_->pump_once();
    if (impl_->queues_empty()) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

}  // namespace fishnet::server
