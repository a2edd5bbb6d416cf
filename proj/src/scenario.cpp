#include "fishnet/scenario.hpp"

#include <httplib.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <thread>

#include "fishnet/client_agent.hpp"
#include "fishnet/crawler.hpp"
#include "fishnet/dataset.hpp"
#include "fishnet/hex.hpp"
#include "fishnet/keccak.hpp"
#include "fishnet/ledger_service.hpp"
#include "fishnet/ml_pipeline.hpp"
#include "fishnet/server.hpp"

namespace fishnet::scenario {

namespace fs = std::filesystem;
using nlohmann::json;

void ScenarioSpec::validate() const {
  std::map<std::string, std::size_t> post_counts;
  for (const auto& user : users) post_counts[user.id] = user.posts.size();
  for (const auto& step : withdrawals) {
    auto it = post_counts.find(step.user_id);
    if (it == post_counts.end())
      throw ScenarioError("withdrawal references unknown user " +
                          step.user_id);
    if (step.post_index >= it->second)
      throw ScenarioError("withdrawal references post " +
                          std::to_string(step.post_index) + " of user " +
                          step.user_id + ", who has only " +
                          std::to_string(it->second));
  }
  std::set<std::string> ids;
  for (const auto& user : users)
    if (!ids.insert(user.id).second)
      throw ScenarioError("duplicate user id " + user.id);
}

ScenarioSpec ScenarioSpec::from_json(const json& j) {
  ScenarioSpec spec;
  for (const auto& u : j.at("users")) {
    UserSpec user;
    user.id = u.at("id").get<std::string>();
    user.config =
        consent::parse_consent_config(u.at("consent_config").get<std::string>());
    user.posts = u.at("posts").get<std::vector<std::string>>();
    spec.users.push_back(std::move(user));
  }
  spec.crawlers = j.at("crawlers").get<std::vector<std::string>>();
  spec.ml_parties = j.at("ml_parties").get<std::vector<std::string>>();
  for (const auto& w : j.value("withdrawals", json::array()))
    spec.withdrawals.push_back({w.at("user").get<std::string>(),
                                w.at("post").get<std::size_t>()});
  spec.seed = j.value("seed", 42ull);
  return spec;
}

json ScenarioSpec::to_json() const {
  json users_json = json::array();
  for (const auto& user : users)
    users_json.push_back(
        {{"id", user.id},
         {"consent_config", consent::serialize_consent_config(user.config)},
         {"posts", user.posts}});
  json withdrawals_json = json::array();
  for (const auto& step : withdrawals)
    withdrawals_json.push_back(
        {{"user", step.user_id}, {"post", step.post_index}});
  return {{"users", users_json},
          {"crawlers", crawlers},
          {"ml_parties", ml_parties},
          {"withdrawals", withdrawals_json},
          {"seed", seed}};
}

ScenarioSpec reference_spec() {
  ScenarioSpec spec;
  spec.users.push_back(
      {"alice",
       consent::parse_consent_config("GPTBot:0;Googlebot:1;default:0"),
       {"I really love this post.", "Sunsets over the harbour tonight."}});
  spec.users.push_back(
      {"bob",
       consent::parse_consent_config("default:0"),
       {"My sourdough finally rose.", "Thoughts on responsible crawling."}});
  spec.crawlers = {"Googlebot", "GPTBot"};
  spec.ml_parties = {"ml-corp"};
  spec.withdrawals = {{"alice", 0}};
  spec.seed = 42;
  return spec;
}

namespace {

// A scraped-dataset owner: holds the gzip file, becomes custodian via
// transfer events, and scrubs withdrawn tags from the file.
struct DatasetHolder {
  std::string party_id;
  std::string path;
  std::uint64_t cursor = 0;
  std::set<std::string> handled;

  void announce_transfers(ledger::LedgerClient& ledger) {
    for (const auto& record : dataset::read_dataset(path)) {
      if (record.consent_tag_hash)
        ledger.append_event(*record.consent_tag_hash,
                            ledger::EventKind::transfer, party_id,
                            "dataset handoff");
    }
  }

  std::size_t watch_once(ledger::LedgerClient& ledger) {
    auto [events, high_water] = ledger.poll_events(cursor, party_id);
    std::size_t acted = 0;
    for (const auto& event : events) {
      if (event.kind != ledger::EventKind::withdrawal_requested) continue;
      if (!handled.insert(event.tag_hash).second) continue;
      auto records = dataset::read_dataset(path);
      auto removed = std::erase_if(records, [&](const auto& record) {
        return record.consent_tag_hash == event.tag_hash;
      });
      if (removed) dataset::write_dataset(records, path);
      ledger.report_completion(event.tag_hash, party_id,
                               ledger::CompletionAction::deletion);
      ++acted;
    }
    cursor = high_water;
    return acted;
  }
};

bool chain_in_order(const std::vector<ledger::LedgerEvent>& events,
                    const std::vector<std::pair<ledger::EventKind,
                                                std::string>>& expected) {
  std::size_t pos = 0;
  for (const auto& event : events) {
    if (pos < expected.size() && event.kind == expected[pos].first &&
        event.actor == expected[pos].second)
      ++pos;
  }
  return pos == expected.size();
}

}  // namespace

ScenarioReport run_scenario(const ScenarioSpec& spec,
                            const std::string& workdir) {
  spec.validate();
  fs::create_directories(workdir);
  auto started = std::chrono::steady_clock::now();

  ScenarioReport report;
  auto fail = [&](const std::string& message) {
    report.failures.push_back(message);
  };

  ledger::Ledger chain(spec.seed);
  ledger::LedgerService ledger_http(chain);
  int ledger_port = ledger_http.start("127.0.0.1", 0);
  std::string ledger_url = "http://127.0.0.1:" + std::to_string(ledger_port);
  ledger::HttpLedgerClient admin(ledger_url);

  // Register crawler identities.
  std::map<std::string, crypto::KeyPair> crawler_keys;
  for (const auto& name : spec.crawlers) {
    auto key = crypto::generate_keypair("crawler:" + name + ":" +
                                        std::to_string(spec.seed));
    crawler_keys[name] = key;
    admin.register_agent({name,
                          name,
                          {*CidrBlock::parse("127.0.0.0/8")},
                          key.public_hex()});
  }

  // Web server with its own ledger connection.
  ledger::HttpLedgerClient server_ledger(ledger_url);
  server::ConsentServer::Options server_options;
  server_options.robots_policy = {{"*", {{false, "/private/"}}}};
  server_options.flush_interval = std::chrono::milliseconds(50);
  server::ConsentServer web(server_options, &server_ledger);
  web.start();

  // Users publish tagged posts over the wire.
  struct PostedItem {
    std::string user_id;
    std::size_t index;
    std::string content;
    std::string hash;
  };
  std::vector<PostedItem> posted;
  std::map<std::string, consent::ConsentConfig> user_configs;
  for (const auto& user : spec.users) {
    user_configs[user.id] = user.config;
    client::Keystore keystore((fs::path(workdir) / "users" / user.id).string());
    auto key = keystore.create_key(
        "main", "user:" + user.id + ":" + std::to_string(spec.seed));
    client::RecordStore records(keystore.records_path());
    client::AgentSettings settings{key, user.config};

    httplib::Client http(web.base_url());
    for (std::size_t i = 0; i < user.posts.size(); ++i) {
      client::HttpRequestModel model;
      model.method = "POST";
      model.url = web.base_url() + "/submit";
      model.headers = {{"X-Author", user.id}};
      model.body = user.posts[i];
      auto result =
          client::tag_outgoing_request(model, settings, std::time(nullptr));
      if (!result.record) {
        fail("post by " + user.id + " was not tagged");
        continue;
      }
      records.append(*result.record);
      httplib::Headers headers;
      for (const auto& [name, value] : result.request.headers)
        headers.emplace(name, value);
      auto res = http.Post("/submit", headers, result.request.body,
                           "text/plain");
      if (!res || res->status != 200) {
        fail("submission failed for " + user.id + " post " +
             std::to_string(i));
        continue;
      }
      posted.push_back({user.id, i, user.posts[i], result.record->hash});
    }
  }
  web.drain();  // consent tags batched onto the ledger

  // Crawls, one identity at a time; each dataset holder then becomes a
  // custodian via transfer events.
  std::vector<DatasetHolder> holders;
  std::map<std::string, std::vector<dataset::DatasetRecord>> crawled;
  ledger::HttpLedgerClient party_client(ledger_url);
  for (const auto& name : spec.crawlers) {
    crawler::CrawlSettings settings;
    settings.backoff.min_delay = std::chrono::milliseconds(10);
    auto crawl = crawler::crawl_site({web.base_url() + "/posts"},
                                     {name, crawler_keys[name]}, settings);
    std::string path =
        (fs::path(workdir) / "datasets" / (name + ".jsonl.gz")).string();
    fs::create_directories(fs::path(path).parent_path());
    dataset::write_dataset(crawl.records, path);
    crawled[name] = crawl.records;
    web.drain();  // crawl events on the ledger before transfer events
    DatasetHolder holder{name, path};
    holder.announce_transfers(party_client);
    holders.push_back(std::move(holder));
  }

  // ML ingestion.
  std::vector<std::unique_ptr<ml::MlParty>> parties;
  json ingest_json = json::object();
  for (const auto& party_id : spec.ml_parties) {
    auto party = std::make_unique<ml::MlParty>(
        party_id, (fs::path(workdir) / "ml" / party_id).string());
    json per_dataset = json::object();
    for (const auto& holder : holders) {
      auto summary = party->ingest_dataset(holder.path, party_client);
      per_dataset[holder.party_id] = {{"ingested", summary.ingested},
                                      {"duplicates", summary.duplicates},
                                      {"quarantined", summary.quarantined},
                                      {"skipped_masked",
                                       summary.skipped_masked}};
    }
    ingest_json[party_id] = std::move(per_dataset);
    parties.push_back(std::move(party));
  }

  // Scripted withdrawals.
  std::vector<std::string> withdrawn_hashes;
  json withdrawals_json = json::array();
  for (const auto& step : spec.withdrawals) {
    client::Keystore keystore(
        (fs::path(workdir) / "users" / step.user_id).string());
    client::RecordStore records(keystore.records_path());
    auto it = std::find_if(posted.begin(), posted.end(), [&](const auto& p) {
      return p.user_id == step.user_id && p.index == step.post_index;
    });
    if (it == posted.end()) {
      fail("withdrawal target was never posted");
      continue;
    }
    try {
      auto receipt =
          client::request_withdrawal(records, keystore, it->hash, admin);
      withdrawn_hashes.push_back(it->hash);
      withdrawals_json.push_back({{"user", step.user_id},
                                  {"post", step.post_index},
                                  {"repeated", receipt.repeated}});
    } catch (const std::exception& e) {
      fail(std::string("withdrawal failed: ") + e.what());
    }
  }

  // Quiescence: pump every custodian until the ledger high-water mark is
  // stable across three rounds.
  std::uint64_t last_high_water = 0;
  int stable_rounds = 0;
  for (int round = 0; round < 200 && stable_rounds < 3; ++round) {
    web.pump_once();
    for (auto& holder : holders) holder.watch_once(party_client);
    for (auto& party : parties) party->watch_once(party_client);
    auto [events, high_water] =
        admin.poll_events(0, std::nullopt, std::nullopt);
    (void)events;
    if (high_water == last_high_water) {
      ++stable_rounds;
    } else {
      stable_rounds = 0;
      last_high_water = high_water;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }

  // ------------------------------------------------------------------
  // Oracle checks. Everything below is recomputed from the spec alone.

  json crawlers_json = json::object();
  for (const auto& name : spec.crawlers) {
    std::multiset<std::string> expected_tagged;
    std::size_t expected_masked = 0;
    for (const auto& post : posted) {
      if (consent::check_consent(user_configs[post.user_id], name) ==
          consent::Flag::allow)
        expected_tagged.insert(post.content);
      else
        ++expected_masked;
    }

    std::multiset<std::string> actual_tagged;
    std::size_t actual_masked = 0;
    for (const auto& record : crawled[name]) {
      if (record.consent_tag_hash)
        actual_tagged.insert(record.content);
      else if (record.masked)
        ++actual_masked;
    }
    if (actual_tagged != expected_tagged)
      fail("consent filtering mismatch for crawler " + name);
    if (actual_masked != expected_masked)
      fail("masking count mismatch for crawler " + name + ": expected " +
           std::to_string(expected_masked) + ", got " +
           std::to_string(actual_masked));

    // Tag preservation through the crawl.
    for (const auto& record : crawled[name]) {
      if (!record.consent_tag_hash) continue;
      if (digest_hex(keccak256(record.content)) != *record.consent_tag_hash)
        fail("tag/content mismatch in dataset of " + name);
    }
    crawlers_json[name] = {{"tagged", actual_tagged.size()},
                           {"masked", actual_masked}};
  }

  // Journey completeness: crawl -> transfer -> training for each tag that an
  // allowed crawler served and an ML party ingested.
  for (const auto& post : posted) {
    for (const auto& crawler_name : spec.crawlers) {
      if (consent::check_consent(user_configs[post.user_id], crawler_name) !=
          consent::Flag::allow)
        continue;
      auto entry = admin.query_tag(post.hash);
      if (!entry) {
        fail("ledger has no entry for served tag of " + post.user_id);
        continue;
      }
      for (const auto& party_id : spec.ml_parties) {
        if (!chain_in_order(entry->events,
                            {{ledger::EventKind::crawl, crawler_name},
                             {ledger::EventKind::transfer, crawler_name},
                             {ledger::EventKind::training, party_id}}))
          fail("incomplete crawl->transfer->training chain for tag of " +
               post.user_id + " via " + crawler_name);
      }
    }
  }

  // Withdrawal effects.
  json withdrawal_state = json::array();
  for (const auto& hash : withdrawn_hashes) {
    auto entry = admin.query_tag(hash);
    if (!entry) {
      fail("withdrawn tag vanished from ledger");
      continue;
    }
    if (entry->withdrawal != ledger::WithdrawalState::completed)
      fail("withdrawal not completed for " + hash);
    for (const auto& custodian : entry->custodians) {
      bool reported = std::any_of(
          entry->events.begin(), entry->events.end(), [&](const auto& e) {
            return e.kind == ledger::EventKind::deletion_completed &&
                   e.actor == custodian;
          });
      if (!reported)
        fail("custodian " + custodian + " never reported deletion for " +
             hash);
    }
    if (!spec.ml_parties.empty()) {
      bool retrained = std::any_of(
          entry->events.begin(), entry->events.end(), [&](const auto& e) {
            return e.kind == ledger::EventKind::retraining_completed;
          });
      if (!retrained) fail("no retraining-completed logged for " + hash);
    }

    // Full-scan absence.
    if (web.store().contains_hash(hash))
      fail("withdrawn hash still in server store");
    for (const auto& holder : holders) {
      for (const auto& record : dataset::read_dataset(holder.path))
        if (record.consent_tag_hash == hash)
          fail("withdrawn hash still in dataset of " + holder.party_id);
    }
    for (const auto& party : parties) {
      if (party->holds_tag(hash))
        fail("withdrawn hash still in consent records of " +
             party->party_id());
      for (const auto& item : party->training_items())
        if (item.tag_hash == hash)
          fail("withdrawn hash still in training set of " +
               party->party_id());
    }
    withdrawal_state.push_back(
        {{"hash", hash},
         {"completed",
          entry->withdrawal == ledger::WithdrawalState::completed},
         {"custodians", entry->custodians}});
  }

  // Custodianship accuracy: ledger custodian sets vs actual holders.
  for (const auto& post : posted) {
    auto entry = admin.query_tag(post.hash);
    if (!entry) continue;
    bool withdrawn = std::count(withdrawn_hashes.begin(),
                                withdrawn_hashes.end(), post.hash) > 0;
    if (withdrawn) continue;  // custodian set is historical after deletion
    for (const auto& custodian : entry->custodians) {
      bool holds = false;
      if (custodian == web.options().party_id)
        holds = web.store().contains_hash(post.hash);
      for (const auto& holder : holders)
        if (holder.party_id == custodian)
          for (const auto& record : dataset::read_dataset(holder.path))
            if (record.consent_tag_hash == post.hash) holds = true;
      for (const auto& party : parties)
        if (party->party_id() == custodian && party->holds_tag(post.hash))
          holds = true;
      if (custodian == web.options().party_id &&
          web.store().contains_hash(post.hash))
        holds = true;
      if (!holds)
        fail("ledger lists custodian " + custodian + " for " + post.hash +
             " but that party does not hold it");
    }
  }

  web.stop();
  ledger_http.stop();

  report.details = {{"posts", posted.size()},
                    {"crawlers", crawlers_json},
                    {"ingest", ingest_json},
                    {"withdrawals", withdrawals_json},
                    {"withdrawal_state", withdrawal_state},
                    {"failures", report.failures}};
  report.timing = {
      {"wall_ms",
       std::chrono::duration_cast<std::chrono::milliseconds>(
           std::chrono::steady_clock::now() - started)
           .count()}};
  report.passed = report.failures.empty();
  return report;
}

}  // namespace fishnet::scenario
