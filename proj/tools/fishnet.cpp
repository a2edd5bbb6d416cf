// fishnet: consent-tagging toolkit CLI.
//
// One binary, many roles: user-side commands (keygen, config, post, track,
// withdraw, proxy), party daemons (serve, ledger, crawl, ingest, watch,
// register-agent), the end-to-end scenario runner, and two micro-benchmarks.
//
// Exit codes: 0 success, 1 runtime/invariant failure, 2 usage error.

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "fishnet/bench.hpp"
#include "fishnet/client_agent.hpp"
#include "fishnet/crawler.hpp"
#include "fishnet/dataset.hpp"
#include "fishnet/hex.hpp"
#include "fishnet/keccak.hpp"
#include "fishnet/ledger_service.hpp"
#include "fishnet/ml_pipeline.hpp"
#include "fishnet/scenario.hpp"
#include "fishnet/server.hpp"

using nlohmann::json;
namespace fn = fishnet;

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop = true; }

void wait_for_signal() {
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value ? value : fallback;
}

fn::crypto::KeyPair require_key(const std::string& keystore_dir,
                                const std::string& key_id) {
  fn::client::Keystore keystore(keystore_dir);
  auto key = keystore.load_key(key_id);
  if (!key)
    throw fn::client::AgentError("no key '" + key_id + "' in keystore " +
                                 keystore_dir);
  return *key;
}

std::vector<fn::robots::SitePolicyGroup> parse_robots_rules(
    const std::vector<std::string>& specs) {
  // Each spec: "<agent>:allow|disallow:<path>", e.g. "*:disallow:/private/".
  std::map<std::string, std::vector<fn::robots::RobotsRule>> by_agent;
  std::vector<std::string> order;
  for (const auto& spec : specs) {
    auto first = spec.find(':');
    auto second = spec.find(':', first == std::string::npos ? 0 : first + 1);
    if (first == std::string::npos || second == std::string::npos)
      throw CLI::ValidationError("--robots", "expected agent:allow|disallow:path");
    std::string agent = spec.substr(0, first);
    std::string verb = spec.substr(first + 1, second - first - 1);
    std::string path = spec.substr(second + 1);
    if (verb != "allow" && verb != "disallow")
      throw CLI::ValidationError("--robots", "verb must be allow or disallow");
    if (!by_agent.contains(agent)) order.push_back(agent);
    by_agent[agent].push_back({verb == "allow", path});
  }
  std::vector<fn::robots::SitePolicyGroup> policy;
  for (const auto& agent : order) policy.push_back({agent, by_agent[agent]});
  return policy;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consent-tagging toolkit: tag, serve, crawl, ledger, withdraw"};
  app.require_subcommand(1);

  std::string keystore_dir = env_or(fn::client::kKeystoreEnv, "keystore");
  std::string ledger_url = env_or("FISHNET_LEDGER", "http://127.0.0.1:9470");

  // ---- keygen ----
  auto* keygen = app.add_subcommand("keygen", "Create a named P-384 key pair");
  std::string kg_id = "main", kg_seed;
  keygen->add_option("--keystore", keystore_dir, "Keystore directory")
      ->envname(fn::client::kKeystoreEnv);
  keygen->add_option("--id", kg_id, "Key id");
  keygen->add_option("--seed", kg_seed, "Deterministic seed (testing only)");
  keygen->callback([&] {
    fn::client::Keystore keystore(keystore_dir);
    auto key = keystore.create_key(
        kg_id, kg_seed.empty() ? std::nullopt
                               : std::optional<std::string>(kg_seed));
    std::cout << json{{"id", kg_id}, {"public_key", key.public_hex()}}.dump(2)
              << "\n";
  });

  // ---- config ----
  auto* config_cmd =
      app.add_subcommand("config", "Parse and canonicalize a consent config");
  std::string cfg_text, cfg_crawler;
  config_cmd->add_option("config", cfg_text, "e.g. \"GPTBot:0;default:1\"")
      ->required();
  config_cmd->add_option("--crawler", cfg_crawler,
                         "Also evaluate the decision for this crawler");
  config_cmd->callback([&] {
    auto config = fn::consent::parse_consent_config(cfg_text);
    json out{{"canonical", fn::consent::serialize_consent_config(config)}};
    if (!cfg_crawler.empty())
      out["decision"] =
          fn::consent::check_consent(config, cfg_crawler) ==
                  fn::consent::Flag::allow
              ? "allow"
              : "deny";
    std::cout << out.dump(2) << "\n";
  });

  // ---- post ----
  auto* post = app.add_subcommand(
      "post", "Send a consent-tagged POST and record the tag locally");
  std::string post_url, post_body, post_file, post_config = "default:1",
                                              post_key = "main";
  post->add_option("--url", post_url, "Target URL")->required();
  post->add_option("--body", post_body, "Inline body");
  post->add_option("--file", post_file, "Read body from file");
  post->add_option("--config", post_config, "Consent config header value");
  post->add_option("--keystore", keystore_dir, "Keystore directory")
      ->envname(fn::client::kKeystoreEnv);
  post->add_option("--key", post_key, "Key id");
  post->callback([&] {
    if (!post_file.empty()) {
      std::ifstream in(post_file, std::ios::binary);
      if (!in) throw CLI::ValidationError("--file", "cannot read " + post_file);
      post_body.assign(std::istreambuf_iterator<char>(in), {});
    }
    fn::client::Keystore keystore(keystore_dir);
    fn::client::RecordStore records(keystore.records_path());
    fn::client::AgentSettings settings{
        require_key(keystore_dir, post_key),
        fn::consent::parse_consent_config(post_config)};
    fn::client::HttpRequestModel model;
    model.method = "POST";
    model.url = post_url;
    model.body = post_body;
    auto result =
        fn::client::tag_outgoing_request(model, settings, std::time(nullptr));

    auto scheme_end = post_url.find("://");
    auto path_start = post_url.find('/', scheme_end == std::string::npos
                                             ? 0
                                             : scheme_end + 3);
    std::string origin = path_start == std::string::npos
                             ? post_url
                             : post_url.substr(0, path_start);
    std::string path =
        path_start == std::string::npos ? "/" : post_url.substr(path_start);
    httplib::Client http(origin);
    httplib::Headers headers;
    for (const auto& [name, value] : result.request.headers)
      headers.emplace(name, value);
    auto res = http.Post(path, headers, result.request.body, "text/plain");
    if (!res) throw std::runtime_error("no response from " + origin);
    if (result.record) records.append(*result.record);
    json out{{"status", res->status}};
    if (result.record) out["tag_hash"] = result.record->hash;
    std::cout << out.dump(2) << "\n";
    if (res->status >= 400) throw std::runtime_error("server rejected: " + res->body);
  });

  // ---- track ----
  auto* track = app.add_subcommand(
      "track", "Show the ledger journey of one of your tags");
  std::string track_hash;
  track->add_option("--hash", track_hash, "Consent tag hash")->required();
  track->add_option("--keystore", keystore_dir, "Keystore directory")
      ->envname(fn::client::kKeystoreEnv);
  track->add_option("--ledger", ledger_url, "Ledger URL")
      ->envname("FISHNET_LEDGER");
  track->callback([&] {
    fn::client::Keystore keystore(keystore_dir);
    fn::client::RecordStore records(keystore.records_path());
    fn::ledger::HttpLedgerClient ledger(ledger_url);
    auto journey = fn::client::track_journey(records, track_hash, ledger);
    json events = json::array();
    for (const auto& event : journey.events)
      events.push_back({{"seq", event.seq},
                        {"kind", std::string(fn::ledger::to_string(event.kind))},
                        {"actor", event.actor},
                        {"detail", event.detail}});
    std::cout << json{{"tag_hash", journey.tag_hash}, {"events", events}}.dump(2)
              << "\n";
  });

  // ---- withdraw ----
  auto* withdraw =
      app.add_subcommand("withdraw", "Request verifiable consent withdrawal");
  std::string wd_hash;
  withdraw->add_option("--hash", wd_hash, "Consent tag hash")->required();
  withdraw->add_option("--keystore", keystore_dir, "Keystore directory")
      ->envname(fn::client::kKeystoreEnv);
  withdraw->add_option("--ledger", ledger_url, "Ledger URL")
      ->envname("FISHNET_LEDGER");
  withdraw->callback([&] {
    fn::client::Keystore keystore(keystore_dir);
    fn::client::RecordStore records(keystore.records_path());
    fn::ledger::HttpLedgerClient ledger(ledger_url);
    auto receipt =
        fn::client::request_withdrawal(records, keystore, wd_hash, ledger);
    std::cout << json{{"seq", receipt.seq}, {"repeated", receipt.repeated}}
                     .dump(2)
              << "\n";
  });

  // ---- proxy ----
  auto* proxy = app.add_subcommand(
      "proxy", "Forward proxy that tags outgoing requests transparently");
  std::string px_host = "127.0.0.1", px_config = "default:1",
              px_key = "main";
  int px_port = 8888;
  proxy->add_option("--host", px_host, "Listen host");
  proxy->add_option("--port", px_port, "Listen port");
  proxy->add_option("--config", px_config, "Consent config header value");
  proxy->add_option("--keystore", keystore_dir, "Keystore directory")
      ->envname(fn::client::kKeystoreEnv);
  proxy->add_option("--key", px_key, "Key id");
  proxy->callback([&] {
    fn::client::Keystore keystore(keystore_dir);
    fn::client::AgentSettings settings{
        require_key(keystore_dir, px_key),
        fn::consent::parse_consent_config(px_config)};
    fn::client::TaggingProxy server(settings, keystore.records_path());
    int port = server.start(px_host, px_port);
    std::cout << "tagging proxy on " << px_host << ":" << port << "\n";
    wait_for_signal();
    server.stop();
  });

  // ---- serve ----
  auto* serve =
      app.add_subcommand("serve", "Consent-enforcing web server daemon");
  fn::server::ConsentServer::Options srv;
  std::vector<std::string> srv_robots = {"*:disallow:/private/"};
  serve->add_option("--host", srv.host, "Listen host");
  serve->add_option("--port", srv.port, "Listen port (0 = ephemeral)");
  serve->add_option("--party-id", srv.party_id, "Custodian id on the ledger");
  serve->add_option("--ledger", ledger_url, "Ledger URL")
      ->envname("FISHNET_LEDGER");
  serve->add_option("--robots", srv_robots,
                    "Robots rule agent:allow|disallow:path (repeatable)");
  serve->add_option("--spool", srv.spool_path,
                    "Spool file for pending ledger uploads");
  serve->add_flag("--cache", srv.cache_enabled, "Enable the response cache");
  serve->callback([&] {
    srv.robots_policy = parse_robots_rules(srv_robots);
    fn::ledger::HttpLedgerClient ledger(ledger_url);
    fn::server::ConsentServer server(srv, &ledger);
    int port = server.start();
    std::cout << "consent server on " << srv.host << ":" << port
              << " (ledger " << ledger_url << ")\n";
    wait_for_signal();
    server.stop();
  });

  // ---- ledger ----
  auto* ledger_cmd =
      app.add_subcommand("ledger", "Single-node consent ledger daemon");
  std::string lg_host = "127.0.0.1";
  int lg_port = 9470;
  std::uint64_t lg_seed = 0;
  bool lg_seeded = false;
  ledger_cmd->add_option("--host", lg_host, "Listen host");
  ledger_cmd->add_option("--port", lg_port, "Listen port (0 = ephemeral)");
  ledger_cmd->add_option("--seed", lg_seed, "Challenge-nonce RNG seed")
      ->each([&](const std::string&) { lg_seeded = true; });
  ledger_cmd->callback([&] {
    fn::ledger::Ledger chain(lg_seeded ? std::optional(lg_seed) : std::nullopt);
    fn::ledger::LedgerService service(chain);
    int port = service.start(lg_host, lg_port);
    std::cout << "ledger on " << lg_host << ":" << port << "\n";
    wait_for_signal();
    service.stop();
  });

  // ---- register-agent ----
  auto* reg = app.add_subcommand("register-agent",
                                 "Publish a crawler identity on the ledger");
  std::string rg_name, rg_pattern, rg_pubkey;
  std::vector<std::string> rg_ranges = {"127.0.0.0/8"};
  reg->add_option("--name", rg_name, "Agent name")->required();
  reg->add_option("--pattern", rg_pattern,
                  "User-Agent substring (defaults to the name)");
  reg->add_option("--range", rg_ranges, "Allowed CIDR block (repeatable)");
  reg->add_option("--pubkey", rg_pubkey, "Public key hex")->required();
  reg->add_option("--ledger", ledger_url, "Ledger URL")
      ->envname("FISHNET_LEDGER");
  reg->callback([&] {
    fn::CrawlerAgentConfig config;
    config.name = rg_name;
    config.user_agent_pattern = rg_pattern.empty() ? rg_name : rg_pattern;
    for (const auto& text : rg_ranges) {
      auto block = fn::CidrBlock::parse(text);
      if (!block) throw CLI::ValidationError("--range", "bad CIDR " + text);
      config.ip_ranges.push_back(*block);
    }
    config.public_key_hex = rg_pubkey;
    fn::ledger::HttpLedgerClient ledger(ledger_url);
    std::cout << json{{"registry_version", ledger.register_agent(config)}}
                     .dump(2)
              << "\n";
  });

  // ---- crawl ----
  auto* crawl = app.add_subcommand(
      "crawl", "Polite identified crawl producing a gzip JSONL dataset");
  std::vector<std::string> cw_seeds;
  std::string cw_name, cw_key = "main", cw_output = "dataset.jsonl.gz";
  std::size_t cw_max = 64;
  crawl->add_option("--seed-url", cw_seeds, "Seed URL (repeatable)")
      ->required();
  crawl->add_option("--name", cw_name, "Registered agent name")->required();
  crawl->add_option("--keystore", keystore_dir, "Keystore directory")
      ->envname(fn::client::kKeystoreEnv);
  crawl->add_option("--key", cw_key, "Key id");
  crawl->add_option("--output", cw_output, "Dataset path (.jsonl.gz)");
  crawl->add_option("--max-pages", cw_max, "Page budget");
  crawl->callback([&] {
    fn::crawler::CrawlSettings settings;
    settings.max_pages = cw_max;
    auto report = fn::crawler::crawl_site(
        cw_seeds, {cw_name, require_key(keystore_dir, cw_key)}, settings);
    fn::dataset::write_dataset(report.records, cw_output);
    std::cout << json{{"records", report.records.size()},
                      {"fetched", report.fetched_urls},
                      {"skipped_disallowed", report.skipped_disallowed},
                      {"warnings", report.warnings},
                      {"output", cw_output}}
                     .dump(2)
              << "\n";
  });

  // ---- ingest ----
  auto* ingest = app.add_subcommand(
      "ingest", "Verify a dataset into an ML party's training stores");
  std::string ig_party = "ml-corp", ig_state = "ml-state", ig_dataset;
  ingest->add_option("--party", ig_party, "Party id");
  ingest->add_option("--state-dir", ig_state, "State directory");
  ingest->add_option("--dataset", ig_dataset, "Dataset path")->required();
  ingest->add_option("--ledger", ledger_url, "Ledger URL")
      ->envname("FISHNET_LEDGER");
  ingest->callback([&] {
    fn::ml::MlParty party(ig_party, ig_state);
    fn::ledger::HttpLedgerClient ledger(ledger_url);
    auto summary = party.ingest_dataset(ig_dataset, ledger);
    std::cout << json{{"ingested", summary.ingested},
                      {"duplicates", summary.duplicates},
                      {"quarantined", summary.quarantined},
                      {"skipped_masked", summary.skipped_masked},
                      {"quarantine_reasons", summary.quarantine_reasons},
                      {"training_set_version", party.training_set_version()}}
                     .dump(2)
              << "\n";
  });

  // ---- watch ----
  auto* watch = app.add_subcommand(
      "watch", "Poll the ledger for withdrawals against an ML party's stores");
  std::string wt_party = "ml-corp", wt_state = "ml-state";
  int wt_interval_ms = 1000;
  bool wt_once = false;
  watch->add_option("--party", wt_party, "Party id");
  watch->add_option("--state-dir", wt_state, "State directory");
  watch->add_option("--interval", wt_interval_ms, "Poll interval ms");
  watch->add_flag("--once", wt_once, "Single poll cycle, then exit");
  watch->add_option("--ledger", ledger_url, "Ledger URL")
      ->envname("FISHNET_LEDGER");
  watch->callback([&] {
    fn::ml::MlParty party(wt_party, wt_state);
    fn::ledger::HttpLedgerClient ledger(ledger_url);
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    do {
      auto handled = party.watch_once(ledger);
      if (handled)
        std::cout << "handled " << handled << " withdrawal(s); training set v"
                  << party.training_set_version() << "\n";
      if (wt_once) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(wt_interval_ms));
    } while (!g_stop);
  });

  // ---- scenario ----
  auto* scenario_cmd = app.add_subcommand(
      "scenario", "End-to-end lifecycle run with oracle checks");
  std::string sc_spec_path, sc_workdir = "scenario-work";
  scenario_cmd->add_option("--spec", sc_spec_path,
                           "Scenario spec JSON (default: built-in fixture)");
  scenario_cmd->add_option("--workdir", sc_workdir, "Working directory");
  int scenario_exit = 0;
  scenario_cmd->callback([&] {
    fn::scenario::ScenarioSpec spec;
    if (sc_spec_path.empty()) {
      spec = fn::scenario::reference_spec();
    } else {
      std::ifstream in(sc_spec_path);
      if (!in)
        throw CLI::ValidationError("--spec", "cannot read " + sc_spec_path);
      spec = fn::scenario::ScenarioSpec::from_json(json::parse(in));
    }
    auto report = fn::scenario::run_scenario(spec, sc_workdir);
    json out{{"passed", report.passed},
             {"failures", report.failures},
             {"details", report.details},
             {"timing", report.timing}};
    std::cout << out.dump(2) << "\n";
    if (!report.passed) scenario_exit = 1;
  });

  // ---- bench-client / bench-server ----
  auto* bc = app.add_subcommand(
      "bench-client", "Request tagging overhead sweep over payload sizes");
  std::vector<std::uint64_t> bc_sizes = {1024, 100 * 1024, 1024 * 1024};
  std::size_t bc_runs = 20;
  std::string bc_out;
  bc->add_option("--size", bc_sizes, "Payload size in bytes (repeatable)");
  bc->add_option("--runs", bc_runs, "Runs per point (>= 20)");
  bc->add_option("--data-out", bc_out, "Write machine-readable JSON here");
  bc->callback([&] {
    auto report = fn::bench::bench_client(bc_sizes, bc_runs);
    std::cout << report.table();
    if (!bc_out.empty()) {
      std::ofstream out(bc_out);
      out << report.to_json().dump(2) << "\n";
    }
  });

  auto* bs = app.add_subcommand(
      "bench-server", "Query latency sweep over store row counts");
  std::vector<std::uint64_t> bs_rows = {100, 1000, 10000};
  std::size_t bs_runs = 20;
  bool bs_cache = false;
  std::string bs_out;
  bs->add_option("--rows", bs_rows, "Row count (repeatable)");
  bs->add_option("--runs", bs_runs, "Runs per point (>= 20)");
  bs->add_flag("--cache", bs_cache, "Enable the response cache");
  bs->add_option("--data-out", bs_out, "Write machine-readable JSON here");
  bs->callback([&] {
    auto report = fn::bench::bench_server(bs_rows, bs_cache, bs_runs);
    std::cout << report.table();
    if (!bs_out.empty()) {
      std::ofstream out(bs_out);
      out << report.to_json().dump(2) << "\n";
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const fn::consent::ConfigParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fn::scenario::ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return scenario_exit;
}
