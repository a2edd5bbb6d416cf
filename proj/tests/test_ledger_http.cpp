#include <doctest.h>

#include "fishnet/hex.hpp"
#include "fishnet/keccak.hpp"
#include "fishnet/ledger_client.hpp"
#include "fishnet/ledger_service.hpp"

using namespace fishnet;
using namespace fishnet::ledger;

namespace {

struct ServiceFixture {
  Ledger ledger{123};
  LedgerService service{ledger};
  std::unique_ptr<HttpLedgerClient> client;

  ServiceFixture() {
    int port = service.start("127.0.0.1", 0);
    REQUIRE(port > 0);
    client = std::make_unique<HttpLedgerClient>("http://127.0.0.1:" +
                                                std::to_string(port));
  }
};

}  // namespace

TEST_CASE("HTTP client mirrors the in-process ledger surface") {
  ServiceFixture fx;
  auto& client = *fx.client;

  // Agents.
  CrawlerAgentConfig agent{"Googlebot",
                           "Googlebot",
                           {*CidrBlock::parse("127.0.0.0/8")},
                           "aa"};
  CHECK(client.register_agent(agent) == 1);
  auto agents = client.agents();
  REQUIRE(agents.size() == 1);
  CHECK(agents[0] == agent);

  // Batch + query.
  auto key = crypto::generate_keypair("http-owner");
  auto digest = keccak256(std::string_view{"http post"});
  std::string hash = digest_hex(digest);
  std::string signature = hex_encode(crypto::sign_digest(key, digest));
  auto receipt = client.submit_tag_batch({{hash, signature, "web-server"}});
  CHECK(receipt.entry_count == 1);

  auto entry = client.query_tag(hash);
  REQUIRE(entry.has_value());
  CHECK(entry->signature == signature);
  CHECK_FALSE(client.query_tag("ffff").has_value());

  // Events + polling.
  client.append_event(hash, EventKind::crawl, "Googlebot", "page 1");
  client.append_event(hash, EventKind::training, "ml-corp", "");
  auto [events, high_water] =
      client.poll_events(0, std::nullopt, std::nullopt);
  CHECK(events.size() == 2);
  CHECK(high_water == fx.ledger.high_water());
  auto [ml_events, hw2] =
      client.poll_events(0, std::string("ml-corp"), std::nullopt);
  CHECK(ml_events.size() == 2);  // custodian of the only tag

  // Challenge + withdrawal + completion.
  auto challenge = client.issue_challenge();
  CHECK_FALSE(challenge.nonce_hex.empty());
  auto nonce = hex_decode(challenge.nonce_hex);
  WithdrawalRequest request;
  request.tag_hash = hash;
  request.tag_signature = signature;
  request.public_key_hex = key.public_hex();
  request.challenge_id = challenge.id;
  request.challenge_signature = hex_encode(crypto::sign_digest(
      key, keccak256(std::span<const std::uint8_t>(*nonce))));
  auto outcome = client.submit_withdrawal(request);
  CHECK(outcome.accepted);

  client.report_completion(hash, "web-server", CompletionAction::deletion);
  client.report_completion(hash, "ml-corp", CompletionAction::deletion);
  CHECK(client.query_tag(hash)->withdrawal == WithdrawalState::completed);
}

TEST_CASE("HTTP client surfaces ledger rejections as LedgerError") {
  ServiceFixture fx;
  CHECK_THROWS_AS(fx.client->submit_tag_batch({}), LedgerError);
  CHECK_THROWS_AS(
      fx.client->append_event("nope", EventKind::training, "ml-corp", ""),
      LedgerError);
  CHECK_THROWS_AS(fx.client->report_completion("nope", "web-server",
                                               CompletionAction::deletion),
                  LedgerError);
}

TEST_CASE("rejected withdrawals carry the reason over HTTP") {
  ServiceFixture fx;
  WithdrawalRequest request;
  request.tag_hash = "ffff";
  request.tag_signature = "00";
  request.public_key_hex = "00";
  request.challenge_id = "ch-1";
  request.challenge_signature = "00";
  auto outcome = fx.client->submit_withdrawal(request);
  CHECK_FALSE(outcome.accepted);
  CHECK(outcome.reason == kRejectUnknownTag);
}

TEST_CASE("unreachable ledger raises TransportError") {
  HttpLedgerClient client("http://127.0.0.1:1");  // nothing listens here
  CHECK_THROWS_AS(client.agents(), TransportError);
}
