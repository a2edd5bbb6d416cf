#include <doctest.h>

#include <json.hpp>

#include "fishnet/hex.hpp"
#include "fishnet/keccak.hpp"
#include "fishnet/server.hpp"

using namespace fishnet;
using namespace fishnet::server;

namespace {

SubmissionRequest tagged_submission(const crypto::KeyPair& key,
                                    const std::string& body,
                                    const std::string& config) {
  auto digest = keccak256(body);
  SubmissionRequest request;
  request.method = "POST";
  request.body = body;
  request.headers = {
      {consent::kTagHashHeader, digest_hex(digest)},
      {consent::kTagSigHeader, hex_encode(crypto::sign_digest(key, digest))},
      {consent::kConfigHeader, config},
  };
  request.author = "alice";
  request.now_seconds = 1700000000;
  return request;
}

std::vector<CrawlerAgentConfig> sample_registry() {
  return {{"Googlebot", "Googlebot", {*CidrBlock::parse("127.0.0.0/8")}, ""},
          {"GPTBot", "GPTBot", {*CidrBlock::parse("10.0.0.0/8")}, ""}};
}

}  // namespace

TEST_CASE("store links consent atomically and erases by hash") {
  SiteStore store;
  auto data_id = store.save_datum("text", "alice", false, 1);
  auto consent_id = store.link_consent(data_id, "hh", "ss", {});
  CHECK(consent_id == 1);
  CHECK(store.contains_hash("hh"));
  auto view = store.find_by_hash("hh");
  REQUIRE(view.has_value());
  CHECK(view->datum.content == "text");
  auto mutations_before = store.mutation_count();
  CHECK(store.erase_by_hash("hh") == 1);
  CHECK(store.mutation_count() > mutations_before);
  CHECK_FALSE(store.contains_hash("hh"));
  CHECK(store.size() == 0);
  CHECK(store.erase_by_hash("hh") == 0);
  CHECK_THROWS_AS(store.link_consent(999, "h", "s", {}), std::out_of_range);
}

TEST_CASE("submission verifies the tag against the body") {
  SiteStore store;
  auto key = crypto::generate_keypair("submitter");
  auto request = tagged_submission(key, "my post", "default:0");
  auto result = handle_data_submission(store, request);
  CHECK(result.consent_id.has_value());

  // Server-side re-hash: a tampered body is rejected.
  auto tampered = tagged_submission(key, "my post", "default:0");
  tampered.body = "substituted";
  CHECK_THROWS_AS(handle_data_submission(store, tampered),
                  SubmissionRejected);
}

TEST_CASE("submission validation rejects the documented bad requests") {
  SiteStore store;
  auto key = crypto::generate_keypair("submitter");

  SUBCASE("incomplete tag headers") {
    auto request = tagged_submission(key, "x", "default:0");
    request.headers.erase(request.headers.begin() + 1);  // drop the sig
    CHECK_THROWS_AS(handle_data_submission(store, request),
                    SubmissionRejected);
  }
  SUBCASE("malformed config") {
    auto request = tagged_submission(key, "x", "GPTBot");
    CHECK_THROWS_AS(handle_data_submission(store, request),
                    SubmissionRejected);
  }
  SUBCASE("consent headers plus non-crawlable marker contradict") {
    auto request = tagged_submission(key, "x", "default:0");
    request.headers.emplace_back(consent::kNonCrawlableHeader, "1");
    CHECK_THROWS_AS(handle_data_submission(store, request),
                    SubmissionRejected);
  }
  SUBCASE("GET and empty bodies carry nothing storable") {
    SubmissionRequest request;
    request.method = "GET";
    request.body = "x";
    CHECK_THROWS_AS(handle_data_submission(store, request),
                    SubmissionRejected);
    request.method = "POST";
    request.body = "";
    CHECK_THROWS_AS(handle_data_submission(store, request),
                    SubmissionRejected);
  }
}

TEST_CASE("untagged submission with the marker is stored non-crawlable") {
  SiteStore store;
  SubmissionRequest request;
  request.method = "POST";
  request.body = "internal note";
  request.headers = {{consent::kNonCrawlableHeader, "1"}};
  auto result = handle_data_submission(store, request);
  CHECK_FALSE(result.consent_id.has_value());
  auto views = store.list();
  REQUIRE(views.size() == 1);
  CHECK(views[0].datum.non_crawlable);
}

TEST_CASE("visitor identification: pattern, IP range, and signature gates") {
  auto registry = sample_registry();
  auto key = crypto::generate_keypair("googlebot-key");
  registry[0].public_key_hex = key.public_hex();
  std::int64_t now = 1700000000;

  RequestMeta meta;
  meta.user_agent = "Mozilla/5.0 (regular person)";
  meta.remote_ip = "127.0.0.1";
  CHECK(identify_visitor(meta, registry, now).kind ==
        VisitorClass::Kind::regular);

  meta.user_agent = "Googlebot/1.0";
  CHECK(identify_visitor(meta, registry, now).kind ==
        VisitorClass::Kind::crawler);

  meta.remote_ip = "192.168.1.5";  // outside the registered range
  CHECK(identify_visitor(meta, registry, now).kind ==
        VisitorClass::Kind::rejected);
  meta.remote_ip = "127.0.0.1";

  // Signed timestamp: valid, stale, and forged.
  std::string ts = std::to_string(now - 10);
  meta.crawler_timestamp = ts;
  meta.crawler_signature =
      hex_encode(crypto::sign_digest(key, keccak256(ts)));
  CHECK(identify_visitor(meta, registry, now).kind ==
        VisitorClass::Kind::crawler);

  std::string stale = std::to_string(now - 1000);
  meta.crawler_timestamp = stale;
  meta.crawler_signature =
      hex_encode(crypto::sign_digest(key, keccak256(stale)));
  CHECK(identify_visitor(meta, registry, now).kind ==
        VisitorClass::Kind::rejected);

  meta.crawler_timestamp = ts;
  auto other = crypto::generate_keypair("not-googlebot");
  meta.crawler_signature =
      hex_encode(crypto::sign_digest(other, keccak256(ts)));
  CHECK(identify_visitor(meta, registry, now).kind ==
        VisitorClass::Kind::rejected);

  meta.crawler_signature.reset();  // half the auth headers
  CHECK(identify_visitor(meta, registry, now).kind ==
        VisitorClass::Kind::rejected);
}

TEST_CASE("serving filters per visitor class") {
  SiteStore store;
  auto key = crypto::generate_keypair("author");
  handle_data_submission(
      store, tagged_submission(key, "for google only",
                               "Googlebot:1;default:0"));
  handle_data_submission(
      store, tagged_submission(key, "for everyone", "default:1"));
  SubmissionRequest marked;
  marked.method = "POST";
  marked.body = "not for crawlers";
  marked.headers = {{consent::kNonCrawlableHeader, "1"}};
  handle_data_submission(store, marked);

  VisitorClass regular;
  auto page = handle_content_request(store, regular, ServeFormat::html);
  CHECK(page.body.find("for google only") != std::string::npos);
  CHECK(page.body.find("for everyone") != std::string::npos);
  CHECK(page.body.find("not for crawlers") != std::string::npos);
  CHECK(page.body.find(consent::kHashAttribute) == std::string::npos);
  CHECK(page.crawl_events.empty());

  VisitorClass google{VisitorClass::Kind::crawler, "Googlebot", ""};
  page = handle_content_request(store, google, ServeFormat::html);
  CHECK(page.body.find("for google only") != std::string::npos);
  CHECK(page.body.find(consent::kHashAttribute) != std::string::npos);
  CHECK(page.body.find("not for crawlers") == std::string::npos);
  CHECK(page.crawl_events.size() == 2);

  VisitorClass gpt{VisitorClass::Kind::crawler, "GPTBot", ""};
  page = handle_content_request(store, gpt, ServeFormat::html);
  CHECK(page.body.find("for google only") == std::string::npos);
  CHECK(page.body.find(consent::kMaskPlaceholder) != std::string::npos);
  CHECK(page.body.find("for everyone") != std::string::npos);
  CHECK(page.crawl_events.size() == 1);

  VisitorClass rejected{VisitorClass::Kind::rejected, "", ""};
  page = handle_content_request(store, rejected, ServeFormat::html);
  CHECK(page.status == 403);
}

TEST_CASE("json format carries tags and mask flags") {
  SiteStore store;
  auto key = crypto::generate_keypair("author");
  handle_data_submission(
      store, tagged_submission(key, "secret", "Googlebot:0;default:1"));
  VisitorClass google{VisitorClass::Kind::crawler, "Googlebot", ""};
  auto page = handle_content_request(store, google, ServeFormat::json);
  auto body = nlohmann::json::parse(page.body);
  REQUIRE(body.at("posts").size() == 1);
  CHECK(body["posts"][0]["masked"] == true);
  CHECK(body["posts"][0]["content"] == consent::kMaskPlaceholder);
}

TEST_CASE("html rendering escapes content") {
  std::vector<consent::TaggedContent> items(1);
  items[0].content = "<script>alert(1)</script>";
  auto html = render_tagged_html(items);
  CHECK(html.find("<script>") == std::string::npos);
  CHECK(html.find("&lt;script&gt;") != std::string::npos);
}
