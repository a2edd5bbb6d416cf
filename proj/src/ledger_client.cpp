#include "fishnet/ledger_client.hpp"

#include <httplib.h>

#include "ledger_json.hpp"

namespace fishnet::ledger {

struct HttpLedgerClient::Impl {
  explicit Impl(std::string url) : base_url(std::move(url)), client(base_url) {
    client.set_connection_timeout(5);
    client.set_read_timeout(10);
  }

  json post(const std::string& path, const json& body) {
    auto res = client.Post(path, body.dump(), "application/json");
    return unwrap(path, res);
  }

  json get(const std::string& path) {
    auto res = client.Get(path);
    return unwrap(path, res);
  }

  json unwrap(const std::string& path, const httplib::Result& res) {
    if (!res)
      throw TransportError("ledger unreachable at " + base_url + path);
    json body = res->body.empty() ? json::object() : json::parse(res->body);
    if (res->status >= 400) {
      std::string message = body.value("error", "status " +
                                                    std::to_string(res->status));
      if (res->status == 404) throw LedgerError("not-found");
      throw LedgerError(message);
    }
    return body;
  }

  std::string base_url;
  httplib::Client client;
};

HttpLedgerClient::HttpLedgerClient(std::string base_url)
    : impl_(std::make_unique<Impl>(std::move(base_url))) {}

HttpLedgerClient::~HttpLedgerClient() = default;

std::uint64_t HttpLedgerClient::register_agent(
    const CrawlerAgentConfig& config) {
  return impl_->post("/agents", agent_to_json(config))
      .at("version")
      .get<std::uint64_t>();
}

std::vector<CrawlerAgentConfig> HttpLedgerClient::agents() {
  std::vector<CrawlerAgentConfig> out;
  auto body = impl_->get("/agents");
  for (const auto& item : body.at("agents"))
    out.push_back(agent_from_json(item));
  return out;
}

TxReceipt HttpLedgerClient::submit_tag_batch(
    const std::vector<BatchItem>& entries) {
  json items = json::array();
  for (const auto& item : entries)
    items.push_back({{"hash", item.hash},
                     {"sig", item.signature},
                     {"custodian", item.custodian}});
  auto body = impl_->post("/tags/batch", json{{"entries", items}});
  return TxReceipt{body.at("tx_id").get<std::uint64_t>(),
                   body.at("first_seq").get<std::uint64_t>(),
                   body.at("last_seq").get<std::uint64_t>(),
                   body.at("entry_count").get<std::size_t>()};
}

std::uint64_t HttpLedgerClient::append_event(const std::string& tag_hash,
                                             EventKind kind,
                                             const std::string& actor,
                                             const std::string& detail) {
  return impl_
      ->post("/events", json{{"tag_hash", tag_hash},
                             {"kind", std::string(to_string(kind))},
                             {"actor", actor},
                             {"detail", detail}})
      .at("seq")
      .get<std::uint64_t>();
}

std::optional<TagLedgerEntry> HttpLedgerClient::query_tag(
    const std::string& hash) {
  try {
    return entry_from_json(impl_->get("/tags/" + hash));
  } catch (const LedgerError& e) {
    if (std::string_view(e.what()) == "not-found") return std::nullopt;
    throw;
  }
}

Challenge HttpLedgerClient::issue_challenge() {
  auto body = impl_->post("/challenge", json::object());
  Challenge challenge;
  challenge.id = body.at("id").get<std::string>();
  challenge.nonce_hex = body.at("nonce").get<std::string>();
  challenge.expiry_seq = body.at("expiry_seq").get<std::uint64_t>();
  return challenge;
}

WithdrawalOutcome HttpLedgerClient::submit_withdrawal(
    const WithdrawalRequest& request) {
  auto body = impl_->post("/withdraw",
                          json{{"hash", request.tag_hash},
                               {"sig", request.tag_signature},
                               {"pubkey", request.public_key_hex},
                               {"challenge_id", request.challenge_id},
                               {"challenge_sig", request.challenge_signature}});
  return WithdrawalOutcome{body.at("accepted").get<bool>(),
                           body.at("seq").get<std::uint64_t>(),
                           body.at("reason").get<std::string>()};
}

std::uint64_t HttpLedgerClient::report_completion(const std::string& tag_hash,
                                                  const std::string& custodian,
                                                  CompletionAction action) {
  return impl_
      ->post("/complete",
             json{{"tag_hash", tag_hash},
                  {"custodian", custodian},
                  {"action", action == CompletionAction::deletion
                                 ? "deletion"
                                 : "retraining"}})
      .at("seq")
      .get<std::uint64_t>();
}

std::pair<std::vector<LedgerEvent>, std::uint64_t>
HttpLedgerClient::poll_events(std::uint64_t since,
                              const std::optional<std::string>& party,
                              const std::optional<std::string>& tag_hash) {
  std::string path = "/events?since=" + std::to_string(since);
  if (party) path += "&party=" + *party;
  if (tag_hash) path += "&tag=" + *tag_hash;
  auto body = impl_->get(path);
  std::vector<LedgerEvent> events;
  for (const auto& item : body.at("events"))
    events.push_back(event_from_json(item));
  return {std::move(events), body.at("high_water").get<std::uint64_t>()};
}

std::unique_ptr<LedgerClient> make_ledger_client(
    const std::string& url_or_inproc, Ledger* in_process) {
  if (in_process) return std::make_unique<InProcessLedgerClient>(*in_process);
  return std::make_unique<HttpLedgerClient>(url_or_inproc);
}

}  // namespace fishnet::ledger
