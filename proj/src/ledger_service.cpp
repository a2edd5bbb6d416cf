#include "fishnet/ledger_service.hpp"

#include <httplib.h>

#include <thread>

#include "ledger_json.hpp"

namespace fishnet::ledger {

namespace {

void reply_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, const std::string& message,
                 int status = 400) {
  reply_json(res, json{{"error", message}}, status);
}

}  // namespace

struct LedgerService::Impl {
  explicit Impl(Ledger& ledger) : ledger(ledger) { wire_routes(); }

  void wire_routes() {
    server.Post("/agents", [this](const httplib::Request& req,
                                  httplib::Response& res) {
      handle([&] {
        auto config = agent_from_json(json::parse(req.body));
        auto version = ledger.register_agent(config);
        reply_json(res, json{{"version", version}});
      }, res);
    });

    server.Get("/agents", [this](const httplib::Request&,
                                 httplib::Response& res) {
      json out = json::array();
      for (const auto& config : ledger.agents())
        out.push_back(agent_to_json(config));
      reply_json(res, json{{"agents", out},
                           {"version", ledger.registry_version()}});
    });

    server.Post("/tags/batch", [this](const httplib::Request& req,
                                      httplib::Response& res) {
      handle([&] {
        std::vector<BatchItem> entries;
        auto body = json::parse(req.body);
        for (const auto& item : body.at("entries")) {
          entries.push_back({item.at("hash").get<std::string>(),
                             item.at("sig").get<std::string>(),
                             item.at("custodian").get<std::string>()});
        }
        auto receipt = ledger.submit_tag_batch(entries);
        reply_json(res, json{{"tx_id", receipt.tx_id},
                             {"first_seq", receipt.first_seq},
                             {"last_seq", receipt.last_seq},
                             {"entry_count", receipt.entry_count}});
      }, res);
    });

    server.Post("/events", [this](const httplib::Request& req,
                                  httplib::Response& res) {
      handle([&] {
        auto body = json::parse(req.body);
        auto kind = event_kind_from_string(body.at("kind").get<std::string>());
        if (!kind) throw LedgerError("unknown event kind");
        auto seq = ledger.append_event(
            body.at("tag_hash").get<std::string>(), *kind,
            body.at("actor").get<std::string>(),
            body.value("detail", std::string{}));
        reply_json(res, json{{"seq", seq}});
      }, res);
    });

    server.Post("/challenge", [this](const httplib::Request&,
                                     httplib::Response& res) {
      auto challenge = ledger.issue_challenge();
      reply_json(res, json{{"id", challenge.id},
                           {"nonce", challenge.nonce_hex},
                           {"expiry_seq", challenge.expiry_seq}});
    });

    server.Post("/withdraw", [this](const httplib::Request& req,
                                    httplib::Response& res) {
      handle([&] {
        auto body = json::parse(req.body);
        WithdrawalRequest request{
            body.at("hash").get<std::string>(),
            body.at("sig").get<std::string>(),
            body.at("pubkey").get<std::string>(),
            body.at("challenge_id").get<std::string>(),
            body.at("challenge_sig").get<std::string>()};
        auto outcome = ledger.submit_withdrawal(request);
        reply_json(res, json{{"accepted", outcome.accepted},
                             {"seq", outcome.seq},
                             {"reason", outcome.reason}});
      }, res);
    });

    server.Post("/complete", [this](const httplib::Request& req,
                                    httplib::Response& res) {
      handle([&] {
        auto body = json::parse(req.body);
        std::string action = body.at("action").get<std::string>();
        if (action != "deletion" && action != "retraining")
          throw LedgerError("action must be deletion or retraining");
        auto seq = ledger.report_completion(
            body.at("tag_hash").get<std::string>(),
            body.at("custodian").get<std::string>(),
            action == "deletion" ? CompletionAction::deletion
                                 : CompletionAction::retraining);
        reply_json(res, json{{"seq", seq}});
      }, res);
    });

    server.Get(R"(/tags/([0-9a-f]+))", [this](const httplib::Request& req,
                                              httplib::Response& res) {
      auto entry = ledger.query_tag(req.matches[1]);
      if (!entry) {
        reply_error(res, "not-found", 404);
        return;
      }
      reply_json(res, entry_to_json(*entry));
    });

    server.Get("/events", [this](const httplib::Request& req,
                                 httplib::Response& res) {
      handle([&] {
        std::uint64_t since = 0;
        if (req.has_param("since"))
          since = std::stoull(req.get_param_value("since"));
        std::optional<std::string> party, tag;
        if (req.has_param("party")) party = req.get_param_value("party");
        if (req.has_param("tag")) tag = req.get_param_value("tag");
        auto [events, high_water] = ledger.poll_events(since, party, tag);
        json out = json::array();
        for (const auto& event : events) out.push_back(event_to_json(event));
        reply_json(res, json{{"events", out}, {"high_water", high_water}});
      }, res);
    });
  }

  template <typename Fn>
  void handle(Fn&& fn, httplib::Response& res) {
    try {
      fn();
    } catch (const LedgerError& e) {
      reply_error(res, e.what(), 409);
    } catch (const std::exception& e) {
      reply_error(res, e.what(), 400);
    }
  }

  Ledger& ledger;
  httplib::Server server;
  std::thread thread;
};

LedgerService::LedgerService(Ledger& ledger)
    : impl_(std::make_unique<Impl>(ledger)) {}

LedgerService::~LedgerService() { stop(); }

int LedgerService::start(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    if (!impl_->server.bind_to_port(host, port)) return -1;
    port_ = port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void LedgerService::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
  if (impl_ && impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace fishnet::ledger
