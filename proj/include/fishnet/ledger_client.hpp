#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fishnet/ledger.hpp"

namespace fishnet::ledger {

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Client surface used by every party (server, crawler, ML, user agent).
// Backed either by an in-process Ledger or by the HTTP service.
class LedgerClient {
 public:
  virtual ~LedgerClient() = default;

  virtual std::uint64_t register_agent(const CrawlerAgentConfig& config) = 0;
  virtual std::vector<CrawlerAgentConfig> agents() = 0;
  virtual TxReceipt submit_tag_batch(const std::vector<BatchItem>& entries) = 0;
  virtual std::uint64_t append_event(const std::string& tag_hash,
                                     EventKind kind, const std::string& actor,
                                     const std::string& detail = "") = 0;
  virtual std::optional<TagLedgerEntry> query_tag(const std::string& hash) = 0;
  virtual Challenge issue_challenge() = 0;
  virtual WithdrawalOutcome submit_withdrawal(
      const WithdrawalRequest& request) = 0;
  virtual std::uint64_t report_completion(const std::string& tag_hash,
                                          const std::string& custodian,
                                          CompletionAction action) = 0;
  virtual std::pair<std::vector<LedgerEvent>, std::uint64_t> poll_events(
      std::uint64_t since, const std::optional<std::string>& party = {},
      const std::optional<std::string>& tag_hash = {}) = 0;
};

class InProcessLedgerClient final : public LedgerClient {
 public:
  explicit InProcessLedgerClient(Ledger& ledger) : ledger_(ledger) {}

  std::uint64_t register_agent(const CrawlerAgentConfig& config) override {
    return ledger_.register_agent(config);
  }
  std::vector<CrawlerAgentConfig> agents() override { return ledger_.agents(); }
  TxReceipt submit_tag_batch(const std::vector<BatchItem>& entries) override {
    return ledger_.submit_tag_batch(entries);
  }
  std::uint64_t append_event(const std::string& tag_hash, EventKind kind,
                             const std::string& actor,
                             const std::string& detail) override {
    return ledger_.append_event(tag_hash, kind, actor, detail);
  }
  std::optional<TagLedgerEntry> query_tag(const std::string& hash) override {
    return ledger_.query_tag(hash);
  }
  Challenge issue_challenge() override { return ledger_.issue_challenge(); }
  WithdrawalOutcome submit_withdrawal(
      const WithdrawalRequest& request) override {
    return ledger_.submit_withdrawal(request);
  }
  std::uint64_t report_completion(const std::string& tag_hash,
                                  const std::string& custodian,
                                  CompletionAction action) override {
    return ledger_.report_completion(tag_hash, custodian, action);
  }
  std::pair<std::vector<LedgerEvent>, std::uint64_t> poll_events(
      std::uint64_t since, const std::optional<std::string>& party,
      const std::optional<std::string>& tag_hash) override {
    return ledger_.poll_events(since, party, tag_hash);
  }

 private:
  Ledger& ledger_;
};

// Talks to the ledger HTTP service. Transport failures raise TransportError;
// ledger-level rejections surface as LedgerError with the service's reason.
class HttpLedgerClient final : public LedgerClient {
 public:
  explicit HttpLedgerClient(std::string base_url);
  ~HttpLedgerClient() override;

  std::uint64_t register_agent(const CrawlerAgentConfig& config) override;
  std::vector<CrawlerAgentConfig> agents() override;
  TxReceipt submit_tag_batch(const std::vector<BatchItem>& entries) override;
  std::uint64_t append_event(const std::string& tag_hash, EventKind kind,
                             const std::string& actor,
                             const std::string& detail) override;
  std::optional<TagLedgerEntry> query_tag(const std::string& hash) override;
  Challenge issue_challenge() override;
  WithdrawalOutcome submit_withdrawal(
      const WithdrawalRequest& request) override;
  std::uint64_t report_completion(const std::string& tag_hash,
                                  const std::string& custodian,
                                  CompletionAction action) override;
  std::pair<std::vector<LedgerEvent>, std::uint64_t> poll_events(
      std::uint64_t since, const std::optional<std::string>& party,
      const std::optional<std::string>& tag_hash) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::unique_ptr<LedgerClient> make_ledger_client(const std::string& url_or_inproc,
                                                 Ledger* in_process = nullptr);

}  // namespace fishnet::ledger
