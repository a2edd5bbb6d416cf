#pragma once

#include <memory>
#include <string>

#include "fishnet/ledger.hpp"

namespace fishnet::ledger {

// HTTP facade over a Ledger: POST /agents, GET /agents, POST /tags/batch,
// POST /events, POST /challenge, POST /withdraw, POST /complete,
// GET /tags/{hash}, GET /events?since=S. JSON bodies, hex strings on the wire.
class LedgerService {
 public:
  explicit LedgerService(Ledger& ledger);
  ~LedgerService();

  // Binds and serves on a background thread. Port 0 picks an ephemeral port;
  // the bound port is returned.
  int start(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace fishnet::ledger
