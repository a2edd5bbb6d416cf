#include "fishnet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <numeric>

#include "fishnet/client_agent.hpp"
#include "fishnet/consent.hpp"
#include "fishnet/crypto.hpp"
#include "fishnet/hex.hpp"
#include "fishnet/server.hpp"

namespace fishnet::bench {

using Clock = std::chrono::steady_clock;

namespace {

double micros_since(Clock::time_point start) {
  return std::chrono::duration<double, std::micro>(Clock::now() - start)
      .count();
}

double mean(const std::vector<double>& xs) {
  return xs.empty() ? 0.0
                    : std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
}

// Robust against scheduler blips, which at nanosecond scales can dwarf the
// quantity being measured.
double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  std::size_t mid = xs.size() / 2;
  return xs.size() % 2 ? xs[mid] : (xs[mid - 1] + xs[mid]) / 2.0;
}

std::string serialize_request(const client::HttpRequestModel& model) {
  std::string wire = model.method + " " + model.url + " HTTP/1.1\r\n";
  for (const auto& [name, value] : model.headers)
    wire += name + ": " + value + "\r\n";
  wire += "\r\n";
  wire += model.body;
  return wire;
}

std::string make_payload(std::uint64_t size) {
  std::string payload;
  payload.reserve(size);
  const std::string chunk = "the quick brown fox jumps over the lazy dog ";
  while (payload.size() < size) payload += chunk;
  payload.resize(size);
  return payload;
}

}  // namespace

std::string BenchReport::table() const {
  std::string out = name + "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%12s %18s %18s %12s %8s\n",
                x_label.c_str(), "baseline (us)", "with-consent (us)",
                "delta (us)", "runs");
  out += line;
  for (const auto& point : points) {
    std::snprintf(line, sizeof line, "%12llu %18.1f %18.1f %12.1f %8zu\n",
                  static_cast<unsigned long long>(point.x), point.baseline_us,
                  point.with_consent_us,
                  point.with_consent_us - point.baseline_us, point.runs);
    out += line;
  }
  return out;
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json points_json = nlohmann::json::array();
  for (const auto& point : points)
    points_json.push_back({{"x", point.x},
                           {"baseline_us", point.baseline_us},
                           {"with_consent_us", point.with_consent_us},
                           {"runs", point.runs}});
  return {{"name", name}, {"x_label", x_label}, {"points", points_json}};
}

BenchReport bench_client(const std::vector<std::uint64_t>& payload_sizes,
                         std::size_t runs) {
  BenchReport report{"request dispatch: baseline vs consent tagging",
                     "bytes",
                     {}};
  auto key = crypto::generate_keypair("bench-client-key");
  client::AgentSettings settings{
      key, consent::parse_consent_config("Googlebot:1;default:0")};

  for (auto size : payload_sizes) {
    std::string payload = make_payload(size);
    std::vector<double> baseline, tagged;
    // Warm-up run excluded from the stats.
    for (std::size_t run = 0; run < runs + 1; ++run) {
      client::HttpRequestModel model;
      model.method = "POST";
      model.url = "http://127.0.0.1:8080/submit";
      model.headers = {{"Content-Type", "text/plain"}};
      model.body = payload;

      auto t0 = Clock::now();
      volatile auto wire_len = serialize_request(model).size();
      double base_us = micros_since(t0);

      t0 = Clock::now();
      auto result = client::tag_outgoing_request(model, settings, 1700000000);
      volatile auto tagged_len = serialize_request(result.request).size();
      double consent_us = micros_since(t0);
      (void)wire_len;
      (void)tagged_len;

      if (run == 0) continue;
      baseline.push_back(base_us);
      tagged.push_back(consent_us);
    }
    report.points.push_back({size, mean(baseline), mean(tagged), runs});
  }
  return report;
}

BenchReport bench_server(const std::vector<std::uint64_t>& row_counts,
                         bool cache_on, std::size_t runs) {
  BenchReport report{std::string("query latency: plain vs consent path (cache ") +
                         (cache_on ? "on)" : "off)"),
                     "rows",
                     {}};
  auto key = crypto::generate_keypair("bench-server-key");
  auto config = consent::parse_consent_config("Googlebot:1;GPTBot:0;default:0");

  for (auto rows : row_counts) {
    server::SiteStore store;
    for (std::uint64_t i = 0; i < rows; ++i) {
      std::string content =
          "row " + std::to_string(i) + ": " + make_payload(64);
      auto data_id = store.save_datum(content, "bench", false, 1700000000);
      if (i % 2 == 0) {
        auto digest = keccak256(content);
        store.link_consent(data_id, digest_hex(digest),
                           hex_encode(crypto::sign_digest(key, digest)),
                           config);
      }
    }

    server::VisitorClass regular;  // plain path
    server::VisitorClass crawler;
    crawler.kind = server::VisitorClass::Kind::crawler;
    crawler.crawler_name = "Googlebot";

    // Same memoization scheme as the server: key on visitor class, validate
    // against the store mutation counter.
    std::map<std::string, std::pair<std::uint64_t, server::ServeResult>> cache;
    // A cache hit is timed as lookup + staleness validation, averaged over
    // many probes. The body itself is handed out by reference: shipping it
    // costs the same with or without consent enforcement, so including the
    // copy would just measure the difference in page size.
    auto timed_query = [&](const server::VisitorClass& visitor,
                           const std::string& cache_key) {
      if (cache_on) {
        auto it = cache.find(cache_key);
        if (it != cache.end() && it->second.first == store.mutation_count()) {
          constexpr int kProbes = 4096;
          const std::string* body = nullptr;
          auto t0 = Clock::now();
          for (int probe = 0; probe < kProbes; ++probe) {
            auto hit = cache.find(cache_key);
            if (hit == cache.end() ||
                hit->second.first != store.mutation_count())
              break;
            body = &hit->second.second.body;
          }
          double elapsed = micros_since(t0);
          volatile auto len = body ? body->size() : 0;
          (void)len;
          return elapsed / kProbes;
        }
      }
      auto t0 = Clock::now();
      auto result =
          server::handle_content_request(store, visitor,
                                         server::ServeFormat::html);
      if (cache_on) cache[cache_key] = {store.mutation_count(), result};
      volatile auto len = result.body.size();
      (void)len;
      return micros_since(t0);
    };

    std::vector<double> baseline, consent;
    for (std::size_t run = 0; run < runs + 1; ++run) {
      double base_us = timed_query(regular, "regular:/posts");
      double consent_us = timed_query(crawler, "crawler:Googlebot:/posts");
      if (run == 0) continue;  // warm-up primes the cache
      baseline.push_back(base_us);
      consent.push_back(consent_us);
    }
    report.points.push_back({rows, median(baseline), median(consent), runs});
  }
  return report;
}

}  // namespace fishnet::bench
