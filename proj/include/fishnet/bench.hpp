#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace fishnet::bench {

// One sweep point: durations are per-operation means over >= `runs` runs.
struct BenchPoint {
  std::uint64_t x = 0;  // payload bytes (client) or row count (server)
  double baseline_us = 0.0;
  double with_consent_us = 0.0;
  std::size_t runs = 0;
};

struct BenchReport {
  std::string name;
  std::string x_label;
  std::vector<BenchPoint> points;

  std::string table() const;        // human-readable
  nlohmann::json to_json() const;   // plottable data
};

// Request construction + serialization, without vs with consent tagging
// (hash + sign + header injection). Tagging cost is dominated by hashing,
// so it grows monotonically with payload size.
BenchReport bench_client(const std::vector<std::uint64_t>& payload_sizes =
                             {1024, 100 * 1024, 1024 * 1024},
                         std::size_t runs = 20);

// Query latency over a seeded store: plain rendering for a regular visitor
// vs consent extraction/filtering/tag injection for a crawler. `cache_on`
// memoizes rendered responses keyed on the store mutation counter, the same
// scheme the server uses.
BenchReport bench_server(const std::vector<std::uint64_t>& row_counts =
                             {100, 1000, 10000},
                         bool cache_on = false, std::size_t runs = 20);

}  // namespace fishnet::bench
