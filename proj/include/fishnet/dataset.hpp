#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fishnet::dataset {

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One scraped content item. Tag fields travel together: both present or both
// absent.
struct DatasetRecord {
  std::string url;
  std::string selector;
  std::string content;
  std::optional<std::string> consent_tag_hash;
  std::optional<std::string> consent_tag_sig;
  std::int64_t crawl_time = 0;
  std::string crawler;
  bool masked = false;

  bool operator==(const DatasetRecord&) const = default;
};

struct WriteSummary {
  std::size_t record_count = 0;
  std::size_t compressed_bytes = 0;
};

// Gzip-compressed JSON lines, fixed field order, optional tag fields omitted
// when absent. Partial files are removed on write failure.
WriteSummary write_dataset(std::span<const DatasetRecord> records,
                           const std::string& path);
std::vector<DatasetRecord> read_dataset(const std::string& path);

std::string record_to_line(const DatasetRecord& record);
DatasetRecord record_from_line(const std::string& line);

}  // namespace fishnet::dataset
