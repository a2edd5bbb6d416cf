#include "fishnet/dataset.hpp"

#include <zlib.h>

#include <cstdio>
#include <filesystem>

#include <json.hpp>

namespace fishnet::dataset {

using nlohmann::ordered_json;

std::string record_to_line(const DatasetRecord& record) {
  if (record.consent_tag_hash.has_value() !=
      record.consent_tag_sig.has_value())
    throw DatasetError("record has a lone tag field: " + record.url);
  ordered_json j;
  j["url"] = record.url;
  j["selector"] = record.selector;
  j["content"] = record.content;
  if (record.consent_tag_hash) j["consent_tag_hash"] = *record.consent_tag_hash;
  if (record.consent_tag_sig) j["consent_tag_sig"] = *record.consent_tag_sig;
  j["crawl_time"] = record.crawl_time;
  j["crawler"] = record.crawler;
  j["masked"] = record.masked;
  return j.dump();
}

DatasetRecord record_from_line(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded())
    throw DatasetError("line is not valid JSON: " + line);
  DatasetRecord record;
  try {
    record.url = j.at("url").get<std::string>();
    record.selector = j.at("selector").get<std::string>();
    record.content = j.at("content").get<std::string>();
    if (j.contains("consent_tag_hash"))
      record.consent_tag_hash = j.at("consent_tag_hash").get<std::string>();
    if (j.contains("consent_tag_sig"))
      record.consent_tag_sig = j.at("consent_tag_sig").get<std::string>();
    record.crawl_time = j.at("crawl_time").get<std::int64_t>();
    record.crawler = j.at("crawler").get<std::string>();
    record.masked = j.at("masked").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("malformed record: ") + e.what());
  }
  if (record.consent_tag_hash.has_value() !=
      record.consent_tag_sig.has_value())
    throw DatasetError("record has a lone tag field: " + line);
  return record;
}

WriteSummary write_dataset(std::span<const DatasetRecord> records,
                           const std::string& path) {
  gzFile file = gzopen(path.c_str(), "wb");
  if (!file) throw DatasetError("cannot open " + path + " for writing");
  for (const auto& record : records) {
    std::string line = record_to_line(record);
    line.push_back('\n');
    if (gzwrite(file, line.data(), static_cast<unsigned>(line.size())) <= 0) {
      gzclose(file);
      std::filesystem::remove(path);
      throw DatasetError("write failed for " + path);
    }
  }
  if (gzclose(file) != Z_OK) {
    std::filesystem::remove(path);
    throw DatasetError("close failed for " + path);
  }
  WriteSummary summary;
  summary.record_count = records.size();
  summary.compressed_bytes =
      static_cast<std::size_t>(std::filesystem::file_size(path));
  return summary;
}

std::vector<DatasetRecord> read_dataset(const std::string& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (!file) throw DatasetError("cannot open " + path);
  std::vector<DatasetRecord> records;
  std::string pending;
  char buffer[1 << 16];
  int n;
  while ((n = gzread(file, buffer, sizeof buffer)) > 0) {
    pending.append(buffer, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (;;) {
      std::size_t eol = pending.find('\n', start);
      if (eol == std::string::npos) break;
      std::string line = pending.substr(start, eol - start);
      if (!line.empty()) records.push_back(record_from_line(line));
      start = eol + 1;
    }
    pending.erase(0, start);
  }
  bool truncated = n < 0;
  gzclose(file);
  if (truncated) throw DatasetError("corrupt gzip stream in " + path);
  if (!pending.empty()) records.push_back(record_from_line(pending));
  return records;
}

}  // namespace fishnet::dataset
