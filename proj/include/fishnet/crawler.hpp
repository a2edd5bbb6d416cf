#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fishnet/crypto.hpp"
#include "fishnet/dataset.hpp"
#include "fishnet/robots.hpp"

namespace fishnet::crawler {

struct CrawlerIdentity {
  std::string name;        // registered agent token, also the User-Agent
  crypto::KeyPair key;     // signs keccak256(timestamp string)
};

struct CrawlSettings {
  std::size_t max_pages = 64;
  robots::BackoffPolicy backoff;
  bool follow_links = true;  // same-host <a href> discovery
  std::int64_t now_seconds = 0;  // 0 = wall clock
};

struct CrawlReport {
  std::vector<dataset::DatasetRecord> records;
  std::vector<std::string> fetched_urls;
  std::vector<std::string> skipped_disallowed;
  std::vector<std::string> warnings;
};

// Extracts every `post-body` element from a static HTML page, copying the
// consent-tag attributes when present. Masked placeholders are recorded with
// masked=true and no tag.
std::vector<dataset::DatasetRecord> extract_post_bodies(
    const std::string& html, const std::string& url,
    const std::string& crawler_name, std::int64_t crawl_time);

std::vector<std::string> extract_links(const std::string& html);

// Polite crawl: robots.txt first, per-host sequential pacing via
// next_fetch_delay, signed-timestamp identification on every request.
CrawlReport crawl_site(const std::vector<std::string>& seeds,
                       const CrawlerIdentity& identity,
                       const CrawlSettings& settings = {});

}  // namespace fishnet::crawler
