#include "fishnet/crawler.hpp"

#include <httplib.h>

#include <cctype>
#include <chrono>
#include <ctime>
#include <map>
#include <set>
#include <thread>

#include "fishnet/consent.hpp"
#include "fishnet/hex.hpp"
#include "fishnet/html.hpp"
#include "fishnet/keccak.hpp"

namespace fishnet::crawler {

namespace {

std::string trim(std::string s) {
  std::size_t begin = s.find_first_not_of(" \t\r\n");
  std::size_t end = s.find_last_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  return s.substr(begin, end - begin + 1);
}

// Minimal attribute scanner for the tag soup between "<p" and ">".
std::map<std::string, std::string> parse_attributes(std::string_view text) {
  std::map<std::string, std::string> attrs;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    std::size_t name_start = i;
    while (i < text.size() && text[i] != '=' && text[i] != '>' &&
           !std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    if (i >= text.size() || text[i] != '=') continue;
    std::string name(text.substr(name_start, i - name_start));
    ++i;
    if (i >= text.size() || text[i] != '"') continue;
    ++i;
    std::size_t value_start = i;
    while (i < text.size() && text[i] != '"') ++i;
    attrs[name] = html::unescape(text.substr(value_start, i - value_start));
    if (i < text.size()) ++i;
  }
  return attrs;
}

bool split_url(const std::string& url, std::string& origin,
               std::string& path_query) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) return false;
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    origin = url;
    path_query = "/";
  } else {
    origin = url.substr(0, path_start);
    path_query = url.substr(path_start);
  }
  return true;
}

std::string path_only(const std::string& path_query) {
  auto q = path_query.find('?');
  return q == std::string::npos ? path_query : path_query.substr(0, q);
}

}  // namespace

std::vector<dataset::DatasetRecord> extract_post_bodies(
    const std::string& html_text, const std::string& url,
    const std::string& crawler_name, std::int64_t crawl_time) {
  std::vector<dataset::DatasetRecord> records;
  std::size_t pos = 0;
  while ((pos = html_text.find("<p", pos)) != std::string::npos) {
    std::size_t tag_end = html_text.find('>', pos);
    if (tag_end == std::string::npos) break;
    auto attrs = parse_attributes(
        std::string_view(html_text).substr(pos + 2, tag_end - pos - 2));
    pos = tag_end + 1;
    auto cls = attrs.find("class");
    if (cls == attrs.end() ||
        cls->second.find("post-body") == std::string::npos)
      continue;
    std::size_t close = html_text.find("</p>", pos);
    if (close == std::string::npos) break;
    std::string content =
        trim(html::unescape(html_text.substr(pos, close - pos)));
    pos = close + 4;

    dataset::DatasetRecord record;
    record.url = url;
    record.selector = "p.post-body";
    record.content = content;
    record.crawl_time = crawl_time;
    record.crawler = crawler_name;
    auto hash = attrs.find(consent::kHashAttribute);
    auto sig = attrs.find(consent::kSigAttribute);
    if (hash != attrs.end() && sig != attrs.end()) {
      record.consent_tag_hash = hash->second;
      record.consent_tag_sig = sig->second;
    }
    record.masked = !record.consent_tag_hash &&
                    content == consent::kMaskPlaceholder;
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<std::string> extract_links(const std::string& html_text) {
  std::vector<std::string> links;
  std::size_t pos = 0;
  while ((pos = html_text.find("<a", pos)) != std::string::npos) {
    std::size_t tag_end = html_text.find('>', pos);
    if (tag_end == std::string::npos) break;
    auto attrs = parse_attributes(
        std::string_view(html_text).substr(pos + 2, tag_end - pos - 2));
    auto href = attrs.find("href");
    if (href != attrs.end() && !href->second.empty())
      links.push_back(href->second);
    pos = tag_end + 1;
  }
  return links;
}

CrawlReport crawl_site(const std::vector<std::string>& seeds,
                       const CrawlerIdentity& identity,
                       const CrawlSettings& settings) {
  CrawlReport report;
  std::int64_t now = settings.now_seconds ? settings.now_seconds
                                          : std::time(nullptr);

  // Group seed paths by origin; each host is crawled sequentially.
  std::map<std::string, std::vector<std::string>> by_origin;
  for (const auto& seed : seeds) {
    std::string origin, path;
    if (!split_url(seed, origin, path)) {
      report.warnings.push_back("unparseable seed url: " + seed);
      continue;
    }
    by_origin[origin].push_back(path);
  }

  std::string timestamp = std::to_string(now);
  std::string timestamp_sig =
      hex_encode(crypto::sign_digest(identity.key, keccak256(timestamp)));
  httplib::Headers id_headers{
      {"User-Agent", identity.name + "/1.0"},
      {"X-Crawler-Timestamp", timestamp},
      {"X-Crawler-Sig", timestamp_sig},
  };

  for (auto& [origin, paths] : by_origin) {
    httplib::Client http(origin);
    http.set_connection_timeout(5);
    http.set_read_timeout(10);

    std::optional<std::chrono::milliseconds> last_delay;
    std::chrono::milliseconds last_rt{0};
    int last_status = 200;
    bool first_request = true;

    auto paced_get = [&](const std::string& path) -> httplib::Result {
      auto delay = robots::next_fetch_delay(
          first_request ? std::nullopt : last_delay, last_rt, last_status,
          settings.backoff);
      if (!first_request) std::this_thread::sleep_for(delay);
      if (first_request) delay = settings.backoff.min_delay;
      last_delay = delay;
      auto begin = std::chrono::steady_clock::now();
      auto res = http.Get(path, id_headers);
      last_rt = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - begin);
      last_status = res ? res->status : 503;
      first_request = false;
      return res;
    };

    robots::RobotsPolicy policy;
    auto robots_res = paced_get("/robots.txt");
    if (robots_res && robots_res->status == 200) {
      policy = robots::parse_robots(robots_res->body);
      policy.source_host = origin;
    } else {
      report.warnings.push_back("robots.txt unavailable for " + origin +
                                "; treating as allow-all");
    }

    std::vector<std::string> queue = paths;
    std::set<std::string> seen;
    std::size_t fetched = 0;
    while (!queue.empty() && fetched < settings.max_pages) {
      std::string path = queue.front();
      queue.erase(queue.begin());
      if (!seen.insert(path).second) continue;
      if (!robots::is_path_allowed(policy, identity.name, path_only(path))) {
        report.skipped_disallowed.push_back(origin + path);
        continue;
      }
      auto res = paced_get(path);
      ++fetched;
      if (!res || res->status != 200) {
        report.warnings.push_back("fetch failed for " + origin + path);
        continue;
      }
      report.fetched_urls.push_back(origin + path);
      auto records =
          extract_post_bodies(res->body, origin + path, identity.name, now);
      report.records.insert(report.records.end(), records.begin(),
                            records.end());
      if (settings.follow_links) {
        for (auto& link : extract_links(res->body)) {
          if (link.starts_with("/")) {
            queue.push_back(link);
          } else {
            std::string link_origin, link_path;
            if (split_url(link, link_origin, link_path) &&
                link_origin == origin)
              queue.push_back(link_path);
          }
        }
      }
    }
  }
  return report;
}

}  // namespace fishnet::crawler
