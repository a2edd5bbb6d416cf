#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fishnet::consent {

// Header and attribute names are wire contracts; do not change.
inline constexpr const char* kConfigHeader = "X-Consent-Config";
inline constexpr const char* kTagHashHeader = "X-Consent-Tag-Hash";
inline constexpr const char* kTagSigHeader = "X-Consent-Tag-Sig";
inline constexpr const char* kNonCrawlableHeader = "X-Non-Crawlable";
inline constexpr const char* kHashAttribute = "consent-tag-hash";
inline constexpr const char* kSigAttribute = "consent-tag-sig";

inline constexpr const char* kMaskPlaceholder =
    "[content withheld by consent policy]";

enum class Flag { deny = 0, allow = 1 };

struct ConfigParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-datum crawler allow/deny map. Names are exact, case-sensitive tokens;
// the default rule always exists after parsing (allow when absent).
struct ConsentConfig {
  std::map<std::string, Flag> rules;
  Flag default_rule = Flag::allow;

  bool operator==(const ConsentConfig&) const = default;
};

// The pair (H_d, S_d): content digest plus the owner's signature over it.
struct ConsentTag {
  std::string hash_hex;  // 64 lowercase hex chars
  std::string sig_hex;

  bool operator==(const ConsentTag&) const = default;
};

struct TaggedContent {
  std::string content;
  std::optional<ConsentTag> tag;
  std::optional<ConsentConfig> config;
  bool masked = false;

  bool operator==(const TaggedContent&) const = default;
};

// Parses the `name:flag;...` header grammar. Throws ConfigParseError naming
// the offending token on malformed pairs, flags outside {0,1}, empty or
// duplicate names.
ConsentConfig parse_consent_config(std::string_view text);

// Canonical form: rules in lexicographic name order, `default` entry last.
// parse(serialize(c)) == c.
std::string serialize_consent_config(const ConsentConfig& config);

Flag check_consent(const ConsentConfig& config, std::string_view crawler_name);

// Replaces content with the fixed placeholder and drops tag and config.
// Idempotent.
TaggedContent mask_content(TaggedContent item);

// Throws std::logic_error when the item is already masked.
TaggedContent attach_tag(TaggedContent item, ConsentTag tag);

}  // namespace fishnet::consent
