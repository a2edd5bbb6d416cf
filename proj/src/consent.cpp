#include "fishnet/consent.hpp"

#include <sstream>

namespace fishnet::consent {

namespace {

constexpr std::string_view kDefaultToken = "default";

Flag parse_flag(std::string_view name, std::string_view flag) {
  if (flag == "0") return Flag::deny;
  if (flag == "1") return Flag::allow;
  throw ConfigParseError("flag for \"" + std::string(name) +
                         "\" must be 0 or 1, got \"" + std::string(flag) +
                         "\"");
}

}  // namespace

ConsentConfig parse_consent_config(std::string_view text) {
  ConsentConfig config;
  bool saw_default = false;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(';', pos);
    std::string_view pair = text.substr(
        pos, end == std::string_view::npos ? std::string_view::npos
                                           : end - pos);
    std::size_t colon = pair.find(':');
    if (colon == std::string_view::npos)
      throw ConfigParseError("malformed pair \"" + std::string(pair) + "\"");
    std::string_view name = pair.substr(0, colon);
    std::string_view flag = pair.substr(colon + 1);
    if (name.empty())
      throw ConfigParseError("empty crawler name in \"" + std::string(pair) +
                             "\"");
    if (flag.find(':') != std::string_view::npos)
      throw ConfigParseError("malformed pair \"" + std::string(pair) + "\"");

    Flag value = parse_flag(name, flag);
    if (name == kDefaultToken) {
      if (saw_default)
        throw ConfigParseError("duplicate default entry");
      saw_default = true;
      config.default_rule = value;
    } else {
      auto [it, inserted] = config.rules.emplace(name, value);
      if (!inserted)
        throw ConfigParseError("duplicate crawler name \"" +
                               std::string(name) + "\"");
    }

    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  if (!saw_default) config.default_rule = Flag::allow;
  return config;
}

std::string serialize_consent_config(const ConsentConfig& config) {
  std::ostringstream out;
  for (const auto& [name, flag] : config.rules)
    out << name << ':' << (flag == Flag::allow ? '1' : '0') << ';';
  out << kDefaultToken << ':'
      << (config.default_rule == Flag::allow ? '1' : '0');
  return out.str();
}

Flag check_consent(const ConsentConfig& config,
                   std::string_view crawler_name) {
  auto it = config.rules.find(std::string(crawler_name));
  return it != config.rules.end() ? it->second : config.default_rule;
}

TaggedContent mask_content(TaggedContent item) {
  item.content = kMaskPlaceholder;
  item.tag.reset();
  item.config.reset();
  item.masked = true;
  return item;
}

TaggedContent attach_tag(TaggedContent item, ConsentTag tag) {
  if (item.masked)
    throw std::logic_error("cannot attach a consent tag to masked content");
  item.tag = std::move(tag);
  return item;
}

}  // namespace fishnet::consent
