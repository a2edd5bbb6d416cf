#pragma once

#include <string>
#include <string_view>

namespace fishnet::html {

inline std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string unescape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '&') {
      auto rest = text.substr(i);
      if (rest.starts_with("&amp;")) { out.push_back('&'); i += 5; continue; }
      if (rest.starts_with("&lt;")) { out.push_back('<'); i += 4; continue; }
      if (rest.starts_with("&gt;")) { out.push_back('>'); i += 4; continue; }
      if (rest.starts_with("&quot;")) { out.push_back('"'); i += 6; continue; }
    }
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

}  // namespace fishnet::html
