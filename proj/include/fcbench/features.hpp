#pragma once

#include <array>
#include <cctype>
#include <cstddef>
#include <string_view>
#include <vector>

namespace fcb {

using FeatureVector = std::vector<double>;

inline constexpr std::size_t kUrlFeatureCount = 20;

// Lexical features, fixed order:
//   0 total length        1 hostname length     2 path length
//   3..14 counts of . - _ / ? = @ & ! ~ % +
//   15 digits             16 letters            17 directories
//   18 IP-literal host    19 query length
inline constexpr std::array<char, 12> kUrlCountedChars = {'.', '-', '_', '/', '?', '=', '@', '&', '!', '~', '%', '+'};

namespace detail {

struct UrlParts {
  std::string_view host;
  std::string_view path;
  std::string_view query;
};

// Best-effort split; anything unparseable leaves the part empty.
inline UrlParts split_url(std::string_view url) {
  UrlParts parts;
  std::string_view rest = url;
  if (auto scheme = rest.find("://"); scheme != std::string_view::npos) rest.remove_prefix(scheme + 3);

  std::size_t host_end = rest.find_first_of("/?#");
  if (host_end == std::string_view::npos) host_end = rest.size();
  std::string_view authority = rest.substr(0, host_end);
  if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
  if (!authority.empty() && authority.front() == '[') {
    auto close = authority.find(']');
    parts.host = authority.substr(0, close == std::string_view::npos ? authority.size() : close + 1);
  } else {
    parts.host = authority.substr(0, authority.find(':'));
  }

  rest.remove_prefix(host_end);
  if (auto frag = rest.find('#'); frag != std::string_view::npos) rest = rest.substr(0, frag);
  const std::size_t q = rest.find('?');
  parts.path = rest.substr(0, q);
  if (q != std::string_view::npos) parts.query = rest.substr(q + 1);
  return parts;
}

inline bool is_ip_literal(std::string_view host) {
  if (host.empty()) return false;
  if (host.front() == '[') return true;
  int dots = 0, digits_in_group = 0;
  for (char c : host) {
    if (c == '.') {
      if (digits_in_group == 0) return false;
      ++dots;
      digits_in_group = 0;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      if (++digits_in_group > 3) return false;
    } else {
      return false;
    }
  }
  return dots == 3 && digits_in_group > 0;
}

}  // namespace detail

inline FeatureVector featurize_url(std::string_view url) {
  FeatureVector f(kUrlFeatureCount, 0.0);
  const auto parts = detail::split_url(url);

  f[0] = static_cast<double>(url.size());
  f[1] = static_cast<double>(parts.host.size());
  f[2] = static_cast<double>(parts.path.size());
  for (char c : url) {
    for (std::size_t i = 0; i < kUrlCountedChars.size(); ++i) {
      if (c == kUrlCountedChars[i]) f[3 + i] += 1;
    }
    const auto uc = static_cast<unsigned char>(c);
    if (std::isdigit(uc)) f[15] += 1;
    if (std::isalpha(uc)) f[16] += 1;
  }

  std::size_t dirs = 0;
  bool in_segment = false;
  for (char c : parts.path) {
    if (c == '/') {
      in_segment = false;
    } else if (!in_segment) {
      in_segment = true;
      ++dirs;
    }
  }
  f[17] = static_cast<double>(dirs);
  f[18] = detail::is_ip_literal(parts.host) ? 1.0 : 0.0;
  f[19] = static_cast<double>(parts.query.size());
  return f;
}

}  // namespace fcb
