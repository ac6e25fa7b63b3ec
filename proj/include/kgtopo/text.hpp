#pragma once

// String helpers shared by the loaders, prompt renderer and answer parsers.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgtopo::text {

inline constexpr std::string_view kArrow = " --> ";

inline bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

/// Trims and collapses every interior whitespace run to one space.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

/// ASCII case folding; bytes >= 0x80 pass through untouched.
inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && ascii_lower(a) == ascii_lower(b);
}

/// Matching key for entity labels: trimmed, whitespace-collapsed, case-folded.
inline std::string normalize_entity(std::string_view s) {
  return ascii_lower(collapse_whitespace(s));
}

/// Category label normalization: lowercase, words joined by underscores.
inline std::string normalize_category(std::string_view s) {
  std::string out = ascii_lower(collapse_whitespace(s));
  std::replace(out.begin(), out.end(), ' ', '_');
  return out;
}

inline std::vector<std::string> split(std::string_view s, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + sep.size();
  }
}

inline std::string join(std::span<const std::string> parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i != 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

/// "[a, b, c]": the bracketed presentation used for list-valued prompt hints.
inline std::string bracket_list(std::span<const std::string> items) {
  return "[" + join(items, ", ") + "]";
}

/// "['a', 'b']": the quoted list shape the prompts ask the model to answer with.
inline std::string quoted_list(std::span<const std::string> items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i != 0) out.append(", ");
    out.push_back('\'');
    out.append(items[i]);
    out.push_back('\'');
  }
  out.push_back(']');
  return out;
}

/// 20960 -> "20,960".
inline std::string with_thousands(std::uint64_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  const std::size_t lead = digits.size() % 3;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i != 0 && i >= lead && (i - lead) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return out;
}

namespace detail {

inline std::size_t skip_space(std::string_view s, std::size_t i) {
  while (i < s.size() && is_space(s[i])) ++i;
  return i;
}

// Parses a quoted-item list whose '[' sits at `open`. A quote closes an item
// only when the next non-space character is ',' or ']', so apostrophes inside
// labels ("People's Republic") survive.
inline std::optional<std::vector<std::string>> parse_quoted_list_at(std::string_view s,
                                                                   std::size_t open) {
  std::vector<std::string> items;
  std::size_t i = skip_space(s, open + 1);
  while (true) {
    if (i >= s.size()) return std::nullopt;
    const char quote = s[i];
    if (quote != '\'' && quote != '"') return std::nullopt;
    std::size_t j = i + 1;
    std::optional<std::size_t> close;
    while (j < s.size()) {
      if (s[j] == quote) {
        const std::size_t k = skip_space(s, j + 1);
        if (k < s.size() && (s[k] == ',' || s[k] == ']')) {
          close = j;
          break;
        }
      }
      ++j;
    }
    if (!close) return std::nullopt;
    items.emplace_back(s.substr(i + 1, *close - i - 1));
    i = skip_space(s, *close + 1);
    if (s[i] == ']') return items;
    i = skip_space(s, i + 1);  // past ','
  }
}

}  // namespace detail

/// First bracketed list of quoted items for which `accept(items)` holds.
template <typename Pred>
std::optional<std::vector<std::string>> find_quoted_list(std::string_view s, Pred accept) {
  for (std::size_t pos = s.find('['); pos != std::string_view::npos; pos = s.find('[', pos + 1)) {
    if (auto items = detail::parse_quoted_list_at(s, pos); items && accept(*items)) {
      return items;
    }
  }
  return std::nullopt;
}

inline std::optional<std::vector<std::string>> find_quoted_list(std::string_view s) {
  return find_quoted_list(s, [](const std::vector<std::string>& v) { return !v.empty(); });
}

}  // namespace kgtopo::text
