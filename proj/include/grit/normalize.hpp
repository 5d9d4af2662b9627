#pragma once

#include <cctype>
#include <string>
#include <string_view>

namespace grit {

// Canonical form used when comparing mention strings: lowercase,
// whitespace runs collapsed to single spaces, leading/trailing
// punctuation and whitespace stripped. Idempotent.
inline std::string normalize_mention(std::string_view text) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto is_punct = [](unsigned char c) { return std::ispunct(c) != 0; };

  std::size_t begin = 0, end = text.size();
  while (begin < end && (is_space(text[begin]) || is_punct(text[begin]))) ++begin;
  while (end > begin && (is_space(text[end - 1]) || is_punct(text[end - 1]))) --end;

  std::string out;
  out.reserve(end - begin);
  bool pending_space = false;
  for (std::size_t i = begin; i < end; ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

}  // namespace grit
