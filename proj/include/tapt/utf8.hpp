#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace tapt::utf8 {

struct Codepoint {
  char32_t value;
  std::size_t offset;  // byte offset in the source string
  std::size_t length;  // encoded length in bytes
};

/// Decodes UTF-8; each invalid byte becomes U+FFFD of length 1.
std::vector<Codepoint> decode(std::string_view text);

std::size_t length(std::string_view text);

/// Base codepoints that start an emoji grapheme: Emoticons, Misc Symbols and
/// Pictographs, Supplemental Symbols and Pictographs, Transport and Map,
/// Misc Symbols (U+2600-26FF) and Dingbats (U+2700-27BF).
bool is_emoji_base(char32_t c);

/// Codepoints that extend the preceding emoji: variation selectors, skin-tone
/// modifiers, the combining keycap and tag characters. ZWJ is handled by the
/// cluster scanner since it also pulls in the following codepoint.
bool is_emoji_extender(char32_t c);

/// Number of codepoints in the emoji cluster starting at cps[i], which must
/// be an emoji base.
std::size_t emoji_cluster_size(const std::vector<Codepoint>& cps, std::size_t i);

bool is_space(char32_t c);

/// ASCII-only case folding; other scripts pass through untouched.
std::string ascii_lower(std::string_view text);

}  // namespace tapt::utf8
