#include "tapt/utf8.hpp"

namespace tapt::utf8 {

std::vector<Codepoint> decode(std::string_view text) {
  std::vector<Codepoint> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= text.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
      } else {
        cp = (cp << 6) | (b & 0x3F);
      }
    }
    if (!ok) {
      out.push_back({U'�', i, 1});
      ++i;
      continue;
    }
    out.push_back({cp, i, len});
    i += len;
  }
  return out;
}

std::size_t length(std::string_view text) { return decode(text).size(); }

bool is_emoji_base(char32_t c) {
  return (c >= 0x1F600 && c <= 0x1F64F) ||  // emoticons
         (c >= 0x1F300 && c <= 0x1F5FF) ||  // misc symbols and pictographs
         (c >= 0x1F900 && c <= 0x1F9FF) ||  // supplemental symbols and pictographs
         (c >= 0x1F680 && c <= 0x1F6FF) ||  // transport and map
         (c >= 0x2600 && c <= 0x26FF) || (c >= 0x2700 && c <= 0x27BF);
}

bool is_emoji_extender(char32_t c) {
  return c == 0xFE0E || c == 0xFE0F || (c >= 0x1F3FB && c <= 0x1F3FF) || c == 0x20E3 ||
         (c >= 0xE0020 && c <= 0xE007F);
}

std::size_t emoji_cluster_size(const std::vector<Codepoint>& cps, std::size_t i) {
  std::size_t j = i + 1;
  while (j < cps.size()) {
    if (is_emoji_extender(cps[j].value)) {
      ++j;
    } else if (cps[j].value == 0x200D && j + 1 < cps.size()) {
      j += 2;
    } else {
      break;
    }
  }
  return j - i;
}

bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f' || c == 0x00A0 ||
         c == 0x2028 || c == 0x2029 || c == 0x3000 || (c >= 0x2000 && c <= 0x200A);
}

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (char& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

}  // namespace tapt::utf8
