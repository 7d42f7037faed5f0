#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tapt {

/// Word-level vocabulary with fixed special ids.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kMask = 4;
  static constexpr int kNumSpecial = 5;

  Vocab();

  /// Counts case-folded whitespace-separated words over `lines`; words with at
  /// least `min_count` occurrences get ids by descending count, then byte
  /// order.
  static Vocab build(std::span<const std::string> lines, std::size_t min_count = 1);

  /// Tokens in id order; the first five must be the special tokens.
  static Vocab from_tokens(std::vector<std::string> tokens);

  /// Id of an already case-folded word; UNK when absent or special.
  int id(std::string_view word) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  static bool is_special(int id) { return id >= 0 && id < kNumSpecial; }

  /// FNV-1a over the newline-terminated token list, as 16 hex digits.
  std::string hash() const;

  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static Vocab parse(std::istream& in, const std::string& source = "<vocab>");
  static Vocab load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Whitespace split with ASCII case folding.
std::vector<std::string> split_words(std::string_view text);

/// [CLS] + word ids + [SEP], truncated so the total is at most max_len.
std::vector<int> encode_ids(const Vocab& vocab, std::string_view text, int max_len = 128);

}  // namespace tapt
