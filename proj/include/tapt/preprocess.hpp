#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tapt {

enum class TokenKind { Word, Emoji, Hashtag, Mention, Url, Number, Reserved, Smiley };

std::string_view to_string(TokenKind kind);

struct ClassifiedToken {
  std::string surface;
  TokenKind kind;

  bool operator==(const ClassifiedToken&) const = default;
};

/// Splits a post into classified tokens.
///
/// Whitespace separates chunks. A chunk that looks like a URL (http://,
/// https://, www.) or is one of the ASCII smileys is kept whole. Otherwise
/// emoji clusters are cut out as their own tokens and the remaining text runs
/// are split on ',', ':' and ';', except runs starting with '#' or '@', which
/// stay intact apart from trailing separators. Text pieces are RESERVED for
/// "RT"/"FAV", NUMBER when they contain a digit, WORD otherwise.
std::vector<ClassifiedToken> tokenize_raw(std::string_view text);

/// WORD surfaces in order, single-space joined.
std::string clean_text(std::span<const ClassifiedToken> tokens);

/// Unigram counts keyed by lowercase word.
class FreqDict {
 public:
  FreqDict() = default;

  /// Adds `count` (> 0) occurrences of `word`, case-folded.
  void add(std::string_view word, std::uint64_t count);

  std::uint64_t count(std::string_view word) const;
  std::uint64_t total() const { return total_; }
  std::size_t size() const { return counts_.size(); }

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Score of one segment under the unigram model: log(count/total) for known
/// words, log(1 / (total * 10^len)) otherwise, with len in codepoints. An empty
/// dictionary scores as if total were 1.
double segment_word_score(std::string_view word, const FreqDict& dict);

/// Splits a hashtag into words by dynamic programming over the case-folded
/// body, maximising the summed segment_word_score. Ties prefer fewer words,
/// then the lexicographically smallest word sequence. Throws
/// std::invalid_argument for a missing '#', an empty body or embedded
/// whitespace.
std::string segment_hashtag(std::string_view tag, const FreqDict& dict);

/// Emoji cluster to embedding vector; every vector has length dim().
class EmojiTable {
 public:
  explicit EmojiTable(int dim = 300);

  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }

  /// Throws std::invalid_argument on a length mismatch.
  void insert(std::string emoji, Eigen::VectorXf vec);
  const Eigen::VectorXf* find(std::string_view emoji) const;

 private:
  int dim_;
  std::unordered_map<std::string, Eigen::VectorXf> entries_;
};

/// Component-wise mean over the emojis that have a vector; zero when none do.
Eigen::VectorXf mean_emoji_vector(std::span<const std::string> emojis, const EmojiTable& table);

struct FeatureBundle {
  std::string cleaned_text;
  std::string hashtag_flow;
  Eigen::VectorXf emoji_vec;
  std::size_t emoji_count = 0;
};

FeatureBundle extract_features(std::string_view text, const FreqDict& dict, const EmojiTable& table);

/// "<count> <dim>" header, then "<emoji> <f_1> ... <f_dim>" per line.
EmojiTable parse_emoji_table(std::istream& in, const std::string& source = "<emoji table>");
EmojiTable load_emoji_table(const std::filesystem::path& path);

/// "<word>\t<count>" per line.
FreqDict parse_freq_dict(std::istream& in, const std::string& source = "<dictionary>");
FreqDict load_freq_dict(const std::filesystem::path& path);

}  // namespace tapt
