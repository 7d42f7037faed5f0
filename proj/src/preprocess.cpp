#include "tapt/preprocess.hpp"

#include "tapt/errors.hpp"
#include "tapt/utf8.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace tapt {

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Word: return "WORD";
    case TokenKind::Emoji: return "EMOJI";
    case TokenKind::Hashtag: return "HASHTAG";
    case TokenKind::Mention: return "MENTION";
    case TokenKind::Url: return "URL";
    case TokenKind::Number: return "NUMBER";
    case TokenKind::Reserved: return "RESERVED";
    case TokenKind::Smiley: return "SMILEY";
  }
  return "";
}

namespace {

constexpr std::array<std::string_view, 6> kSmileys = {":)", ":(", ":D", ";)", ":P", ":/"};

bool is_separator(char c) { return c == ',' || c == ':' || c == ';'; }

bool looks_like_url(std::string_view chunk) {
  const std::string lower = utf8::ascii_lower(chunk.substr(0, 8));
  return lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.");
}

bool has_digit(std::string_view piece) {
  for (const auto& cp : utf8::decode(piece)) {
    if ((cp.value >= '0' && cp.value <= '9') || (cp.value >= 0x0966 && cp.value <= 0x096F)) return true;
  }
  return false;
}

void emit_piece(std::string_view piece, std::vector<ClassifiedToken>& out) {
  if (piece.empty()) return;
  TokenKind kind = TokenKind::Word;
  if (piece == "RT" || piece == "FAV") {
    kind = TokenKind::Reserved;
  } else if (has_digit(piece)) {
    kind = TokenKind::Number;
  }
  out.push_back({std::string(piece), kind});
}

void emit_text_run(std::string_view run, std::vector<ClassifiedToken>& out) {
  if (run.empty()) return;
  if (run.front() == '#' || run.front() == '@') {
    while (!run.empty() && is_separator(run.back())) run.remove_suffix(1);
    if (run.size() > 1) {
      out.push_back({std::string(run), run.front() == '#' ? TokenKind::Hashtag : TokenKind::Mention});
      return;
    }
  }
  std::size_t start = 0;
  for (std::size_t i = 0; i <= run.size(); ++i) {
    if (i == run.size() || is_separator(run[i])) {
      emit_piece(run.substr(start, i - start), out);
      start = i + 1;
    }
  }
}

void emit_chunk(std::string_view chunk, std::vector<ClassifiedToken>& out) {
  if (looks_like_url(chunk)) {
    out.push_back({std::string(chunk), TokenKind::Url});
    return;
  }
  for (auto s : kSmileys) {
    if (chunk == s) {
      out.push_back({std::string(chunk), TokenKind::Smiley});
      return;
    }
  }
  const auto cps = utf8::decode(chunk);
  std::size_t run_start = 0;
  std::size_t i = 0;
  while (i < cps.size()) {
    if (!utf8::is_emoji_base(cps[i].value)) {
      ++i;
      continue;
    }
    const std::size_t n = utf8::emoji_cluster_size(cps, i);
    const std::size_t begin = cps[i].offset;
    const std::size_t end = cps[i + n - 1].offset + cps[i + n - 1].length;
    emit_text_run(chunk.substr(run_start, begin - run_start), out);
    out.push_back({std::string(chunk.substr(begin, end - begin)), TokenKind::Emoji});
    run_start = end;
    i += n;
  }
  emit_text_run(chunk.substr(run_start), out);
}

}  // namespace

std::vector<ClassifiedToken> tokenize_raw(std::string_view text) {
  std::vector<ClassifiedToken> out;
  const auto cps = utf8::decode(text);
  std::size_t chunk_start = 0;
  bool in_chunk = false;
  for (const auto& cp : cps) {
    if (utf8::is_space(cp.value)) {
      if (in_chunk) emit_chunk(text.substr(chunk_start, cp.offset - chunk_start), out);
      in_chunk = false;
    } else if (!in_chunk) {
      in_chunk = true;
      chunk_start = cp.offset;
    }
  }
  if (in_chunk) emit_chunk(text.substr(chunk_start), out);
  return out;
}

std::string clean_text(std::span<const ClassifiedToken> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::Word) continue;
    if (!out.empty()) out += ' ';
    out += t.surface;
  }
  return out;
}

// --- hashtag segmentation ---------------------------------------------------

void FreqDict::add(std::string_view word, std::uint64_t count) {
  if (count == 0) throw std::invalid_argument("FreqDict: count must be positive");
  counts_[utf8::ascii_lower(word)] += count;
  total_ += count;
}

std::uint64_t FreqDict::count(std::string_view word) const {
  auto it = counts_.find(std::string(word));
  return it == counts_.end() ? 0 : it->second;
}

double segment_word_score(std::string_view word, const FreqDict& dict) {
  const double total = static_cast<double>(dict.total() == 0 ? 1 : dict.total());
  const std::uint64_t c = dict.count(word);
  if (c > 0) return std::log(static_cast<double>(c) / total);
  return -std::log(total) - static_cast<double>(utf8::length(word)) * std::log(10.0);
}

std::string segment_hashtag(std::string_view tag, const FreqDict& dict) {
  if (tag.empty() || tag.front() != '#') throw std::invalid_argument("hashtag must start with '#'");
  const std::string body = utf8::ascii_lower(tag.substr(1));
  if (body.empty()) throw std::invalid_argument("hashtag body is empty");
  const auto cps = utf8::decode(body);
  for (const auto& cp : cps) {
    if (utf8::is_space(cp.value)) throw std::invalid_argument("hashtag body contains whitespace");
  }

  struct Best {
    bool reached = false;
    double score = 0;
    std::vector<std::string> words;
  };
  const std::size_t n = cps.size();
  auto byte_at = [&](std::size_t i) { return i == n ? body.size() : cps[i].offset; };

  std::vector<Best> best(n + 1);
  best[0].reached = true;
  for (std::size_t end = 1; end <= n; ++end) {
    for (std::size_t start = 0; start < end; ++start) {
      const Best& prefix = best[start];
      if (!prefix.reached) continue;
      std::string word = body.substr(byte_at(start), byte_at(end) - byte_at(start));
      const double score = prefix.score + segment_word_score(word, dict);
      Best& cur = best[end];
      // Sums of the same logs in a different order differ by rounding only.
      const bool tie = cur.reached && std::abs(score - cur.score) <= 1e-9 * std::max(1.0, std::abs(score));
      bool better = !cur.reached || (!tie && score > cur.score);
      if (tie) {
        const std::size_t words = prefix.words.size() + 1;
        if (words != cur.words.size()) {
          better = words < cur.words.size();
        } else {
          std::vector<std::string> candidate = prefix.words;
          candidate.push_back(word);
          better = candidate < cur.words;
        }
      }
      if (better) {
        cur.reached = true;
        cur.score = score;
        cur.words = prefix.words;
        cur.words.push_back(std::move(word));
      }
    }
  }

  std::string out;
  for (const auto& w : best[n].words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

// --- emoji ------------------------------------------------------------------

EmojiTable::EmojiTable(int dim) : dim_(dim) {
  if (dim <= 0) throw std::invalid_argument("emoji dimension must be positive");
}

void EmojiTable::insert(std::string emoji, Eigen::VectorXf vec) {
  if (vec.size() != dim_) {
    throw std::invalid_argument("emoji vector of length " + std::to_string(vec.size()) + " in table of dim " +
                                std::to_string(dim_));
  }
  entries_.insert_or_assign(std::move(emoji), std::move(vec));
}

const Eigen::VectorXf* EmojiTable::find(std::string_view emoji) const {
  auto it = entries_.find(std::string(emoji));
  return it == entries_.end() ? nullptr : &it->second;
}

Eigen::VectorXf mean_emoji_vector(std::span<const std::string> emojis, const EmojiTable& table) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(table.dim());
  std::size_t found = 0;
  for (const auto& e : emojis) {
    if (const auto* v = table.find(e)) {
      acc += v->cast<double>();
      ++found;
    }
  }
  if (found == 0) return Eigen::VectorXf::Zero(table.dim());
  return (acc / static_cast<double>(found)).cast<float>();
}

FeatureBundle extract_features(std::string_view text, const FreqDict& dict, const EmojiTable& table) {
  const auto tokens = tokenize_raw(text);
  FeatureBundle bundle;
  bundle.cleaned_text = clean_text(tokens);
  std::vector<std::string> emojis;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::Hashtag) {
      if (!bundle.hashtag_flow.empty()) bundle.hashtag_flow += ' ';
      bundle.hashtag_flow += segment_hashtag(t.surface, dict);
    } else if (t.kind == TokenKind::Emoji) {
      emojis.push_back(t.surface);
    }
  }
  bundle.emoji_count = emojis.size();
  bundle.emoji_vec = mean_emoji_vector(emojis, table);
  return bundle;
}

// --- loaders ----------------------------------------------------------------

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) parts.push_back(line.substr(i, j - i));
    i = j;
  }
  return parts;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void chomp(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

EmojiTable parse_emoji_table(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source, 1, "missing \"<count> <dim>\" header");
  chomp(line);
  const auto header = split_spaces(line);
  long long count = 0;
  int dim = 0;
  if (header.size() != 2 || !parse_number(header[0], count) || !parse_number(header[1], dim) || count < 0 ||
      dim <= 0) {
    throw DataError(source, 1, "malformed header \"" + line + "\"");
  }
  EmojiTable table(dim);
  std::size_t lineno = 1;
  long long rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    chomp(line);
    if (line.empty()) continue;
    const auto parts = split_spaces(line);
    if (parts.size() != static_cast<std::size_t>(dim) + 1) {
      throw DataError(source, lineno, "expected " + std::to_string(dim) + " values, found " +
                                          std::to_string(parts.empty() ? 0 : parts.size() - 1));
    }
    Eigen::VectorXf v(dim);
    for (int k = 0; k < dim; ++k) {
      float f = 0;
      if (!parse_number(parts[static_cast<std::size_t>(k) + 1], f)) {
        throw DataError(source, lineno, "malformed number \"" + std::string(parts[static_cast<std::size_t>(k) + 1]) + "\"");
      }
      v(k) = f;
    }
    table.insert(std::string(parts[0]), std::move(v));
    ++rows;
  }
  if (rows != count) {
    throw DataError(source, lineno, "header announces " + std::to_string(count) + " entries, found " +
                                        std::to_string(rows));
  }
  return table;
}

EmojiTable load_emoji_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open emoji table " + path.string());
  return parse_emoji_table(in, path.string());
}

FreqDict parse_freq_dict(std::istream& in, const std::string& source) {
  FreqDict dict;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    chomp(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || line.find('\t', tab + 1) != std::string::npos) {
      throw DataError(source, lineno, "expected \"<word>\\t<count>\"");
    }
    std::uint64_t count = 0;
    std::string_view digits = std::string_view(line).substr(tab + 1);
    if (digits.empty() || digits.front() == '+' || !parse_number(digits, count) || count == 0) {
      throw DataError(source, lineno, "count must be a positive integer");
    }
    dict.add(std::string_view(line).substr(0, tab), count);
  }
  return dict;
}

FreqDict load_freq_dict(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dictionary " + path.string());
  return parse_freq_dict(in, path.string());
}

}  // namespace tapt
