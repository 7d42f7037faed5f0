#include "tapt/vocab.hpp"

#include "tapt/errors.hpp"
#include "tapt/utf8.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

namespace tapt {

namespace {
const std::vector<std::string> kSpecialTokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
}

Vocab::Vocab() : tokens_(kSpecialTokens) {}

Vocab Vocab::build(std::span<const std::string> lines, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& line : lines) {
    for (auto& w : split_words(line)) ++counts[std::move(w)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [w, c] : counts) {
    if (c < min_count) continue;
    if (std::find(kSpecialTokens.begin(), kSpecialTokens.end(), w) != kSpecialTokens.end()) continue;
    ranked.emplace_back(w, c);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = kSpecialTokens;
  for (auto& [w, c] : ranked) tokens.push_back(w);
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kSpecialTokens.size() ||
      !std::equal(kSpecialTokens.begin(), kSpecialTokens.end(), tokens.begin())) {
    throw DataError("vocabulary must start with [PAD] [UNK] [CLS] [SEP] [MASK]");
  }
  Vocab v;
  v.tokens_ = std::move(tokens);
  v.index_.clear();
  for (std::size_t i = kSpecialTokens.size(); i < v.tokens_.size(); ++i) {
    const auto& t = v.tokens_[i];
    if (t.empty() || t.find_first_of(" \t\n") != std::string::npos) {
      throw DataError("vocabulary token " + std::to_string(i) + " is empty or contains whitespace");
    }
    if (!v.index_.emplace(t, static_cast<int>(i)).second) throw DataError("duplicate vocabulary token " + t);
  }
  return v;
}

int Vocab::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

std::string Vocab::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= '\n';
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Vocab::write(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write(out);
}

Vocab Vocab::parse(std::istream& in, const std::string& source) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  try {
    return from_tokens(std::move(tokens));
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  return parse(in, path.string());
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  const auto cps = utf8::decode(text);
  std::size_t start = 0;
  bool in_word = false;
  for (const auto& cp : cps) {
    if (utf8::is_space(cp.value)) {
      if (in_word) out.push_back(utf8::ascii_lower(text.substr(start, cp.offset - start)));
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      start = cp.offset;
    }
  }
  if (in_word) out.push_back(utf8::ascii_lower(text.substr(start)));
  return out;
}

std::vector<int> encode_ids(const Vocab& vocab, std::string_view text, int max_len) {
  if (max_len < 2) throw std::invalid_argument("max_len must leave room for [CLS] and [SEP]");
  std::vector<int> ids{Vocab::kCls};
  for (const auto& w : split_words(text)) {
    if (static_cast<int>(ids.size()) == max_len - 1) break;
    ids.push_back(vocab.id(w));
  }
  ids.push_back(Vocab::kSep);
  return ids;
}

}  // namespace tapt
