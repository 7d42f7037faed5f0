#include "tapt/fusion.hpp"

#include "tapt/errors.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace tapt {

FusionConfig FusionConfig::desk(int vocab_size, int emoji_dim) {
  FusionConfig c;
  c.encoder = EncoderConfig::desk(vocab_size);
  c.emoji_dim = emoji_dim;
  return c;
}

FusionConfig FusionConfig::paper(int vocab_size, int emoji_dim) {
  FusionConfig c;
  c.encoder = EncoderConfig::paper(vocab_size);
  c.emoji_dim = emoji_dim;
  return c;
}

void FusionConfig::validate() const {
  encoder.validate();
  if (emoji_dim <= 0) throw std::invalid_argument("fusion: emoji dimension must be positive");
  for (int w : mlp_hidden) {
    if (w <= 0) throw std::invalid_argument("fusion: MLP widths must be positive");
  }
  if (!(dropout_p >= 0 && dropout_p < 1)) throw std::invalid_argument("fusion: dropout outside [0, 1)");
}

void FusionConfig::to_metadata(std::map<std::string, std::string>& meta) const {
  encoder.to_metadata(meta, "encoder.");
  meta["emoji_dim"] = std::to_string(emoji_dim);
  std::string widths;
  for (int w : mlp_hidden) widths += (widths.empty() ? "" : ",") + std::to_string(w);
  meta["mlp_hidden"] = widths;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", dropout_p);
  meta["dropout"] = buf;
}

FusionConfig FusionConfig::from_metadata(const std::map<std::string, std::string>& meta) {
  FusionConfig c;
  c.encoder = EncoderConfig::from_metadata(meta, "encoder.");
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end()) throw DataError("metadata: missing key " + key);
    return it->second;
  };
  try {
    c.emoji_dim = std::stoi(get("emoji_dim"));
    c.dropout_p = std::stod(get("dropout"));
    c.mlp_hidden.clear();
    const std::string& widths = get("mlp_hidden");
    std::size_t start = 0;
    while (start < widths.size()) {
      auto comma = widths.find(',', start);
      if (comma == std::string::npos) comma = widths.size();
      c.mlp_hidden.push_back(std::stoi(widths.substr(start, comma - start)));
      start = comma + 1;
    }
    c.validate();
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(std::string("metadata: invalid fusion configuration: ") + e.what());
  }
  return c;
}

EncodedExample encode_example(const FeatureBundle& bundle, const Vocab& vocab, int max_len) {
  return {encode_ids(vocab, bundle.cleaned_text, max_len), encode_ids(vocab, bundle.hashtag_flow, max_len),
          bundle.emoji_vec};
}

Prediction prediction_from_logits(double negative, double positive) {
  const double m = std::max(negative, positive);
  const double en = std::exp(negative - m);
  const double ep = std::exp(positive - m);
  Prediction p;
  p.prob = ep / (en + ep);
  p.label = p.prob >= 0.5 ? 1 : 0;
  return p;
}

}  // namespace tapt
