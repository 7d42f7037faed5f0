#include "tapt/encoder.hpp"

#include "tapt/errors.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace tapt {

EncoderConfig EncoderConfig::desk(int vocab_size) {
  EncoderConfig c;
  c.vocab_size = vocab_size;
  return c;
}

EncoderConfig EncoderConfig::paper(int vocab_size) {
  EncoderConfig c;
  c.vocab_size = vocab_size;
  c.d_model = 768;
  c.n_layers = 12;
  c.n_heads = 12;
  c.d_ff = 3072;
  return c;
}

void EncoderConfig::validate() const {
  if (vocab_size < Vocab::kNumSpecial) throw std::invalid_argument("encoder: vocabulary smaller than the special tokens");
  if (max_len < 2) throw std::invalid_argument("encoder: max_len must be at least 2");
  if (d_model <= 0 || n_layers < 0 || n_heads <= 0 || d_ff <= 0) {
    throw std::invalid_argument("encoder: dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw std::invalid_argument("encoder: d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                                std::to_string(n_heads));
  }
  if (!(dropout_p >= 0 && dropout_p < 1)) throw std::invalid_argument("encoder: dropout outside [0, 1)");
}

namespace {

int meta_int(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw DataError("metadata: missing key " + key);
  int v = 0;
  auto [ptr, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || ptr != it->second.data() + it->second.size()) {
    throw DataError("metadata: " + key + " is not an integer");
  }
  return v;
}

}  // namespace

void EncoderConfig::to_metadata(std::map<std::string, std::string>& meta, const std::string& prefix) const {
  meta[prefix + "vocab_size"] = std::to_string(vocab_size);
  meta[prefix + "max_len"] = std::to_string(max_len);
  meta[prefix + "d_model"] = std::to_string(d_model);
  meta[prefix + "n_layers"] = std::to_string(n_layers);
  meta[prefix + "n_heads"] = std::to_string(n_heads);
  meta[prefix + "d_ff"] = std::to_string(d_ff);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", dropout_p);
  meta[prefix + "dropout"] = buf;
}

EncoderConfig EncoderConfig::from_metadata(const std::map<std::string, std::string>& meta, const std::string& prefix) {
  EncoderConfig c;
  c.vocab_size = meta_int(meta, prefix + "vocab_size");
  c.max_len = meta_int(meta, prefix + "max_len");
  c.d_model = meta_int(meta, prefix + "d_model");
  c.n_layers = meta_int(meta, prefix + "n_layers");
  c.n_heads = meta_int(meta, prefix + "n_heads");
  c.d_ff = meta_int(meta, prefix + "d_ff");
  auto it = meta.find(prefix + "dropout");
  if (it == meta.end()) throw DataError("metadata: missing key " + prefix + "dropout");
  c.dropout_p = std::stod(it->second);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("metadata: ") + e.what());
  }
  return c;
}

std::vector<TensorShape> encoder_shapes(const EncoderConfig& c) {
  const Index e = c.d_model;
  std::vector<TensorShape> s;
  s.push_back({"token_embedding", c.vocab_size, e});
  s.push_back({"position_embedding", c.max_len, e});
  for (int i = 0; i < c.n_layers; ++i) {
    const std::string p = "blocks." + std::to_string(i) + ".";
    s.push_back({p + "attn_norm.gain", 1, e});
    s.push_back({p + "attn_norm.bias", 1, e});
    for (const char* lin : {"query", "key", "value", "output"}) {
      s.push_back({p + lin + ".weight", e, e});
      s.push_back({p + lin + ".bias", 1, e});
    }
    s.push_back({p + "ffn_norm.gain", 1, e});
    s.push_back({p + "ffn_norm.bias", 1, e});
    s.push_back({p + "ffn_in.weight", e, c.d_ff});
    s.push_back({p + "ffn_in.bias", 1, c.d_ff});
    s.push_back({p + "ffn_out.weight", c.d_ff, e});
    s.push_back({p + "ffn_out.bias", 1, e});
  }
  s.push_back({"final_norm.gain", 1, e});
  s.push_back({"final_norm.bias", 1, e});
  s.push_back({"mlm_head.weight", e, c.vocab_size});
  s.push_back({"mlm_head.bias", 1, c.vocab_size});
  return s;
}

}  // namespace tapt
