#pragma once

#include "tapt/checkpoint.hpp"
#include "tapt/layers.hpp"
#include "tapt/vocab.hpp"

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace tapt {

struct EncoderConfig {
  int vocab_size = 0;
  int max_len = 128;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 256;
  double dropout_p = 0.1;

  /// E=64, 2 layers, 4 heads, d_ff=256.
  static EncoderConfig desk(int vocab_size);
  /// E=768, 12 layers, 12 heads, d_ff=3072.
  static EncoderConfig paper(int vocab_size);

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;

  void to_metadata(std::map<std::string, std::string>& meta, const std::string& prefix) const;
  static EncoderConfig from_metadata(const std::map<std::string, std::string>& meta, const std::string& prefix);

  bool operator==(const EncoderConfig&) const = default;
};

struct TensorShape {
  std::string name;
  Index rows;
  Index cols;
};

/// Every parameter tensor of an encoder with the shape implied by `config`,
/// in canonical order.
std::vector<TensorShape> encoder_shapes(const EncoderConfig& config);

template <typename Scalar>
struct EncoderBlock {
  Norm<Scalar> attn_norm;
  Linear<Scalar> query, key, value, output;
  Norm<Scalar> ffn_norm;
  Linear<Scalar> ffn_in, ffn_out;
};

/// Pre-norm transformer encoder with learned positions and an untied MLM
/// output projection.
template <typename Scalar>
struct EncoderWeights {
  EncoderConfig config;
  Parameter<Scalar> token_embedding;     // [vocab × E]
  Parameter<Scalar> position_embedding;  // [max_len × E]
  std::vector<EncoderBlock<Scalar>> blocks;
  Norm<Scalar> final_norm;
  Linear<Scalar> mlm_head;  // E → vocab

  /// Calls f(name, parameter) in the order of encoder_shapes().
  template <typename F>
  void for_each(F&& f) { visit(*this, f); }
  template <typename F>
  void for_each(F&& f) const { visit(*this, f); }

  std::vector<Parameter<Scalar>*> parameters() {
    std::vector<Parameter<Scalar>*> out;
    for_each([&](const std::string&, Parameter<Scalar>& p) { out.push_back(&p); });
    return out;
  }

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f("token_embedding", self.token_embedding);
    f("position_embedding", self.position_embedding);
    for (std::size_t i = 0; i < self.blocks.size(); ++i) {
      auto& b = self.blocks[i];
      const std::string p = "blocks." + std::to_string(i) + ".";
      f(p + "attn_norm.gain", b.attn_norm.gain);
      f(p + "attn_norm.bias", b.attn_norm.bias);
      f(p + "query.weight", b.query.weight);
      f(p + "query.bias", b.query.bias);
      f(p + "key.weight", b.key.weight);
      f(p + "key.bias", b.key.bias);
      f(p + "value.weight", b.value.weight);
      f(p + "value.bias", b.value.bias);
      f(p + "output.weight", b.output.weight);
      f(p + "output.bias", b.output.bias);
      f(p + "ffn_norm.gain", b.ffn_norm.gain);
      f(p + "ffn_norm.bias", b.ffn_norm.bias);
      f(p + "ffn_in.weight", b.ffn_in.weight);
      f(p + "ffn_in.bias", b.ffn_in.bias);
      f(p + "ffn_out.weight", b.ffn_out.weight);
      f(p + "ffn_out.bias", b.ffn_out.bias);
    }
    f("final_norm.gain", self.final_norm.gain);
    f("final_norm.bias", self.final_norm.bias);
    f("mlm_head.weight", self.mlm_head.weight);
    f("mlm_head.bias", self.mlm_head.bias);
  }
};

/// Fresh weights: uniform(-0.05, 0.05) matrices and embeddings, zero biases,
/// unit norm gains. Draws happen in canonical parameter order.
template <typename Scalar>
EncoderWeights<Scalar> init_encoder(const EncoderConfig& config, Rng& rng) {
  config.validate();
  EncoderWeights<Scalar> w;
  w.config = config;
  const Index e = config.d_model;
  w.token_embedding = Parameter<Scalar>(uniform_matrix<Scalar>(config.vocab_size, e, rng));
  w.position_embedding = Parameter<Scalar>(uniform_matrix<Scalar>(config.max_len, e, rng));
  for (int i = 0; i < config.n_layers; ++i) {
    EncoderBlock<Scalar> b;
    b.attn_norm = Norm<Scalar>::init(e);
    b.query = Linear<Scalar>::init(e, e, rng);
    b.key = Linear<Scalar>::init(e, e, rng);
    b.value = Linear<Scalar>::init(e, e, rng);
    b.output = Linear<Scalar>::init(e, e, rng);
    b.ffn_norm = Norm<Scalar>::init(e);
    b.ffn_in = Linear<Scalar>::init(e, config.d_ff, rng);
    b.ffn_out = Linear<Scalar>::init(config.d_ff, e, rng);
    w.blocks.push_back(std::move(b));
  }
  w.final_norm = Norm<Scalar>::init(e);
  w.mlm_head = Linear<Scalar>::init(e, config.vocab_size, rng);
  return w;
}

/// Stores every tensor under `prefix` + name.
template <typename Scalar>
void export_encoder(const EncoderWeights<Scalar>& w, Checkpoint& ckpt, const std::string& prefix) {
  w.for_each([&](const std::string& name, const Parameter<Scalar>& p) { ckpt.add(prefix + name, p.value); });
}

/// Reads tensors written by export_encoder; shapes must match `config`.
template <typename Scalar>
EncoderWeights<Scalar> import_encoder(const Checkpoint& ckpt, const EncoderConfig& config, const std::string& prefix) {
  config.validate();
  EncoderWeights<Scalar> w;
  w.config = config;
  w.blocks.resize(static_cast<std::size_t>(config.n_layers));
  const auto shapes = encoder_shapes(config);
  std::size_t k = 0;
  w.for_each([&](const std::string& name, Parameter<Scalar>& p) {
    const auto& s = shapes[k++];
    p.value = ckpt.matrix<Scalar>(prefix + name, s.rows, s.cols);
  });
  return w;
}

template <typename Scalar>
struct EncoderOutput {
  Var<Scalar> pooled;  // [1×E], the [CLS] position
  Var<Scalar> hidden;  // [len×E]
};

/// Runs the encoder over `ids`. PAD positions are excluded as attention keys.
/// Pass const weights for gradient-free inference.
template <typename Scalar, typename Weights>
  requires std::is_same_v<std::remove_const_t<Weights>, EncoderWeights<Scalar>>
EncoderOutput<Scalar> encode(Tape<Scalar>& tape, Weights& w, std::span<const int> ids, bool training, Rng& rng) {
  const auto& cfg = w.config;
  if (ids.empty()) throw std::invalid_argument("encode: empty id sequence");
  if (static_cast<int>(ids.size()) > cfg.max_len) {
    throw std::invalid_argument("encode: sequence of " + std::to_string(ids.size()) + " exceeds max_len " +
                                std::to_string(cfg.max_len));
  }
  std::vector<int> positions(ids.size());
  std::vector<bool> key_mask(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    positions[i] = static_cast<int>(i);
    key_mask[i] = ids[i] != Vocab::kPad;
  }
  const double p = cfg.dropout_p;

  Var<Scalar> x = add(embedding_lookup(tape.parameter(w.token_embedding), ids),
                      select_rows(tape.parameter(w.position_embedding), std::span<const int>(positions)));
  x = dropout(x, p, training, rng);

  for (auto& b : w.blocks) {
    Var<Scalar> h = apply_norm(tape, b.attn_norm, x);
    Var<Scalar> q = apply(tape, b.query, h);
    Var<Scalar> k = apply(tape, b.key, h);
    Var<Scalar> v = apply(tape, b.value, h);
    Var<Scalar> attn = apply(tape, b.output, multi_head_attention(q, k, v, cfg.n_heads, key_mask));
    x = add(x, dropout(attn, p, training, rng));

    h = apply_norm(tape, b.ffn_norm, x);
    h = apply(tape, b.ffn_out, gelu(apply(tape, b.ffn_in, h)));
    x = add(x, dropout(h, p, training, rng));
  }
  Var<Scalar> hidden = apply_norm(tape, w.final_norm, x);
  const int cls = 0;
  return {select_rows(hidden, std::span<const int>(&cls, 1)), hidden};
}

inline constexpr int kIgnoreTarget = -1;

struct MaskedSequence {
  std::vector<int> input;
  std::vector<int> targets;  // original id at selected positions, kIgnoreTarget elsewhere

  std::size_t num_targets() const {
    std::size_t n = 0;
    for (int t : targets) n += t != kIgnoreTarget;
    return n;
  }
};

/// MLM corruption: each non-special position is selected with probability p;
/// a selected position becomes [MASK] (80%), a random non-special id (10%) or
/// stays (10%).
template <UniformSource G>
MaskedSequence mask_tokens(std::span<const int> ids, int vocab_size, G& rng, double p = 0.15) {
  MaskedSequence out{std::vector<int>(ids.begin(), ids.end()), std::vector<int>(ids.size(), kIgnoreTarget)};
  const int regular = vocab_size - Vocab::kNumSpecial;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (Vocab::is_special(ids[i])) continue;
    if (!(rng.uniform() < p)) continue;
    out.targets[i] = ids[i];
    const double branch = rng.uniform();
    if (branch < 0.8) {
      out.input[i] = Vocab::kMask;
    } else if (branch < 0.9) {
      if (regular > 0) {
        const int offset = static_cast<int>(rng.uniform() * regular);
        out.input[i] = Vocab::kNumSpecial + std::min(offset, regular - 1);
      }
    }
  }
  return out;
}

/// Mean cross-entropy of the vocabulary softmax at the target positions.
/// Throws std::invalid_argument when there are no targets.
template <typename Scalar, typename Weights>
  requires std::is_same_v<std::remove_const_t<Weights>, EncoderWeights<Scalar>>
Var<Scalar> mlm_loss(Tape<Scalar>& tape, Weights& w, const MaskedSequence& seq, bool training, Rng& rng) {
  std::vector<int> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < seq.targets.size(); ++i) {
    if (seq.targets[i] == kIgnoreTarget) continue;
    rows.push_back(static_cast<int>(i));
    labels.push_back(seq.targets[i]);
  }
  if (rows.empty()) throw std::invalid_argument("mlm_loss: no target positions");
  auto out = encode<Scalar>(tape, w, seq.input, training, rng);
  Var<Scalar> logits = apply(tape, w.mlm_head, select_rows(out.hidden, std::span<const int>(rows)));
  return cross_entropy(logits, std::span<const int>(labels));
}

}  // namespace tapt
