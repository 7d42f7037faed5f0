#pragma once

#include "tapt/checkpoint.hpp"
#include "tapt/dataset.hpp"
#include "tapt/encoder.hpp"
#include "tapt/errors.hpp"
#include "tapt/preprocess.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tapt {

struct FusionConfig {
  EncoderConfig encoder;  // shared by both encoders
  int emoji_dim = 300;
  std::vector<int> mlp_hidden{256, 64};
  double dropout_p = 0.1;

  /// Projected text + projected hashtags + emoji mean.
  int fused_dim() const { return 2 * encoder.d_model + emoji_dim; }

  static FusionConfig desk(int vocab_size, int emoji_dim = 300);
  static FusionConfig paper(int vocab_size, int emoji_dim = 300);

  void validate() const;
  void to_metadata(std::map<std::string, std::string>& meta) const;
  static FusionConfig from_metadata(const std::map<std::string, std::string>& meta);

  bool operator==(const FusionConfig&) const = default;
};

/// Model input after vocabulary lookup.
struct EncodedExample {
  std::vector<int> text_ids;
  std::vector<int> hashtag_ids;
  Eigen::VectorXf emoji_vec;
};

EncodedExample encode_example(const FeatureBundle& bundle, const Vocab& vocab, int max_len);

/// Linear → ReLU → Linear, E → E → E.
template <typename Scalar>
struct Projection {
  Linear<Scalar> first;
  Linear<Scalar> second;
};

/// Two encoders, their projections, the fusion layer and the MLP head for one
/// binary task.
template <typename Scalar>
struct FusionModel {
  FusionConfig config;
  Task task = Task::Coarse;
  EncoderWeights<Scalar> text_encoder;
  EncoderWeights<Scalar> hashtag_encoder;
  Projection<Scalar> text_proj;
  Projection<Scalar> hashtag_proj;
  Linear<Scalar> fusion;             // fused_dim → fused_dim
  std::vector<Linear<Scalar>> head;  // fused_dim → hidden... → 2

  template <typename F>
  void for_each(F&& f) { visit(*this, f); }
  template <typename F>
  void for_each(F&& f) const { visit(*this, f); }

  /// Everything the classifier loss reaches; the encoders' MLM heads are
  /// carried along but not trained.
  std::vector<Parameter<Scalar>*> trainable_parameters() {
    std::vector<Parameter<Scalar>*> out;
    for_each([&](const std::string& name, Parameter<Scalar>& p) {
      if (name.find(".mlm_head.") == std::string::npos) out.push_back(&p);
    });
    return out;
  }

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    self.text_encoder.for_each([&](const std::string& n, auto& p) { f("text_encoder." + n, p); });
    self.hashtag_encoder.for_each([&](const std::string& n, auto& p) { f("hashtag_encoder." + n, p); });
    f("text_proj.first.weight", self.text_proj.first.weight);
    f("text_proj.first.bias", self.text_proj.first.bias);
    f("text_proj.second.weight", self.text_proj.second.weight);
    f("text_proj.second.bias", self.text_proj.second.bias);
    f("hashtag_proj.first.weight", self.hashtag_proj.first.weight);
    f("hashtag_proj.first.bias", self.hashtag_proj.first.bias);
    f("hashtag_proj.second.weight", self.hashtag_proj.second.weight);
    f("hashtag_proj.second.bias", self.hashtag_proj.second.bias);
    f("fusion.weight", self.fusion.weight);
    f("fusion.bias", self.fusion.bias);
    for (std::size_t i = 0; i < self.head.size(); ++i) {
      f("head." + std::to_string(i) + ".weight", self.head[i].weight);
      f("head." + std::to_string(i) + ".bias", self.head[i].bias);
    }
  }
};

/// The shared starting point of both encoders (stand-in for pretrained
/// weights): a fixed random initialisation derived from `base_seed`.
template <typename Scalar>
EncoderWeights<Scalar> base_encoder(const EncoderConfig& config, std::uint64_t base_seed) {
  Rng rng(derive_seed(base_seed, "base-encoder"));
  return init_encoder<Scalar>(config, rng);
}

/// Text encoder from `tapt_weights` when given, otherwise the base snapshot;
/// hashtag encoder always from the base snapshot; everything else freshly
/// initialised from base_seed + task index.
template <typename Scalar>
FusionModel<Scalar> init_model(const FusionConfig& config, Task task, const EncoderWeights<Scalar>* tapt_weights,
                               std::uint64_t base_seed) {
  config.validate();
  FusionModel<Scalar> m;
  m.config = config;
  m.task = task;
  m.hashtag_encoder = base_encoder<Scalar>(config.encoder, base_seed);
  if (tapt_weights) {
    if (!(tapt_weights->config == config.encoder)) {
      throw ShapeError("init_model: pretrained encoder configuration does not match");
    }
    const auto shapes = encoder_shapes(config.encoder);
    std::size_t k = 0;
    tapt_weights->for_each([&](const std::string& name, const Parameter<Scalar>& p) {
      const auto& s = shapes[k++];
      if (p.value.rows() != s.rows || p.value.cols() != s.cols) {
        throw ShapeError("init_model: pretrained tensor " + name + " has shape " + shape_of(p.value) +
                         ", expected " + shape_string(s.rows, s.cols));
      }
    });
    m.text_encoder = *tapt_weights;
  } else {
    m.text_encoder = m.hashtag_encoder;
  }
  for (auto* p : m.text_encoder.parameters()) p->zero_grad();

  Rng rng(derive_seed(base_seed + static_cast<std::uint64_t>(task_index(task)), "fusion-head"));
  const Index e = config.encoder.d_model;
  m.text_proj = {Linear<Scalar>::init(e, e, rng), Linear<Scalar>::init(e, e, rng)};
  m.hashtag_proj = {Linear<Scalar>::init(e, e, rng), Linear<Scalar>::init(e, e, rng)};
  m.fusion = Linear<Scalar>::init(config.fused_dim(), config.fused_dim(), rng);
  Index in = config.fused_dim();
  for (int width : config.mlp_hidden) {
    m.head.push_back(Linear<Scalar>::init(in, width, rng));
    in = width;
  }
  m.head.push_back(Linear<Scalar>::init(in, 2, rng));
  return m;
}

template <typename Scalar>
struct FusionOutput {
  Var<Scalar> fused;   // [1 × fused_dim], after the fusion layer
  Var<Scalar> logits;  // [1 × 2]
};

template <typename Scalar, typename Proj>
Var<Scalar> project(Tape<Scalar>& tape, Proj& proj, const Var<Scalar>& x) {
  return apply(tape, proj.second, relu(apply(tape, proj.first, x)));
}

/// Pass a const model for gradient-free inference. Dropout is active only
/// when training.
template <typename Scalar, typename Model>
  requires std::is_same_v<std::remove_const_t<Model>, FusionModel<Scalar>>
FusionOutput<Scalar> forward(Tape<Scalar>& tape, Model& m, const EncodedExample& ex, bool training, Rng& rng) {
  if (ex.emoji_vec.size() != m.config.emoji_dim) {
    throw ShapeError("forward: emoji vector of length " + std::to_string(ex.emoji_vec.size()) +
                     ", model expects " + std::to_string(m.config.emoji_dim));
  }
  auto text = encode<Scalar>(tape, m.text_encoder, ex.text_ids, training, rng);
  auto tags = encode<Scalar>(tape, m.hashtag_encoder, ex.hashtag_ids, training, rng);
  const Var<Scalar> parts[] = {
      project(tape, m.text_proj, text.pooled),
      project(tape, m.hashtag_proj, tags.pooled),
      tape.constant(ex.emoji_vec.cast<Scalar>().transpose()),
  };
  Var<Scalar> fused = apply(tape, m.fusion, concat_cols(std::span<const Var<Scalar>>(parts)));
  Var<Scalar> x = fused;
  for (std::size_t i = 0; i + 1 < m.head.size(); ++i) {
    x = dropout(relu(apply(tape, m.head[i], x)), m.config.dropout_p, training, rng);
  }
  return {fused, apply(tape, m.head.back(), x)};
}

struct Prediction {
  int label = 0;      // 1 iff prob >= 0.5
  double prob = 0.0;  // probability of the positive class
};

Prediction prediction_from_logits(double negative, double positive);

template <typename Scalar>
Prediction predict(const FusionModel<Scalar>& m, const EncodedExample& ex) {
  Tape<Scalar> tape(false);
  Rng unused(0);
  auto out = forward<Scalar>(tape, m, ex, false, unused);
  const auto& l = out.logits.value();
  return prediction_from_logits(static_cast<double>(l(0, 0)), static_cast<double>(l(0, 1)));
}

/// Serialises every tensor plus configuration and task metadata. Entries of
/// `extra` are added to the metadata.
template <typename Scalar>
Checkpoint to_checkpoint(const FusionModel<Scalar>& m, const std::map<std::string, std::string>& extra = {}) {
  Checkpoint ckpt;
  ckpt.metadata = extra;
  ckpt.metadata["format"] = "fusion-model";
  ckpt.metadata["task"] = std::string(to_string(m.task));
  m.config.to_metadata(ckpt.metadata);
  m.for_each([&](const std::string& name, const Parameter<Scalar>& p) { ckpt.add(name, p.value); });
  return ckpt;
}

template <typename Scalar>
FusionModel<Scalar> model_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.metadata.count("format") == 0 || ckpt.meta("format") != "fusion-model") {
    throw DataError("checkpoint does not hold a fusion model");
  }
  const auto task = parse_task(ckpt.meta("task"));
  if (!task) throw DataError("checkpoint: unknown task " + ckpt.meta("task"));
  const FusionConfig config = FusionConfig::from_metadata(ckpt.metadata);
  // Build the right structure, then overwrite every tensor.
  FusionModel<Scalar> m;
  m.config = config;
  m.task = *task;
  m.text_encoder = import_encoder<Scalar>(ckpt, config.encoder, "text_encoder.");
  m.hashtag_encoder = import_encoder<Scalar>(ckpt, config.encoder, "hashtag_encoder.");
  const Index e = config.encoder.d_model;
  auto load = [&](const std::string& name, Index in, Index out) {
    return Linear<Scalar>{Parameter<Scalar>(ckpt.matrix<Scalar>(name + ".weight", in, out)),
                          Parameter<Scalar>(ckpt.matrix<Scalar>(name + ".bias", 1, out))};
  };
  m.text_proj = {load("text_proj.first", e, e), load("text_proj.second", e, e)};
  m.hashtag_proj = {load("hashtag_proj.first", e, e), load("hashtag_proj.second", e, e)};
  m.fusion = load("fusion", config.fused_dim(), config.fused_dim());
  Index in = config.fused_dim();
  std::size_t i = 0;
  for (int width : config.mlp_hidden) {
    m.head.push_back(load("head." + std::to_string(i++), in, width));
    in = width;
  }
  m.head.push_back(load("head." + std::to_string(i), in, 2));
  return m;
}

}  // namespace tapt
