#pragma once

#include "tapt/dataset.hpp"
#include "tapt/fusion.hpp"
#include "tapt/metrics.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace tapt {

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<std::size_t> train;  // indices into the input, ascending
  std::vector<std::size_t> val;
};

/// Deterministic split stratified on coarse hostility (unlabeled posts form
/// their own stratum). Each stratum of size n sends round(fraction * n) posts
/// to training. Throws std::invalid_argument for fewer than five posts.
Split split_dataset(std::span<const RawPost> posts, const SplitSpec& spec);

template <typename T>
std::vector<T> gather(std::span<const T> items, std::span<const std::size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(items[i]);
  return out;
}

/// Coarse: 1 unless the post is non-hostile. Fine task: 1 iff its tag is
/// present. Throws std::invalid_argument for unlabeled posts.
std::vector<int> binary_targets(std::span<const RawPost> posts, Task task);

/// Which posts the fine-grained models learn from.
enum class FineTrainingSet { AllPosts, HostileOnly };

/// Posts a task trains on: everything, or only hostile posts for fine tasks
/// under HostileOnly.
std::vector<std::size_t> task_subset(std::span<const RawPost> posts, Task task, FineTrainingSet set);

struct TrainOptions {
  int epochs = 10;
  double lr = 1e-5;
  int batch_size = 8;
  std::uint64_t seed = 0;
};

struct TrainRun {
  Task task = Task::Coarse;
  std::vector<double> val_macro_f1;  // one entry per epoch
  std::vector<double> train_loss;    // mean batch loss per epoch
  int best_epoch = 0;                // 1-based
  FusionModel<float> best_model;
};

/// 1-based index of the maximum; ties resolve to the earliest epoch.
int best_epoch_of(std::span<const double> trace);

/// End-to-end cross-entropy training of one binary model with per-epoch
/// validation and best-macro-F1 checkpoint selection. The model is built by
/// init_model(config, task, tapt_weights, options.seed). Throws
/// std::invalid_argument when either split is empty or the training targets
/// hold a single class.
TrainRun train_binary(const FusionConfig& config, Task task, std::span<const EncodedExample> train_x,
                      std::span<const int> train_y, std::span<const EncodedExample> val_x,
                      std::span<const int> val_y, const EncoderWeights<float>* tapt_weights,
                      const TrainOptions& options);

std::vector<int> predict_labels(const FusionModel<float>& model, std::span<const EncodedExample> xs);

/// Inference-time label set from the five binary predictions.
/// Coarse negative gives {non-hostile}; otherwise every fine task predicted
/// positive, or the single most probable fine task when none is (ties in the
/// order fake, hate, offensive, defamation). Throws std::invalid_argument if
/// a fine prediction is missing.
LabelSet assemble_labels(const Prediction& coarse, const std::map<Task, Prediction>& fine);

/// Scores every task over all posts with that task's binary targets.
SuiteReport evaluate_suite(const std::map<Task, FusionModel<float>>& models, std::span<const EncodedExample> xs,
                           std::span<const RawPost> posts);

/// Same report from precomputed per-task predictions.
SuiteReport score_predictions(const std::map<Task, std::vector<int>>& predictions, std::span<const RawPost> posts);

}  // namespace tapt
