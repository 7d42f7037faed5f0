#include "tapt/training.hpp"

#include "tapt/adam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tapt {

Split split_dataset(std::span<const RawPost> posts, const SplitSpec& spec) {
  if (posts.size() < 5) throw std::invalid_argument("split_dataset: need at least 5 posts");
  if (!(spec.train_fraction > 0 && spec.train_fraction < 1)) {
    throw std::invalid_argument("split_dataset: train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> strata[3];  // non-hostile, hostile, unlabeled
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const int s = !posts[i].labeled() ? 2 : posts[i].hostile() ? 1 : 0;
    strata[s].push_back(i);
  }
  Rng rng(derive_seed(spec.seed, "split"));
  Split split;
  for (auto& stratum : strata) {
    rng.shuffle(std::span<std::size_t>(stratum));
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(stratum.size())));
    split.train.insert(split.train.end(), stratum.begin(), stratum.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val.insert(split.val.end(), stratum.begin() + static_cast<std::ptrdiff_t>(n_train), stratum.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

std::vector<int> binary_targets(std::span<const RawPost> posts, Task task) {
  std::vector<int> out;
  out.reserve(posts.size());
  const auto tag = task_label(task);
  for (const auto& p : posts) {
    if (!p.labeled()) throw std::invalid_argument("binary_targets: post " + p.id + " is unlabeled");
    out.push_back(tag ? static_cast<int>(p.labels.contains(*tag)) : static_cast<int>(p.hostile()));
  }
  return out;
}

std::vector<std::size_t> task_subset(std::span<const RawPost> posts, Task task, FineTrainingSet set) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (task != Task::Coarse && set == FineTrainingSet::HostileOnly && !posts[i].hostile()) continue;
    out.push_back(i);
  }
  return out;
}

int best_epoch_of(std::span<const double> trace) {
  if (trace.empty()) throw std::invalid_argument("best_epoch_of: empty trace");
  std::size_t best = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] > trace[best]) best = i;
  }
  return static_cast<int>(best) + 1;
}

std::vector<int> predict_labels(const FusionModel<float>& model, std::span<const EncodedExample> xs) {
  std::vector<int> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(predict(model, x).label);
  return out;
}

TrainRun train_binary(const FusionConfig& config, Task task, std::span<const EncodedExample> train_x,
                      std::span<const int> train_y, std::span<const EncodedExample> val_x,
                      std::span<const int> val_y, const EncoderWeights<float>* tapt_weights,
                      const TrainOptions& options) {
  if (train_x.size() != train_y.size() || val_x.size() != val_y.size()) {
    throw std::invalid_argument("train_binary: inputs and targets differ in length");
  }
  if (train_x.empty() || val_x.empty()) throw std::invalid_argument("train_binary: empty split");
  const auto positives = std::count(train_y.begin(), train_y.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(train_y.size())) {
    throw std::invalid_argument("train_binary: training split for " + std::string(to_string(task)) +
                                " contains a single class");
  }
  if (options.epochs < 1 || options.batch_size < 1) {
    throw std::invalid_argument("train_binary: epochs and batch size must be positive");
  }

  FusionModel<float> model = init_model<float>(config, task, tapt_weights, options.seed);
  const auto params = model.trainable_parameters();
  AdamState<float> adam;
  Rng rng(derive_seed(options.seed + static_cast<std::uint64_t>(task_index(task)), "finetune"));

  TrainRun run;
  run.task = task;
  double best = -1;
  std::vector<std::size_t> order(train_x.size());
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(options.batch_size));
      Tape<float> tape;
      std::vector<Var<float>> logits;
      std::vector<int> labels;
      for (std::size_t k = begin; k < end; ++k) {
        logits.push_back(forward<float>(tape, model, train_x[order[k]], true, rng).logits);
        labels.push_back(train_y[order[k]]);
      }
      Var<float> loss = cross_entropy(concat_rows(std::span<const Var<float>>(logits)), std::span<const int>(labels));
      loss_sum += loss.item();
      ++batches;
      tape.backward(loss);
      adam_step(std::span<Parameter<float>* const>(params), adam, options.lr);
      for (auto* p : params) p->zero_grad();
    }
    run.train_loss.push_back(loss_sum / static_cast<double>(batches));
    if (!std::isfinite(run.train_loss.back())) {
      throw std::runtime_error("train_binary: non-finite loss at epoch " + std::to_string(epoch));
    }

    const auto preds = predict_labels(model, val_x);
    const double macro = f1_scores(preds, val_y).macro_f1;
    run.val_macro_f1.push_back(macro);
    if (macro > best) {
      best = macro;
      run.best_epoch = epoch;
      run.best_model = model;
    }
  }
  return run;
}

LabelSet assemble_labels(const Prediction& coarse, const std::map<Task, Prediction>& fine) {
  for (LabelTag tag : kFineTags) {
    bool found = false;
    for (const auto& [task, pred] : fine) found = found || task_label(task) == tag;
    if (!found) throw std::invalid_argument("assemble_labels: missing prediction for " + std::string(to_string(tag)));
  }
  if (coarse.label == 0) return {LabelTag::NonHostile};
  LabelSet out;
  const Prediction* best = nullptr;
  LabelTag best_tag = LabelTag::Fake;
  for (Task task : {Task::Fake, Task::Hate, Task::Offensive, Task::Defamation}) {
    const Prediction& p = fine.at(task);
    if (p.label == 1) out.insert(*task_label(task));
    if (!best || p.prob > best->prob) {
      best = &p;
      best_tag = *task_label(task);
    }
  }
  if (out.empty()) out.insert(best_tag);
  return out;
}

SuiteReport score_predictions(const std::map<Task, std::vector<int>>& predictions, std::span<const RawPost> posts) {
  SuiteReport report;
  for (Task t : kTasks) {
    const auto golds = binary_targets(posts, t);
    report.tasks[t] = f1_scores(predictions.at(t), golds);
  }
  report.weighted_fine = weighted_fine_f1(report.tasks);
  return report;
}

SuiteReport evaluate_suite(const std::map<Task, FusionModel<float>>& models, std::span<const EncodedExample> xs,
                           std::span<const RawPost> posts) {
  if (xs.size() != posts.size()) throw std::invalid_argument("evaluate_suite: inputs and posts differ in length");
  std::map<Task, std::vector<int>> predictions;
  for (Task t : kTasks) predictions[t] = predict_labels(models.at(t), xs);
  return score_predictions(predictions, posts);
}

}  // namespace tapt
