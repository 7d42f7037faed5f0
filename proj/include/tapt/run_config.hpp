#pragma once

#include "tapt/fusion.hpp"
#include "tapt/training.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

namespace tapt {

/// Bad command line or configuration value.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Profile { Desk, Paper };

std::string_view to_string(Profile profile);

/// Everything a command needs. Unset hyperparameters resolve from the
/// profile defaults.
struct RunConfig {
  Profile profile = Profile::Desk;
  std::uint64_t seed = 13;

  std::filesystem::path data;
  std::filesystem::path emoji;  // optional
  std::filesystem::path dict;   // optional
  std::filesystem::path out = "out";
  std::filesystem::path tapt_checkpoint;  // defaults to <out>/tapt.ckpt

  std::optional<int> epochs;       // fine-tuning epochs
  std::optional<int> tapt_epochs;  // continued-pretraining epochs
  std::optional<double> lr;
  std::optional<double> tapt_lr;
  std::optional<int> batch_size;
  double train_fraction = 0.8;

  bool tapt = true;
  bool clean_dup = true;          // add the cleaned line next to the raw one
  bool tapt_corpus_all = false;   // pretrain on every labeled post, not just the training split
  FineTrainingSet fine_set = FineTrainingSet::AllPosts;
  std::string eval_split = "all";  // all | train | val

  int resolved_epochs() const { return epochs.value_or(10); }
  int resolved_tapt_epochs() const { return tapt_epochs.value_or(100); }
  double resolved_lr() const { return lr.value_or(profile == Profile::Desk ? 1e-3 : 1e-5); }
  double resolved_tapt_lr() const { return tapt_lr.value_or(1e-4); }
  int resolved_batch_size() const { return batch_size.value_or(8); }
  std::filesystem::path resolved_tapt_checkpoint() const {
    return tapt_checkpoint.empty() ? out / "tapt.ckpt" : tapt_checkpoint;
  }

  FusionConfig fusion_config(int vocab_size, int emoji_dim) const;

  /// Applies one key=value setting; throws UsageError for unknown keys or
  /// values outside their legal range.
  void set(const std::string& key, const std::string& value);

  /// Reads "key=value" lines; blank lines and lines starting with '#' are
  /// ignored.
  void load(std::istream& in, const std::string& source);
  void load(const std::filesystem::path& path);
};

}  // namespace tapt
