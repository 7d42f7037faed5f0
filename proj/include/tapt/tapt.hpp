#pragma once

#include "tapt/dataset.hpp"
#include "tapt/encoder.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tapt {

enum class CorpusSource { Raw, Cleaned };

/// Task-adaptive pretraining text: every post contributes its raw text
/// followed by its cleaned text.
struct TaptCorpus {
  std::vector<std::string> lines;
  std::vector<CorpusSource> provenance;

  std::size_t size() const { return lines.size(); }

  /// One line per entry prefixed "R\t" or "C\t"; embedded line breaks and
  /// tabs are written as spaces.
  void write(std::ostream& out) const;
};

/// With include_cleaned == false only the raw lines are kept (ablation).
TaptCorpus build_tapt_corpus(std::span<const RawPost> posts, bool include_cleaned = true);

struct TaptOptions {
  int epochs = 100;
  double lr = 1e-4;
  int batch_size = 16;
  std::uint64_t seed = 0;
  double mask_prob = 0.15;
};

struct TaptResult {
  EncoderWeights<float> weights;
  std::vector<double> epoch_loss;  // mean MLM loss over contributing lines
  std::size_t steps = 0;           // optimizer updates performed
};

/// Continued MLM pretraining of `start` over the corpus lines (one line, one
/// sequence). Lines without regular tokens are skipped; a line whose masking
/// selected nothing gets one forced target. Deterministic given the seed.
/// Throws std::invalid_argument for an empty corpus or epochs < 1.
TaptResult run_tapt(EncoderWeights<float> start, const Vocab& vocab, const TaptCorpus& corpus,
                    const TaptOptions& options);

/// Moving average over full windows; values.size() - window + 1 entries.
std::vector<double> smooth(std::span<const double> values, std::size_t window);

}  // namespace tapt
