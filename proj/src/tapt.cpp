#include "tapt/tapt.hpp"

#include "tapt/adam.hpp"
#include "tapt/preprocess.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace tapt {

void TaptCorpus::write(std::ostream& out) const {
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out << (provenance[i] == CorpusSource::Raw ? "R\t" : "C\t");
    for (char c : lines[i]) out << (c == '\n' || c == '\r' || c == '\t' ? ' ' : c);
    out << '\n';
  }
}

TaptCorpus build_tapt_corpus(std::span<const RawPost> posts, bool include_cleaned) {
  TaptCorpus corpus;
  for (const auto& post : posts) {
    corpus.lines.push_back(post.text);
    corpus.provenance.push_back(CorpusSource::Raw);
    if (include_cleaned) {
      corpus.lines.push_back(clean_text(tokenize_raw(post.text)));
      corpus.provenance.push_back(CorpusSource::Cleaned);
    }
  }
  return corpus;
}

namespace {

// Selects one random regular position when masking picked none.
void force_target(MaskedSequence& seq, std::span<const int> ids, int vocab_size, Rng& rng) {
  std::vector<std::size_t> regular;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!Vocab::is_special(ids[i])) regular.push_back(i);
  }
  const std::size_t pos = regular[static_cast<std::size_t>(rng.below(regular.size()))];
  seq.targets[pos] = ids[pos];
  const double branch = rng.uniform();
  const int n_regular = vocab_size - Vocab::kNumSpecial;
  if (branch < 0.8) {
    seq.input[pos] = Vocab::kMask;
  } else if (branch < 0.9 && n_regular > 0) {
    seq.input[pos] = Vocab::kNumSpecial + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_regular)));
  }
}

}  // namespace

TaptResult run_tapt(EncoderWeights<float> start, const Vocab& vocab, const TaptCorpus& corpus,
                    const TaptOptions& options) {
  if (corpus.size() == 0) throw std::invalid_argument("run_tapt: empty corpus");
  if (options.epochs < 1) throw std::invalid_argument("run_tapt: epochs must be at least 1");
  if (options.batch_size < 1) throw std::invalid_argument("run_tapt: batch size must be at least 1");
  if (start.config.vocab_size != vocab.size()) {
    throw std::invalid_argument("run_tapt: encoder vocabulary " + std::to_string(start.config.vocab_size) +
                                " does not match vocab of " + std::to_string(vocab.size()));
  }

  TaptResult result{std::move(start), {}, 0};
  auto& w = result.weights;
  const int vocab_size = w.config.vocab_size;
  Rng rng(derive_seed(options.seed, "tapt"));
  AdamState<float> adam;
  const auto params = w.parameters();

  std::vector<std::vector<int>> encoded;
  encoded.reserve(corpus.size());
  for (const auto& line : corpus.lines) encoded.push_back(encode_ids(vocab, line, w.config.max_len));

  std::vector<std::size_t> order(corpus.size());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0;
    std::size_t loss_lines = 0;

    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(options.batch_size));
      Tape<float> tape;
      std::vector<Var<float>> losses;
      for (std::size_t k = begin; k < end; ++k) {
        const auto& ids = encoded[order[k]];
        if (ids.size() <= 2) continue;  // only [CLS] [SEP]
        MaskedSequence seq = mask_tokens(std::span<const int>(ids), vocab_size, rng, options.mask_prob);
        if (seq.num_targets() == 0) force_target(seq, ids, vocab_size, rng);
        losses.push_back(mlm_loss<float>(tape, w, seq, true, rng));
      }
      if (losses.empty()) continue;
      for (const auto& l : losses) loss_sum += l.item();
      loss_lines += losses.size();

      Var<float> total = scale(sum(concat_rows(std::span<const Var<float>>(losses))),
                               1.0f / static_cast<float>(losses.size()));
      tape.backward(total);
      adam_step(std::span<Parameter<float>* const>(params), adam, options.lr);
      for (auto* p : params) p->zero_grad();
      ++result.steps;
    }

    const double epoch_loss = loss_lines ? loss_sum / static_cast<double>(loss_lines) : 0.0;
    if (!std::isfinite(epoch_loss)) {
      throw std::runtime_error("run_tapt: non-finite loss at epoch " + std::to_string(epoch + 1));
    }
    result.epoch_loss.push_back(epoch_loss);
  }
  return result;
}

std::vector<double> smooth(std::span<const double> values, std::size_t window) {
  if (window == 0) throw std::invalid_argument("smooth: window must be positive");
  std::vector<double> out;
  for (std::size_t i = window; i <= values.size(); ++i) {
    double s = 0;
    for (std::size_t j = i - window; j < i; ++j) s += values[j];
    out.push_back(s / static_cast<double>(window));
  }
  return out;
}

}  // namespace tapt
