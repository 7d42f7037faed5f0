// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "tapt/commands.hpp"
#include "tapt/run_config.hpp"
#include "tapt/tapt.hpp"
#include "tapt/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace tapt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Md = Matrix<double>;
using Pd = Parameter<double>;

const std::string kData = TAPT_TEST_DATA;

Md random_matrix(Index r, Index c, Rng& rng, double range = 1.0) {
  Md m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-range, range);
  return m;
}

Var<double> readout(Tape<double>& t, const Var<double>& x, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(x, t.constant(random_matrix(x.rows(), x.cols(), rng))));
}

std::string fmt(const char* spec, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tapt_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::cerr << "  cli failed (" << code << "): " << e.str();
  return code;
}

// --- 1 ----------------------------------------------------------------------

Outcome gradient_integrity() {
  support::GradCheck worst;
  auto track = [&](const support::GradCheck& r) {
    worst.max_rel_error = std::max(worst.max_rel_error, r.max_rel_error);
    worst.checked += r.checked;
  };
  Rng rng(2024);
  Pd a(random_matrix(3, 4, rng)), b(random_matrix(4, 3, rng)), c(random_matrix(3, 4, rng)), row(random_matrix(1, 4, rng));
  Md away = random_matrix(3, 4, rng);
  for (Index i = 0; i < away.size(); ++i) away.data()[i] += away.data()[i] >= 0 ? 0.1 : -0.1;
  Pd kinkless(away);
  Pd g(random_matrix(1, 4, rng)), beta(random_matrix(1, 4, rng)), table(random_matrix(6, 4, rng));
  Pd q(random_matrix(4, 6, rng)), k(random_matrix(4, 6, rng)), v(random_matrix(4, 6, rng));
  const int ids[] = {5, 0, 5, 2};
  const int labels[] = {1, 0, 2, 1};
  const std::vector<bool> mask{true, false, true, true};

  using Build = std::function<Var<double>(Tape<double>&)>;
  const std::vector<std::pair<std::vector<Pd*>, Build>> ops{
      {{&a, &b}, [&](Tape<double>& t) { return readout(t, matmul(t.parameter(a), t.parameter(b)), 1); }},
      {{&a, &c}, [&](Tape<double>& t) { return readout(t, add(t.parameter(a), t.parameter(c)), 2); }},
      {{&a, &row}, [&](Tape<double>& t) { return readout(t, add_row(t.parameter(a), t.parameter(row)), 3); }},
      {{&a, &c}, [&](Tape<double>& t) { return readout(t, mul(t.parameter(a), t.parameter(c)), 4); }},
      {{&a}, [&](Tape<double>& t) { return readout(t, scale(t.parameter(a), 1.7), 5); }},
      {{&kinkless}, [&](Tape<double>& t) { return readout(t, relu(t.parameter(kinkless)), 6); }},
      {{&a}, [&](Tape<double>& t) { return readout(t, gelu(t.parameter(a)), 7); }},
      {{&a}, [&](Tape<double>& t) { return sum(t.parameter(a)); }},
      {{&a}, [&](Tape<double>& t) { return readout(t, softmax_rows(t.parameter(a)), 8); }},
      {{&a, &g, &beta}, [&](Tape<double>& t) { return readout(t, layer_norm(t.parameter(a), t.parameter(g), t.parameter(beta)), 9); }},
      {{&table}, [&](Tape<double>& t) { return readout(t, embedding_lookup(t.parameter(table), ids), 10); }},
      {{&table}, [&](Tape<double>& t) { return readout(t, select_rows(t.parameter(table), ids), 11); }},
      {{&a, &c}, [&](Tape<double>& t) {
         const Var<double> parts[] = {t.parameter(a), t.parameter(c)};
         return readout(t, concat_rows<double>(parts), 12);
       }},
      {{&a, &c}, [&](Tape<double>& t) {
         const Var<double> parts[] = {t.parameter(a), t.parameter(c)};
         return readout(t, concat_cols<double>(parts), 13);
       }},
      {{&a}, [&](Tape<double>& t) {
         Rng fixed(5);
         return readout(t, dropout(t.parameter(a), 0.25, true, fixed), 14);
       }},
      {{&b}, [&](Tape<double>& t) { return cross_entropy(t.parameter(b), labels); }},
      {{&q, &k, &v}, [&](Tape<double>& t) {
         return readout(t, multi_head_attention(t.parameter(q), t.parameter(k), t.parameter(v), 2, mask), 15);
       }},
  };
  for (const auto& [params, build] : ops) track(support::check_gradients(params, build));
  const double op_error = worst.max_rel_error;

  // Whole fusion models: every dimension at most 8.
  FusionConfig config = FusionConfig::desk(8, 4);
  config.encoder.max_len = 8;
  config.encoder.d_model = 2;
  config.encoder.n_heads = 2;
  config.encoder.d_ff = 8;
  config.mlp_hidden = {8, 8};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng r(seed * 101);
    auto model = init_model<double>(config, kTasks[seed % 5], nullptr, seed);
    // Spread the weights so the graph is far from linear.
    model.for_each([&](const std::string&, Parameter<double>& p) {
      for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] += r.uniform(-0.5, 0.5);
    });
    EncodedExample ex;
    ex.text_ids = {Vocab::kCls};
    for (std::uint64_t i = 0, n = 2 + r.below(4); i < n; ++i) ex.text_ids.push_back(Vocab::kNumSpecial + int(r.below(3)));
    ex.text_ids.push_back(Vocab::kSep);
    ex.text_ids.push_back(Vocab::kPad);
    ex.hashtag_ids = {Vocab::kCls, Vocab::kNumSpecial + int(r.below(3)), Vocab::kSep};
    ex.emoji_vec = Eigen::VectorXf(4);
    for (int i = 0; i < 4; ++i) ex.emoji_vec(i) = static_cast<float>(r.uniform(-1, 1));
    const int label[] = {int(r.below(2))};
    auto params = model.trainable_parameters();
    track(support::check_gradients(params, [&](Tape<double>& t) {
      Rng drop(seed);
      auto out = forward<double>(t, model, ex, true, drop);
      return cross_entropy(out.logits, label);
    }));
  }
  return {worst.max_rel_error < 1e-4, "max relative error " + fmt("%.2e", worst.max_rel_error) + " (ops " +
                                           fmt("%.2e", op_error) + ") over " + std::to_string(worst.checked) +
                                           " coordinates"};
}

// --- 2 ----------------------------------------------------------------------

Outcome masking_statistics() {
  const int vocab = 100005;
  Rng rng(17);
  long regular = 0, selected = 0, masked = 0, randomized = 0, kept = 0, special_hits = 0;
  while (regular < 200000) {
    std::vector<int> ids{Vocab::kCls};
    for (int i = 0; i < 60; ++i) {
      ids.push_back(rng.below(10) == 0 ? int(rng.below(Vocab::kNumSpecial))
                                       : Vocab::kNumSpecial + int(rng.below(vocab - Vocab::kNumSpecial)));
    }
    ids.push_back(Vocab::kSep);
    const auto m = mask_tokens(std::span<const int>(ids), vocab, rng);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const bool chosen = m.targets[i] != kIgnoreTarget;
      if (Vocab::is_special(ids[i])) {
        special_hits += chosen || m.input[i] != ids[i];
        continue;
      }
      ++regular;
      if (!chosen) continue;
      ++selected;
      if (m.input[i] == Vocab::kMask) {
        ++masked;
      } else if (m.input[i] == ids[i]) {
        ++kept;
      } else {
        ++randomized;
      }
    }
  }
  const double frac = double(selected) / double(regular);
  const double pm = double(masked) / double(selected), pr = double(randomized) / double(selected),
               pk = double(kept) / double(selected);
  const bool ok = std::abs(frac - 0.15) <= 0.01 && std::abs(pm - 0.8) <= 0.02 && std::abs(pr - 0.1) <= 0.02 &&
                  std::abs(pk - 0.1) <= 0.02 && special_hits == 0;
  return {ok, std::to_string(regular) + " tokens: selected " + fmt("%.4f", frac) + ", split " + fmt("%.3f", pm) + "/" +
                  fmt("%.3f", pr) + "/" + fmt("%.3f", pk) + ", special hits " + std::to_string(special_hits)};
}

// --- 3 ----------------------------------------------------------------------

Outcome metric_oracle() {
  Rng rng(3);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    std::vector<int> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = int(rng.below(2));
      g[i] = int(rng.below(2));
    }
    const auto got = f1_scores(p, g);
    const auto want = support::oracle_f1(p, g);
    bool same = got.macro_f1 == want.macro && got.weighted_f1 == want.weighted;
    for (int c = 0; c < 2; ++c) {
      same = same && got.classes[c].precision == want.classes[c].precision &&
             got.classes[c].recall == want.classes[c].recall && got.classes[c].f1 == want.classes[c].f1 &&
             long(got.classes[c].support) == want.classes[c].support;
    }
    mismatches += !same;
  }
  const auto hand = f1_scores(std::vector<int>{1, 1, 1, 1}, std::vector<int>{1, 1, 0, 0});
  const bool hand_ok = std::abs(hand.macro_f1 - 1.0 / 3.0) < 1e-15;
  return {mismatches == 0 && hand_ok,
          std::to_string(mismatches) + "/100 oracle mismatches; hand case macro " + fmt("%.6f", hand.macro_f1)};
}

// --- 4 ----------------------------------------------------------------------

Outcome segmentation_optimality() {
  const std::vector<std::string> words{"a",   "an",   "and",  "ant",  "at",   "ate",   "bat",   "be",    "bean", "bee",
                                       "ban", "band", "bed",  "den",  "dent", "eat",   "nab",   "tab",   "tan",  "tea",
                                       "ted", "ten",  "tend", "bead", "beat", "dab",   "date",  "dean",  "neat", "need"};
  std::map<std::string, std::uint64_t> counts;
  FreqDict dict;
  Rng rng(44);
  for (const auto& w : words) {
    const std::uint64_t c = 1 + rng.below(200);
    counts[w] = c;
    dict.add(w, c);
  }
  const std::string alphabet = "abdent";
  int cases = 0, wrong = 0;
  double worst_gap = 0;
  for (std::size_t len = 1; len <= 12; ++len) {
    for (int rep = 0; rep < 50; ++rep) {
      std::string body;
      // Mostly dictionary words, with stray letters mixed in.
      while (body.size() < len) {
        body += rng.below(4) == 0 ? std::string(1, alphabet[rng.below(alphabet.size())]) : words[rng.below(words.size())];
      }
      body.resize(len);
      const auto want = support::oracle_segment(body, counts);
      const std::string got = segment_hashtag("#" + body, dict);
      double got_score = 0;
      std::istringstream in(got);
      for (std::string w; in >> w;) got_score += segment_word_score(w, dict);
      worst_gap = std::max(worst_gap, std::abs(got_score - want.score));
      wrong += got != support::join_words(want.words);
      ++cases;
    }
  }
  return {wrong == 0 && worst_gap < 1e-9 && cases >= 500,
          std::to_string(cases) + " bodies, " + std::to_string(wrong) + " differ from exhaustive search, max score gap " +
              fmt("%.1e", worst_gap)};
}

// --- 5 ----------------------------------------------------------------------

Outcome corpus_invariant() {
  std::vector<std::pair<std::string, std::vector<RawPost>>> fixtures{
      {"fixture.csv", load_dataset(kData + "/fixture.csv")},
      {"constraint-shaped", support::constraint_shaped_posts()},
      {"edge cases", {{"1", "", {}}, {"2", "😂😂", {}}, {"3", "#a @b http://c", {}}, {"4", "plain words", {}}}},
  };
  std::string detail;
  bool ok = true;
  for (const auto& [name, posts] : fixtures) {
    const TaptCorpus c = build_tapt_corpus(posts);
    bool good = c.size() == 2 * posts.size() && c.provenance.size() == c.size();
    for (std::size_t i = 0; good && i < posts.size(); ++i) {
      good = c.lines[2 * i] == posts[i].text && c.provenance[2 * i] == CorpusSource::Raw &&
             c.lines[2 * i + 1] == clean_text(tokenize_raw(posts[i].text)) &&
             c.provenance[2 * i + 1] == CorpusSource::Cleaned;
    }
    ok = ok && good;
    detail += (detail.empty() ? "" : ", ") + name + " " + std::to_string(posts.size()) + "->" + std::to_string(c.size());
  }
  return {ok, detail};
}

// --- 6 ----------------------------------------------------------------------

template <typename W>
std::vector<Matrix<float>> tensors(const W& w) {
  std::vector<Matrix<float>> out;
  w.for_each([&](const std::string&, const Parameter<float>& p) { out.push_back(p.value); });
  return out;
}

std::map<std::string, std::vector<float>> with_prefix(const Checkpoint& c, const std::string& prefix) {
  std::map<std::string, std::vector<float>> out;
  for (const auto& t : c.tensors()) {
    if (t.name.rfind(prefix, 0) == 0) out[t.name.substr(prefix.size())] = t.data;
  }
  return out;
}

Outcome weight_transfer() {
  // Library path.
  const auto posts = load_dataset(kData + "/fixture.csv");
  const TaptCorpus corpus = build_tapt_corpus(posts);
  const Vocab vocab = Vocab::build(corpus.lines);
  const FusionConfig config = FusionConfig::desk(vocab.size());
  const std::uint64_t seed = 11;
  TaptOptions opt;
  opt.epochs = 3;
  opt.seed = seed;
  const auto pretrained = run_tapt(base_encoder<float>(config.encoder, seed), vocab, corpus, opt);
  const auto model = init_model<float>(config, Task::Coarse, &pretrained.weights, seed);
  const bool lib_text = tensors(model.text_encoder) == tensors(pretrained.weights);
  const bool lib_tags = tensors(model.hashtag_encoder) == tensors(base_encoder<float>(config.encoder, seed));
  const bool lib_moved = tensors(pretrained.weights) != tensors(base_encoder<float>(config.encoder, seed));

  // Command-line path: the saved initial encoders against the saved artifacts.
  const fs::path dir = fresh_dir("transfer");
  std::vector<std::string> base{"--data", kData + "/fixture.csv", "--dict", kData + "/dict.tsv", "--emoji",
                                kData + "/emoji.txt", "--out", dir.string(), "--seed", "11"};
  auto args = [&](std::vector<std::string> head, std::vector<std::string> tail) {
    head.insert(head.end(), base.begin(), base.end());
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
  };
  bool cli_ok = cli(args({"tapt"}, {"--tapt-epochs", "2"})) == 0 && cli(args({"finetune"}, {"--tapt", "on", "--epochs", "1"})) == 0;
  if (cli_ok) {
    const Checkpoint init = load_checkpoint(dir / "init_encoders.ckpt");
    const Checkpoint pre = load_checkpoint(dir / "tapt.ckpt");
    const Vocab saved = Vocab::load(dir / "vocab.txt");
    const auto enc = EncoderConfig::from_metadata(pre.metadata, "encoder.");
    Checkpoint fresh;
    export_encoder(base_encoder<float>(enc, 11), fresh, "");
    cli_ok = with_prefix(init, "text_encoder.") == with_prefix(pre, "encoder.") &&
             with_prefix(init, "hashtag_encoder.") == with_prefix(fresh, "") &&
             with_prefix(init, "text_encoder.") != with_prefix(fresh, "") && saved.size() == enc.vocab_size;
  }
  const bool ok = lib_text && lib_tags && lib_moved && cli_ok;
  return {ok, std::string("text encoder == pretrained: ") + (lib_text ? "yes" : "no") +
                  ", hashtag encoder == base init: " + (lib_tags ? "yes" : "no") +
                  ", checkpoints agree: " + (cli_ok ? "yes" : "no")};
}

// --- 7 ----------------------------------------------------------------------

Outcome dimension_law() {
  const int vocab = 8;
  EncodedExample ex{{Vocab::kCls, 5, Vocab::kSep}, {Vocab::kCls, Vocab::kSep}, Eigen::VectorXf::Ones(300)};
  auto fused_width = [&](const FusionConfig& c) {
    const auto m = init_model<float>(c, Task::Coarse, nullptr, 1);
    Tape<float> tape(false);
    Rng rng(0);
    const auto out = forward<float>(tape, m, ex, false, rng);
    return std::pair<Index, Index>{out.fused.cols(), out.logits.cols()};
  };
  const auto paper = fused_width(FusionConfig::paper(vocab));
  const FusionConfig desk_config = FusionConfig::desk(vocab);
  const auto desk = fused_width(desk_config);
  const Index desk_expected = 2 * desk_config.encoder.d_model + 300;
  const bool ok = paper.first == 1836 && desk.first == desk_expected && paper.second == 2 && desk.second == 2;
  return {ok, "paper fused " + std::to_string(paper.first) + ", desk fused " + std::to_string(desk.first) + " (2E+300 = " +
                  std::to_string(desk_expected) + ")"};
}

// --- 8 ----------------------------------------------------------------------

Outcome learning_sanity() {
  // (a) 50 distinct synthetic sentences.
  const char* subjects[] = {"the cat", "a dog",    "my bird",  "the fish",  "our cow",
                            "that goat", "his horse", "her duck", "the mouse", "a frog"};
  const char* verbs[] = {"eats", "watches", "follows", "likes", "finds"};
  const char* objects[] = {"fresh food", "cold water", "bright light", "warm sun", "soft grass"};
  const char* places[] = {"every morning near the river", "late at night in the barn", "after the rain on the hill",
                          "before school by the road", "during the long summer days"};
  TaptCorpus corpus;
  for (int i = 0; i < 50; ++i) {
    corpus.lines.push_back(std::string(subjects[i % 10]) + " " + verbs[(i / 10) % 5] + " " + objects[(i * 3) % 5] +
                           " " + places[(i * 7) % 5]);
    corpus.provenance.push_back(CorpusSource::Raw);
  }
  const Vocab vocab = Vocab::build(corpus.lines);
  auto smoothed_run = [&](std::uint64_t seed) {
    TaptOptions opt;
    opt.epochs = 20;
    opt.lr = 1e-3;
    opt.batch_size = 8;
    opt.seed = seed;
    const auto run = run_tapt(base_encoder<float>(EncoderConfig::desk(vocab.size()), seed), vocab, corpus, opt);
    return smooth(run.epoch_loss, 3);
  };
  auto strictly_decreasing = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (!(v[i] < v[i - 1])) return false;
    }
    return true;
  };
  const auto s = smoothed_run(RunConfig{}.seed);
  const bool decreasing = strictly_decreasing(s);
  if (std::getenv("TAPT_ACCEPTANCE_VERBOSE")) {
    for (double x : s) std::cerr << "  smoothed " << x << "\n";
  }
  // Dynamic masking makes each epoch's loss a sample; report how often the
  // property holds across other seeds as well.
  int other_seeds = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) other_seeds += strictly_decreasing(smoothed_run(seed));

  // (b) overfit a 32-example separable set.
  std::vector<EncodedExample> xs;
  std::vector<int> ys;
  support::separable_toy_set(32, 300, xs, ys);
  TrainOptions train;
  train.epochs = 50;
  train.lr = 1e-3;
  train.batch_size = 8;
  train.seed = 2;
  const TrainRun run = train_binary(FusionConfig::desk(10), Task::Coarse, xs, ys, xs, ys, nullptr, train);
  const double train_f1 = f1_scores(predict_labels(run.best_model, xs), ys).macro_f1;
  int first_perfect = 0;
  for (std::size_t e = 0; e < run.val_macro_f1.size() && !first_perfect; ++e) {
    if (run.val_macro_f1[e] >= 0.99) first_perfect = int(e) + 1;
  }
  return {decreasing && train_f1 >= 0.99,
          "(a) smoothed MLM loss " + fmt("%.4f", s.front()) + " -> " + fmt("%.4f", s.back()) +
              (decreasing ? ", strictly decreasing" : ", NOT strictly decreasing") + " (holds for " +
              std::to_string(other_seeds) + "/10 other seeds); (b) train macro F1 " +
              fmt("%.4f", train_f1) + (first_perfect ? " (reached at epoch " + std::to_string(first_perfect) + ")" : "")};
}

// --- 9 ----------------------------------------------------------------------

Outcome determinism() {
  std::vector<std::string> files;
  std::vector<fs::path> dirs{fresh_dir("determinism_a"), fresh_dir("determinism_b")};
  for (const auto& dir : dirs) {
    std::vector<std::string> base{"--data", kData + "/fixture.csv", "--dict", kData + "/dict.tsv", "--emoji",
                                  kData + "/emoji.txt", "--out", dir.string(), "--seed", "21"};
    auto with = [&](std::vector<std::string> head, std::vector<std::string> tail) {
      head.insert(head.end(), base.begin(), base.end());
      head.insert(head.end(), tail.begin(), tail.end());
      return head;
    };
    if (cli(with({"tapt"}, {"--tapt-epochs", "3"})) || cli(with({"finetune"}, {"--tapt", "on", "--epochs", "2"})) ||
        cli(with({"evaluate"}, {})) || cli(with({"predict"}, {}))) {
      return {false, "pipeline failed in " + dir.string()};
    }
  }
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const auto name = entry.path().filename();
    ++compared;
    if (slurp(dirs[0] / name) != slurp(dirs[1] / name)) differing.push_back(name.string());
  }
  std::string detail = std::to_string(compared) + " artifacts compared";
  for (const auto& d : differing) detail += ", differs: " + d;
  return {differing.empty() && compared >= 15, detail};
}

// --- 10 ---------------------------------------------------------------------

struct PreprocessReport {
  std::map<std::string, long> values;
  long train = -1, val = -1;
};

PreprocessReport preprocess_report(const std::string& data) {
  const fs::path dir = fresh_dir("fidelity");
  std::string out;
  PreprocessReport r;
  if (cli({"preprocess", "--data", data, "--out", dir.string()}, &out) != 0) return r;
  std::istringstream in(out);
  for (std::string line; std::getline(in, line);) {
    if (std::sscanf(line.c_str(), "split: train=%ld val=%ld", &r.train, &r.val) == 2) continue;
    const auto colon = line.find(": ");
    if (colon != std::string::npos) r.values[line.substr(0, colon)] = std::atol(line.c_str() + colon + 2);
  }
  return r;
}

bool matches_training_histogram(const PreprocessReport& r) {
  return r.values.count("non-hostile") && r.values.at("non-hostile") == 3050 && r.values.at("defamation") == 564 &&
         r.values.at("fake") == 1144 && r.values.at("hate") == 792 && r.values.at("offensive") == 742 &&
         std::abs(r.train - 4582) <= 1 && std::abs(r.val - 1146) <= 1;
}

Outcome data_fidelity() {
  std::string detail;
  bool ok = true;

  const auto fixture = preprocess_report(kData + "/fixture.csv");
  const bool fixture_ok = fixture.values.count("posts") && fixture.values.at("posts") == 12 &&
                          fixture.values.at("non-hostile") == 5 && fixture.values.at("defamation") == 2 &&
                          fixture.values.at("fake") == 3 && fixture.values.at("hate") == 2 &&
                          fixture.values.at("offensive") == 2 && fixture.values.at("unlabeled") == 1;
  ok = ok && fixture_ok;
  detail += std::string("fixture histogram ") + (fixture_ok ? "ok" : "WRONG");

  const fs::path synthetic = fresh_dir("fidelity_input") / "constraint_shaped.csv";
  std::ofstream(synthetic, std::ios::binary) << support::to_csv(support::constraint_shaped_posts());
  const auto shaped = preprocess_report(synthetic.string());
  const bool shaped_ok = matches_training_histogram(shaped);
  ok = ok && shaped_ok;
  detail += std::string(", label-matched synthetic file ") + (shaped_ok ? "ok" : "WRONG") + " (split " +
            std::to_string(shaped.train) + "/" + std::to_string(shaped.val) + ")";

  if (const char* real = std::getenv("TAPT_CONSTRAINT_TRAIN"); real && *real) {
    const auto r = preprocess_report(real);
    const bool real_ok = matches_training_histogram(r);
    ok = ok && real_ok;
    detail += std::string(", supplied training file ") + (real_ok ? "ok" : "WRONG") + " (split " +
              std::to_string(r.train) + "/" + std::to_string(r.val) + ")";
  } else {
    detail += ", original training file not supplied (set TAPT_CONSTRAINT_TRAIN)";
  }
  return {ok, detail};
}

// --- 11 ---------------------------------------------------------------------

Outcome label_safety() {
  Rng rng(99);
  int empty = 0, mixed = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    auto draw = [&] {
      // Probabilities concentrate near the threshold and at ties.
      const double p = rng.below(5) == 0 ? 0.5 : rng.below(5) == 0 ? 0.25 : rng.uniform();
      return Prediction{p >= 0.5 ? 1 : 0, p};
    };
    const Prediction coarse = draw();
    std::map<Task, Prediction> fine;
    for (Task t : kTasks) {
      if (t != Task::Coarse) fine[t] = draw();
    }
    const LabelSet labels = assemble_labels(coarse, fine);
    empty += labels.empty();
    mixed += labels.contains(LabelTag::NonHostile) && labels.size() > 1;
  }
  return {empty == 0 && mixed == 0,
          "10000 draws: " + std::to_string(empty) + " empty, " + std::to_string(mixed) + " mixed with non-hostile"};
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    Outcome (*run)();
    double limit_seconds;  // 0 = no runtime bound
  };
  const Criterion criteria[] = {
      {1, "Gradient integrity", gradient_integrity, 60},
      {2, "MLM masking statistics", masking_statistics, 10},
      {3, "Metric oracle", metric_oracle, 0},
      {4, "Segmentation optimality", segmentation_optimality, 30},
      {5, "TAPT corpus invariant", corpus_invariant, 0},
      {6, "Weight-transfer asymmetry", weight_transfer, 0},
      {7, "Dimension law", dimension_law, 0},
      {8, "Learning sanity", learning_sanity, 180},
      {9, "Determinism", determinism, 0},
      {10, "Data fidelity", data_fidelity, 0},
      {11, "Label-assembly safety", label_safety, 0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && seconds > c.limit_seconds) {
      o.pass = false;
      o.detail += "; over the " + fmt("%.0f", c.limit_seconds) + " s budget";
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << c.number << "] " << c.name << ": " << o.detail << " ("
              << fmt("%.2f", seconds) << " s)" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
