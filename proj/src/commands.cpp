#include "tapt/commands.hpp"

#include "tapt/errors.hpp"
#include "tapt/tapt.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

namespace tapt {

namespace fs = std::filesystem;

namespace {

struct Inputs {
  std::vector<RawPost> posts;
  FreqDict dict;
  EmojiTable table{300};
  std::vector<FeatureBundle> features;
};

Inputs load_inputs(const RunConfig& c) {
  if (c.data.empty()) throw UsageError("no dataset given (--data)");
  Inputs in;
  in.posts = load_dataset(c.data);
  if (!c.dict.empty()) in.dict = load_freq_dict(c.dict);
  if (!c.emoji.empty()) in.table = load_emoji_table(c.emoji);
  in.features.reserve(in.posts.size());
  for (const auto& p : in.posts) in.features.push_back(extract_features(p.text, in.dict, in.table));
  return in;
}

Split split_posts(const RunConfig& c, const std::vector<RawPost>& posts) {
  try {
    return split_dataset(posts, {c.train_fraction, c.seed});
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("cannot split dataset: ") + e.what());
  }
}

Vocab vocab_for(const Inputs& in, const Split& split) {
  std::vector<std::string> lines;
  for (auto i : split.train) {
    lines.push_back(in.posts[i].text);
    lines.push_back(in.features[i].cleaned_text);
    lines.push_back(in.features[i].hashtag_flow);
  }
  return Vocab::build(lines);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::string one_line(std::string_view text) {
  std::string s(text);
  for (char& ch : s) {
    if (ch == '\t' || ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::map<std::string, std::string> run_metadata(const RunConfig& c) {
  return {
      {"seed", std::to_string(c.seed)},
      {"profile", std::string(to_string(c.profile))},
      {"train_fraction", fmt("%.17g", c.train_fraction)},
  };
}

std::string histogram_line(const LabelHistogram& h) {
  return "# labels non-hostile=" + std::to_string(h.non_hostile) + " defamation=" + std::to_string(h.defamation) +
         " fake=" + std::to_string(h.fake) + " hate=" + std::to_string(h.hate) +
         " offensive=" + std::to_string(h.offensive) + " unlabeled=" + std::to_string(h.unlabeled);
}

fs::path model_path(const fs::path& dir, Task task) {
  return dir / ("model_" + std::string(to_string(task)) + ".ckpt");
}

std::map<Task, FusionModel<float>> load_models(const fs::path& dir, const Vocab& vocab) {
  std::map<Task, FusionModel<float>> models;
  for (Task task : kTasks) {
    const fs::path path = model_path(dir, task);
    if (!fs::exists(path)) throw DataError("missing model checkpoint " + path.string());
    const Checkpoint ckpt = load_checkpoint(path);
    if (ckpt.metadata.count("vocab_hash") == 0 || ckpt.meta("vocab_hash") != vocab.hash()) {
      throw DataError("vocabulary hash mismatch between " + path.string() + " and the current vocabulary");
    }
    auto model = model_from_checkpoint<float>(ckpt);
    if (model.task != task) throw DataError(path.string() + " holds the " + std::string(to_string(model.task)) + " model");
    if (model.config.encoder.vocab_size != vocab.size()) {
      throw DataError(path.string() + ": vocabulary size does not match");
    }
    models.emplace(task, std::move(model));
  }
  return models;
}

std::vector<EncodedExample> encode_all(const Inputs& in, std::span<const std::size_t> indices, const Vocab& vocab,
                                       int max_len) {
  std::vector<EncodedExample> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(encode_example(in.features[i], vocab, max_len));
  return out;
}

std::vector<std::size_t> labeled_only(const std::vector<RawPost>& posts, std::span<const std::size_t> indices) {
  std::vector<std::size_t> out;
  for (auto i : indices) {
    if (posts[i].labeled()) out.push_back(i);
  }
  return out;
}

}  // namespace

void cmd_preprocess(const RunConfig& config, std::ostream& log) {
  const Inputs in = load_inputs(config);
  const LabelHistogram hist = label_histogram(in.posts);
  auto out = open_out(config.out / "features.tsv");
  for (std::size_t i = 0; i < in.posts.size(); ++i) {
    const auto& f = in.features[i];
    out << one_line(in.posts[i].id) << '\t' << one_line(f.cleaned_text) << '\t' << one_line(f.hashtag_flow) << '\t'
        << f.emoji_count << '\n';
  }
  out << histogram_line(hist) << '\n';

  log << "posts: " << in.posts.size() << '\n'
      << "non-hostile: " << hist.non_hostile << '\n'
      << "defamation: " << hist.defamation << '\n'
      << "fake: " << hist.fake << '\n'
      << "hate: " << hist.hate << '\n'
      << "offensive: " << hist.offensive << '\n'
      << "unlabeled: " << hist.unlabeled << '\n';
  if (in.posts.size() >= 5) {
    const Split split = split_posts(config, in.posts);
    log << "split: train=" << split.train.size() << " val=" << split.val.size() << '\n';
  }
}

void cmd_tapt(const RunConfig& config, std::ostream& log) {
  const Inputs in = load_inputs(config);
  const Split split = split_posts(config, in.posts);
  if (split.train.empty()) throw DataError("training split is empty");
  const auto train_posts = gather<RawPost>(in.posts, split.train);

  const TaptCorpus corpus =
      build_tapt_corpus(config.tapt_corpus_all ? std::span<const RawPost>(in.posts) : std::span<const RawPost>(train_posts),
                        config.clean_dup);
  {
    auto out = open_out(config.out / "tapt_corpus.txt");
    corpus.write(out);
  }
  log << "corpus lines: " << corpus.size() << '\n';

  const Vocab vocab = vocab_for(in, split);
  vocab.save(config.out / "vocab.txt");

  const EncoderConfig enc = config.fusion_config(vocab.size(), in.table.dim()).encoder;
  TaptOptions options;
  options.epochs = config.resolved_tapt_epochs();
  options.lr = config.resolved_tapt_lr();
  options.seed = config.seed;
  TaptResult result;
  try {
    result = run_tapt(base_encoder<float>(enc, config.seed), vocab, corpus, options);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("pretraining: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.metadata = run_metadata(config);
  ckpt.metadata["format"] = "tapt-encoder";
  ckpt.metadata["vocab_hash"] = vocab.hash();
  ckpt.metadata["tapt_epochs"] = std::to_string(options.epochs);
  ckpt.metadata["tapt_lr"] = fmt("%.17g", options.lr);
  ckpt.metadata["corpus_lines"] = std::to_string(corpus.size());
  enc.to_metadata(ckpt.metadata, "encoder.");
  export_encoder(result.weights, ckpt, "encoder.");
  const fs::path ckpt_path = config.out / "tapt.ckpt";
  save_checkpoint(ckpt, ckpt_path);

  auto trace = open_out(config.out / "tapt_loss.csv");
  trace << "epoch,loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    trace << e + 1 << ',' << fmt("%.9g", result.epoch_loss[e]) << '\n';
  }
  log << "epochs: " << result.epoch_loss.size() << " steps: " << result.steps << '\n';
  if (!result.epoch_loss.empty()) log << "final loss: " << fmt("%.6f", result.epoch_loss.back()) << '\n';
  log << "wrote " << ckpt_path.string() << '\n';
}

void cmd_finetune(const RunConfig& config, std::ostream& log) {
  const Inputs in = load_inputs(config);
  const Split split = split_posts(config, in.posts);
  const Vocab vocab = vocab_for(in, split);
  const FusionConfig fconfig = config.fusion_config(vocab.size(), in.table.dim());

  std::optional<EncoderWeights<float>> pretrained;
  if (config.tapt) {
    const fs::path path = config.resolved_tapt_checkpoint();
    if (!fs::exists(path)) throw DataError("TAPT checkpoint " + path.string() + " not found (run tapt or pass --tapt off)");
    const Checkpoint ckpt = load_checkpoint(path);
    if (ckpt.metadata.count("format") == 0 || ckpt.meta("format") != "tapt-encoder") {
      throw DataError(path.string() + " is not a TAPT checkpoint");
    }
    if (ckpt.metadata.count("vocab_hash") == 0 || ckpt.meta("vocab_hash") != vocab.hash()) {
      throw DataError("vocabulary hash mismatch between " + path.string() + " and the current vocabulary");
    }
    const EncoderConfig stored = EncoderConfig::from_metadata(ckpt.metadata, "encoder.");
    if (!(stored == fconfig.encoder)) throw DataError(path.string() + ": encoder configuration does not match the profile");
    pretrained = import_encoder<float>(ckpt, stored, "encoder.");
  }
  const EncoderWeights<float>* tapt_ptr = pretrained ? &*pretrained : nullptr;

  vocab.save(config.out / "vocab.txt");
  auto meta = run_metadata(config);
  meta["vocab_hash"] = vocab.hash();
  meta["tapt"] = config.tapt ? "on" : "off";
  meta["epochs"] = std::to_string(config.resolved_epochs());
  meta["lr"] = fmt("%.17g", config.resolved_lr());
  meta["batch_size"] = std::to_string(config.resolved_batch_size());
  meta["fine_training"] = config.fine_set == FineTrainingSet::AllPosts ? "all" : "hostile";

  {
    const auto init = init_model<float>(fconfig, Task::Coarse, tapt_ptr, config.seed);
    Checkpoint ckpt;
    ckpt.metadata = meta;
    ckpt.metadata["format"] = "initial-encoders";
    fconfig.encoder.to_metadata(ckpt.metadata, "encoder.");
    export_encoder(init.text_encoder, ckpt, "text_encoder.");
    export_encoder(init.hashtag_encoder, ckpt, "hashtag_encoder.");
    save_checkpoint(ckpt, config.out / "init_encoders.ckpt");
  }

  const auto train_all = labeled_only(in.posts, split.train);
  const auto val_all = labeled_only(in.posts, split.val);
  if (train_all.empty()) throw DataError("training split holds no labeled posts");
  if (val_all.empty()) throw DataError("validation split holds no labeled posts");

  TrainOptions options;
  options.epochs = config.resolved_epochs();
  options.lr = config.resolved_lr();
  options.batch_size = config.resolved_batch_size();
  options.seed = config.seed;

  const int max_len = fconfig.encoder.max_len;
  for (Task task : kTasks) {
    auto pick = [&](const std::vector<std::size_t>& pool) {
      const auto posts = gather<RawPost>(in.posts, pool);
      std::vector<std::size_t> out;
      for (auto k : task_subset(posts, task, config.fine_set)) out.push_back(pool[k]);
      return out;
    };
    const auto train_idx = pick(train_all);
    const auto val_idx = pick(val_all);
    const auto train_posts = gather<RawPost>(in.posts, train_idx);
    const auto val_posts = gather<RawPost>(in.posts, val_idx);
    const auto train_x = encode_all(in, train_idx, vocab, max_len);
    const auto val_x = encode_all(in, val_idx, vocab, max_len);
    const auto train_y = binary_targets(train_posts, task);
    const auto val_y = binary_targets(val_posts, task);

    TrainRun run;
    try {
      run = train_binary(fconfig, task, train_x, train_y, val_x, val_y, tapt_ptr, options);
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string(to_string(task)) + ": " + e.what());
    }

    auto extra = meta;
    extra["best_epoch"] = std::to_string(run.best_epoch);
    extra["best_val_macro_f1"] = fmt("%.9f", run.val_macro_f1[static_cast<std::size_t>(run.best_epoch - 1)]);
    save_checkpoint(to_checkpoint(run.best_model, extra), model_path(config.out, task));

    auto trace = open_out(config.out / ("trace_" + std::string(to_string(task)) + ".csv"));
    trace << "epoch,train_loss,val_macro_f1\n";
    for (std::size_t e = 0; e < run.val_macro_f1.size(); ++e) {
      trace << e + 1 << ',' << fmt("%.9g", run.train_loss[e]) << ',' << fmt("%.9g", run.val_macro_f1[e]) << '\n';
    }
    log << to_string(task) << ": best_epoch=" << run.best_epoch << " val_macro_f1="
        << fmt("%.4f", 100.0 * run.val_macro_f1[static_cast<std::size_t>(run.best_epoch - 1)]) << '\n';
  }
}

void cmd_evaluate(const RunConfig& config, std::ostream& log) {
  const Inputs in = load_inputs(config);
  const Vocab vocab = Vocab::load(config.out / "vocab.txt");
  const auto models = load_models(config.out, vocab);

  std::vector<std::size_t> pool;
  if (config.eval_split == "all") {
    for (std::size_t i = 0; i < in.posts.size(); ++i) pool.push_back(i);
  } else {
    const Split split = split_posts(config, in.posts);
    pool = config.eval_split == "train" ? split.train : split.val;
  }
  pool = labeled_only(in.posts, pool);
  if (pool.empty()) throw DataError("no labeled posts to evaluate");

  const auto posts = gather<RawPost>(in.posts, pool);
  const auto xs = encode_all(in, pool, vocab, models.begin()->second.config.encoder.max_len);
  const SuiteReport report = evaluate_suite(models, xs, posts);
  {
    auto out = open_out(config.out / "metrics.txt");
    write_metrics_kv(report, out);
  }
  {
    auto out = open_out(config.out / "metrics_table.txt");
    write_metrics_table(report, out);
  }
  write_metrics_table(report, log);
}

void cmd_predict(const RunConfig& config, std::ostream& out) {
  const Inputs in = load_inputs(config);
  const Vocab vocab = Vocab::load(config.out / "vocab.txt");
  const auto models = load_models(config.out, vocab);
  const int max_len = models.begin()->second.config.encoder.max_len;

  auto file = open_out(config.out / "predictions.tsv");
  for (std::size_t i = 0; i < in.posts.size(); ++i) {
    const EncodedExample ex = encode_example(in.features[i], vocab, max_len);
    const Prediction coarse = predict(models.at(Task::Coarse), ex);
    std::map<Task, Prediction> fine;
    for (Task task : kTasks) {
      if (task != Task::Coarse) fine.emplace(task, predict(models.at(task), ex));
    }
    const std::string line = one_line(in.posts[i].id) + '\t' + join_labels(assemble_labels(coarse, fine)) + '\n';
    out << line;
    file << line;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hostility detection with task-adaptive pretraining", "tapt"};
  app.require_subcommand(1);

  std::map<std::string, std::string> values;
  std::string config_path;
  bool no_clean_dup = false;

  struct Flag {
    const char* name;
    const char* key;
    const char* help;
  };
  const Flag flags[] = {
      {"--profile", "profile", "desk | paper"},
      {"--seed", "seed", "base seed for every random stream"},
      {"--epochs", "epochs", "fine-tuning epochs"},
      {"--lr", "lr", "fine-tuning learning rate"},
      {"--tapt", "tapt", "on | off"},
      {"--data", "data", "dataset CSV (id,text,labels)"},
      {"--emoji", "emoji", "emoji embedding table"},
      {"--dict", "dict", "word frequency dictionary"},
      {"--out", "out", "artifact directory"},
      {"--tapt-epochs", "tapt_epochs", "pretraining epochs"},
      {"--tapt-lr", "tapt_lr", "pretraining learning rate"},
      {"--batch-size", "batch_size", "fine-tuning batch size"},
      {"--tapt-checkpoint", "tapt_checkpoint", "pretrained encoder (default <out>/tapt.ckpt)"},
      {"--tapt-corpus", "tapt_corpus", "train | all"},
      {"--fine-training", "fine_training", "all | hostile"},
      {"--split", "split", "all | train | val (evaluate)"},
      {"--train-fraction", "train_fraction", "training share of each stratum"},
  };

  std::vector<std::string> storage(std::size(flags));
  for (CLI::App* sub : {app.add_subcommand("preprocess", "extract features and report label counts"),
                        app.add_subcommand("tapt", "task-adaptive MLM pretraining"),
                        app.add_subcommand("finetune", "train the five binary models"),
                        app.add_subcommand("evaluate", "score the trained models"),
                        app.add_subcommand("predict", "label every post")}) {
    sub->add_option("--config", config_path, "key=value configuration file");
    for (std::size_t i = 0; i < std::size(flags); ++i) sub->add_option(flags[i].name, storage[i], flags[i].help);
    sub->add_flag("--no-clean-dup", no_clean_dup, "pretrain on raw lines only");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    RunConfig config;
    if (!config_path.empty()) config.load(fs::path(config_path));
    for (std::size_t i = 0; i < std::size(flags); ++i) {
      if (sub->count(flags[i].name) > 0) config.set(flags[i].key, storage[i]);
    }
    if (no_clean_dup) config.clean_dup = false;

    if (command == "preprocess") {
      cmd_preprocess(config, out);
    } else if (command == "tapt") {
      cmd_tapt(config, out);
    } else if (command == "finetune") {
      cmd_finetune(config, out);
    } else if (command == "evaluate") {
      cmd_evaluate(config, out);
    } else {
      cmd_predict(config, out);
    }
  } catch (const UsageError& e) {
    err << "tapt " << command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "tapt " << command << ": " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "tapt " << command << ": internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace tapt
