#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "tapt/training.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace tapt;

namespace {

RawPost labeled(std::string id, LabelSet labels) { return {std::move(id), "text", std::move(labels)}; }

std::vector<RawPost> balanced(int hostile, int non_hostile) {
  std::vector<RawPost> posts;
  for (int i = 0; i < hostile; ++i) posts.push_back(labeled("h" + std::to_string(i), {LabelTag::Hate}));
  for (int i = 0; i < non_hostile; ++i) posts.push_back(labeled("n" + std::to_string(i), {LabelTag::NonHostile}));
  return posts;
}

std::map<Task, Prediction> fine_probs(double fake, double hate, double offensive, double defamation) {
  auto p = [](double prob) { return Prediction{prob >= 0.5 ? 1 : 0, prob}; };
  return {{Task::Fake, p(fake)}, {Task::Hate, p(hate)}, {Task::Offensive, p(offensive)}, {Task::Defamation, p(defamation)}};
}

}  // namespace

TEST(Split, ExactStratification) {
  const auto posts = balanced(5, 5);
  const Split s = split_dataset(posts, {0.8, 1});
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.val.size(), 2u);
  int hostile_val = 0;
  for (auto i : s.val) hostile_val += posts[i].hostile();
  EXPECT_EQ(hostile_val, 1);
}

TEST(Split, DeterministicDisjointExhaustive) {
  const auto posts = balanced(37, 51);
  const Split a = split_dataset(posts, {0.8, 3});
  const Split b = split_dataset(posts, {0.8, 3});
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_TRUE(std::is_sorted(a.train.begin(), a.train.end()));
  std::set<std::size_t> all(a.train.begin(), a.train.end());
  all.insert(a.val.begin(), a.val.end());
  EXPECT_EQ(all.size(), posts.size());
  EXPECT_EQ(a.train.size() + a.val.size(), posts.size());
  EXPECT_NE(split_dataset(posts, {0.8, 4}).train, a.train);
}

TEST(Split, ConstraintSizeAndProportions) {
  const auto posts = support::constraint_shaped_posts();
  ASSERT_EQ(posts.size(), 5728u);
  const Split s = split_dataset(posts, {0.8, 13});
  EXPECT_GE(s.train.size(), 4582u);
  EXPECT_LE(s.train.size(), 4583u);
  auto share = [&](const std::vector<std::size_t>& idx) {
    double h = 0;
    for (auto i : idx) h += posts[i].hostile();
    return h / double(idx.size());
  };
  EXPECT_NEAR(share(s.train), share(s.val), 0.02);
}

TEST(Split, TooFewPosts) { EXPECT_THROW(split_dataset(balanced(2, 2), {0.8, 1}), std::invalid_argument); }

TEST(Targets, Membership) {
  const std::vector<RawPost> posts{labeled("a", {LabelTag::NonHostile}), labeled("b", {LabelTag::Hate, LabelTag::Offensive})};
  EXPECT_EQ(binary_targets(posts, Task::Coarse), (std::vector<int>{0, 1}));
  EXPECT_EQ(binary_targets(posts, Task::Hate), (std::vector<int>{0, 1}));
  EXPECT_EQ(binary_targets(posts, Task::Offensive), (std::vector<int>{0, 1}));
  EXPECT_EQ(binary_targets(posts, Task::Fake), (std::vector<int>{0, 0}));
  EXPECT_EQ(binary_targets(posts, Task::Defamation), (std::vector<int>{0, 0}));
  const std::vector<RawPost> unlabeled{{"u", "t", {}}};
  EXPECT_THROW(binary_targets(unlabeled, Task::Coarse), std::invalid_argument);
}

TEST(Targets, ConstraintPositiveCounts) {
  const auto posts = support::constraint_shaped_posts();
  auto positives = [&](Task t) {
    const auto y = binary_targets(posts, t);
    return std::count(y.begin(), y.end(), 1);
  };
  EXPECT_EQ(positives(Task::Fake), 1144);
  EXPECT_EQ(positives(Task::Hate), 792);
  EXPECT_EQ(positives(Task::Offensive), 742);
  EXPECT_EQ(positives(Task::Defamation), 564);
  EXPECT_EQ(positives(Task::Coarse), 2678);
}

TEST(Targets, TaskSubset) {
  const std::vector<RawPost> posts{labeled("a", {LabelTag::NonHostile}), labeled("b", {LabelTag::Fake})};
  EXPECT_EQ(task_subset(posts, Task::Fake, FineTrainingSet::AllPosts).size(), 2u);
  EXPECT_EQ(task_subset(posts, Task::Fake, FineTrainingSet::HostileOnly), std::vector<std::size_t>{1});
  EXPECT_EQ(task_subset(posts, Task::Coarse, FineTrainingSet::HostileOnly).size(), 2u);
}

TEST(Metrics, HandCases) {
  const std::vector<int> perfect{1, 0, 1};
  auto r = f1_scores(perfect, perfect);
  EXPECT_DOUBLE_EQ(r.macro_f1, 1.0);
  EXPECT_DOUBLE_EQ(r.weighted_f1, 1.0);

  const std::vector<int> preds{1, 1, 1, 1}, golds{1, 1, 0, 0};
  r = f1_scores(preds, golds);
  EXPECT_DOUBLE_EQ(r.classes[1].f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.classes[0].f1, 0.0);
  EXPECT_DOUBLE_EQ(r.macro_f1, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.weighted_f1, 1.0 / 3.0);

  EXPECT_THROW(f1_scores(std::vector<int>{1}, std::vector<int>{1, 0}), std::invalid_argument);
  EXPECT_THROW(f1_scores(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
  EXPECT_THROW(f1_scores(std::vector<int>{2}, std::vector<int>{1}), std::invalid_argument);
}

TEST(Metrics, MatchesConfusionMatrixOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    std::vector<int> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng.below(2));
      g[i] = static_cast<int>(rng.below(2));
    }
    const auto got = f1_scores(p, g);
    const auto want = support::oracle_f1(p, g);
    for (int c = 0; c < 2; ++c) {
      EXPECT_EQ(got.classes[c].precision, want.classes[c].precision);
      EXPECT_EQ(got.classes[c].recall, want.classes[c].recall);
      EXPECT_EQ(got.classes[c].f1, want.classes[c].f1);
      EXPECT_EQ(static_cast<long>(got.classes[c].support), want.classes[c].support);
    }
    EXPECT_EQ(got.macro_f1, want.macro);
    EXPECT_EQ(got.weighted_f1, want.weighted);
    EXPECT_GE(got.weighted_f1, std::min(got.classes[0].f1, got.classes[1].f1) - 1e-15);
    EXPECT_LE(got.weighted_f1, std::max(got.classes[0].f1, got.classes[1].f1) + 1e-15);
  }
}

TEST(Metrics, AllNegativeOnTestDistribution) {
  // 873 non-hostile, 780 hostile posts.
  std::vector<int> golds(873, 0);
  golds.insert(golds.end(), 780, 1);
  const std::vector<int> preds(golds.size(), 0);
  const auto r = f1_scores(preds, golds);
  EXPECT_EQ(r.classes[1].f1, 0.0);
  EXPECT_NEAR(r.classes[0].f1, 2.0 * 873 / (873 + 1653), 1e-12);
}

TEST(Metrics, WeightedFineAggregate) {
  std::map<Task, BinaryReport> tasks;
  auto with = [](double f1, std::size_t support) {
    BinaryReport r;
    r.classes[1].f1 = f1;
    r.classes[1].support = support;
    return r;
  };
  tasks[Task::Coarse] = with(0.9, 100);
  tasks[Task::Fake] = with(0.8, 30);
  tasks[Task::Hate] = with(0.5, 10);
  tasks[Task::Offensive] = with(0.4, 10);
  tasks[Task::Defamation] = with(0.0, 50);
  EXPECT_NEAR(weighted_fine_f1(tasks), (0.8 * 30 + 0.5 * 10 + 0.4 * 10) / 100.0, 1e-15);
}

TEST(Metrics, ReportLayout) {
  SuiteReport report;
  for (Task t : kTasks) {
    const std::vector<int> y{1, 0};
    report.tasks[t] = f1_scores(y, y);
  }
  report.weighted_fine = weighted_fine_f1(report.tasks);
  std::ostringstream table;
  write_metrics_table(report, table);
  std::vector<std::string> rows;
  std::istringstream in(table.str());
  for (std::string line; std::getline(in, line);) rows.push_back(line);
  ASSERT_EQ(rows.size(), 7u);
  const char* order[] = {"Hostility (Coarse)", "Defamation", "Fake", "Hate", "Offensive", "Weighted (Fine)"};
  for (int i = 0; i < 6; ++i) EXPECT_EQ(rows[i + 1].rfind(order[i], 0), 0u) << rows[i + 1];

  std::ostringstream kv;
  write_metrics_kv(report, kv);
  EXPECT_NE(kv.str().find("hostility.macro_f1=100.0000\n"), std::string::npos);
  EXPECT_NE(kv.str().find("weighted_fine.f1=100.0000\n"), std::string::npos);
}

TEST(Assemble, Rules) {
  EXPECT_EQ(assemble_labels({0, 0.2}, fine_probs(0.9, 0.9, 0.9, 0.9)), LabelSet{LabelTag::NonHostile});
  EXPECT_EQ(assemble_labels({1, 0.9}, fine_probs(0.7, 0.2, 0.1, 0.1)), LabelSet{LabelTag::Fake});
  EXPECT_EQ(assemble_labels({1, 0.9}, fine_probs(0.1, 0.49, 0.3, 0.2)), LabelSet{LabelTag::Hate});
  EXPECT_EQ(assemble_labels({1, 0.9}, fine_probs(0.3, 0.3, 0.3, 0.3)), LabelSet{LabelTag::Fake});
  EXPECT_EQ(assemble_labels({1, 0.9}, fine_probs(0.1, 0.2, 0.4, 0.4)), LabelSet{LabelTag::Offensive});
  EXPECT_EQ(assemble_labels({1, 0.9}, fine_probs(0.6, 0.1, 0.8, 0.5)),
            (LabelSet{LabelTag::Fake, LabelTag::Offensive, LabelTag::Defamation}));
  auto missing = fine_probs(0.1, 0.1, 0.1, 0.1);
  missing.erase(Task::Hate);
  EXPECT_THROW(assemble_labels({1, 0.9}, missing), std::invalid_argument);
}

TEST(BestEpoch, EarliestArgmax) {
  const std::vector<double> trace{0.6, 0.8, 0.8, 0.7};
  EXPECT_EQ(best_epoch_of(trace), 2);
  EXPECT_EQ(best_epoch_of(std::vector<double>{0.1}), 1);
  EXPECT_THROW(best_epoch_of(std::vector<double>{}), std::invalid_argument);
}

TEST(TrainBinary, OverfitsSeparableSetDeterministically) {
  FusionConfig c = FusionConfig::desk(10, 4);
  c.encoder.n_layers = 1;
  std::vector<EncodedExample> xs;
  std::vector<int> ys;
  support::separable_toy_set(16, 4, xs, ys);
  TrainOptions opt;
  opt.epochs = 15;
  opt.lr = 1e-3;
  opt.batch_size = 8;
  opt.seed = 3;
  const TrainRun run = train_binary(c, Task::Hate, xs, ys, xs, ys, nullptr, opt);
  ASSERT_EQ(run.val_macro_f1.size(), 15u);
  ASSERT_EQ(run.train_loss.size(), 15u);
  EXPECT_EQ(run.best_epoch, best_epoch_of(run.val_macro_f1));
  const double best = *std::max_element(run.val_macro_f1.begin(), run.val_macro_f1.end());
  EXPECT_EQ(f1_scores(predict_labels(run.best_model, xs), ys).macro_f1, best);
  EXPECT_GE(best, 0.99);

  const TrainRun again = train_binary(c, Task::Hate, xs, ys, xs, ys, nullptr, opt);
  EXPECT_EQ(to_bytes(to_checkpoint(again.best_model)), to_bytes(to_checkpoint(run.best_model)));
  EXPECT_EQ(again.train_loss, run.train_loss);
}

TEST(TrainBinary, RejectsDegenerateInput) {
  FusionConfig c = FusionConfig::desk(10, 4);
  std::vector<EncodedExample> xs;
  std::vector<int> ys;
  support::separable_toy_set(4, 4, xs, ys);
  const std::vector<int> single(4, 1);
  TrainOptions opt;
  EXPECT_THROW(train_binary(c, Task::Coarse, xs, single, xs, ys, nullptr, opt), std::invalid_argument);
  EXPECT_THROW(train_binary(c, Task::Coarse, xs, ys, {}, {}, nullptr, opt), std::invalid_argument);
  // A single-class validation split is tolerated.
  opt.epochs = 1;
  EXPECT_NO_THROW(train_binary(c, Task::Coarse, xs, ys, xs, single, nullptr, opt));
}

TEST(Evaluate, PerfectPredictionsScoreOne) {
  std::vector<RawPost> posts{labeled("a", {LabelTag::NonHostile}), labeled("b", {LabelTag::Fake, LabelTag::Hate}),
                             labeled("c", {LabelTag::Offensive}), labeled("d", {LabelTag::Defamation})};
  std::map<Task, std::vector<int>> preds;
  for (Task t : kTasks) preds[t] = binary_targets(posts, t);
  const SuiteReport r = score_predictions(preds, posts);
  for (const auto& [task, rep] : r.tasks) {
    EXPECT_DOUBLE_EQ(rep.macro_f1, 1.0) << to_string(task);
    EXPECT_DOUBLE_EQ(rep.weighted_f1, 1.0);
  }
  EXPECT_DOUBLE_EQ(r.weighted_fine, 1.0);
}
