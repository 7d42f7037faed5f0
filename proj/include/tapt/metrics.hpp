#pragma once

#include "tapt/dataset.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>

namespace tapt {

struct ClassScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;
};

/// Binary classification scores; classes[0] is the negative class.
struct BinaryReport {
  std::array<ClassScores, 2> classes;
  double macro_f1 = 0;     // unweighted mean over the two classes
  double weighted_f1 = 0;  // support-weighted mean over the two classes
};

/// Per-class precision/recall/F1 with 0 for undefined ratios. Throws
/// std::invalid_argument on empty or mismatched inputs, or labels outside
/// {0, 1}.
BinaryReport f1_scores(std::span<const int> preds, std::span<const int> golds);

/// The five task reports plus the fine aggregate: positive-class F1 of the
/// four fine tasks, weighted by their positive supports.
struct SuiteReport {
  std::map<Task, BinaryReport> tasks;
  double weighted_fine = 0;
};

double weighted_fine_f1(const std::map<Task, BinaryReport>& tasks);

/// "task.metric=value" lines in percent with four decimals.
void write_metrics_kv(const SuiteReport& report, std::ostream& out);

/// Aligned table: Hostility (Coarse), Defamation, Fake, Hate, Offensive,
/// Weighted (Fine).
void write_metrics_table(const SuiteReport& report, std::ostream& out);

}  // namespace tapt
