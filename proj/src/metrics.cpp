#include "tapt/metrics.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tapt {

BinaryReport f1_scores(std::span<const int> preds, std::span<const int> golds) {
  if (preds.size() != golds.size()) {
    throw std::invalid_argument("f1_scores: " + std::to_string(preds.size()) + " predictions for " +
                                std::to_string(golds.size()) + " labels");
  }
  if (preds.empty()) throw std::invalid_argument("f1_scores: empty input");
  // counts[gold][pred]
  std::size_t counts[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] != 0 && preds[i] != 1) || (golds[i] != 0 && golds[i] != 1)) {
      throw std::invalid_argument("f1_scores: labels must be 0 or 1");
    }
    ++counts[golds[i]][preds[i]];
  }
  BinaryReport r;
  double weighted = 0;
  for (int c = 0; c < 2; ++c) {
    const double tp = static_cast<double>(counts[c][c]);
    const double predicted = static_cast<double>(counts[0][c] + counts[1][c]);
    const double actual = static_cast<double>(counts[c][0] + counts[c][1]);
    ClassScores& s = r.classes[c];
    s.precision = predicted > 0 ? tp / predicted : 0.0;
    s.recall = actual > 0 ? tp / actual : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    s.support = counts[c][0] + counts[c][1];
    weighted += s.f1 * actual;
  }
  r.macro_f1 = (r.classes[0].f1 + r.classes[1].f1) / 2;
  r.weighted_f1 = weighted / static_cast<double>(preds.size());
  return r;
}

double weighted_fine_f1(const std::map<Task, BinaryReport>& tasks) {
  double num = 0, den = 0;
  for (Task t : {Task::Fake, Task::Hate, Task::Offensive, Task::Defamation}) {
    auto it = tasks.find(t);
    if (it == tasks.end()) throw std::invalid_argument("weighted_fine_f1: missing task " + std::string(to_string(t)));
    const auto& pos = it->second.classes[1];
    num += pos.f1 * static_cast<double>(pos.support);
    den += static_cast<double>(pos.support);
  }
  return den > 0 ? num / den : 0.0;
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", 100.0 * v);
  return buf;
}

const char* row_title(Task t) {
  switch (t) {
    case Task::Coarse: return "Hostility (Coarse)";
    case Task::Defamation: return "Defamation";
    case Task::Fake: return "Fake";
    case Task::Hate: return "Hate";
    case Task::Offensive: return "Offensive";
  }
  return "";
}

}  // namespace

void write_metrics_kv(const SuiteReport& report, std::ostream& out) {
  for (Task t : kReportOrder) {
    const auto& r = report.tasks.at(t);
    const std::string name(to_string(t));
    out << name << ".macro_f1=" << pct(r.macro_f1) << '\n';
    out << name << ".weighted_f1=" << pct(r.weighted_f1) << '\n';
    for (int c = 0; c < 2; ++c) {
      const auto& s = r.classes[c];
      const std::string k = name + ".class" + std::to_string(c);
      out << k << ".precision=" << pct(s.precision) << '\n';
      out << k << ".recall=" << pct(s.recall) << '\n';
      out << k << ".f1=" << pct(s.f1) << '\n';
      out << k << ".support=" << s.support << '\n';
    }
  }
  out << "weighted_fine.f1=" << pct(report.weighted_fine) << '\n';
}

void write_metrics_table(const SuiteReport& report, std::ostream& out) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-20s %10s %12s\n", "Task", "Macro F1", "Weighted F1");
  out << buf;
  for (Task t : kReportOrder) {
    const auto& r = report.tasks.at(t);
    std::snprintf(buf, sizeof buf, "%-20s %10.2f %12.2f\n", row_title(t), 100 * r.macro_f1, 100 * r.weighted_f1);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-20s %10s %12.2f\n", "Weighted (Fine)", "-", 100 * report.weighted_fine);
  out << buf;
}

}  // namespace tapt
