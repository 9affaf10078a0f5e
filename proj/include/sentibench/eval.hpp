// SPDX-License-Identifier: Apache-2.0
//
// Confusion matrix and accuracy / precision / recall / F1 with macro and
// support-weighted averaging.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentibench/error.hpp"
#include "sentibench/label.hpp"

namespace sentibench {

/// Rows are gold labels, columns predictions, both ordered (-1, 0, 1).
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> cells{};

  std::uint64_t total() const noexcept {
    std::uint64_t t = 0;
    for (const auto& row : cells)
      for (auto v : row) t += v;
    return t;
  }

  std::uint64_t& at(SentimentLabel gold, SentimentLabel pred) { return cells[class_index(gold)][class_index(pred)]; }
  std::uint64_t at(SentimentLabel gold, SentimentLabel pred) const {
    return cells[class_index(gold)][class_index(pred)];
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other) noexcept {
    for (std::size_t g = 0; g < kNumClasses; ++g)
      for (std::size_t p = 0; p < kNumClasses; ++p) cells[g][p] += other.cells[g][p];
    return *this;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion_matrix(const std::vector<SentimentLabel>& gold,
                                        const std::vector<SentimentLabel>& pred) {
  if (gold.size() != pred.size())
    throw Error("eval", "gold has " + std::to_string(gold.size()) + " labels, predictions " +
                            std::to_string(pred.size()));
  if (gold.empty()) throw Error("eval", "cannot evaluate an empty prediction set");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < gold.size(); ++i) ++cm.at(gold[i], pred[i]);
  return cm;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
  bool undefined = false;  // a zero denominator was replaced by 0
};

struct AveragedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  double accuracy = 0.0;
  std::array<ClassMetrics, kNumClasses> per_class{};
  AveragedMetrics macro;
  AveragedMetrics weighted;
  ConfusionMatrix confusion;
  std::uint64_t total = 0;
  bool zero_division = false;
};

inline MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.confusion = cm;
  r.total = cm.total();
  if (r.total == 0) throw Error("eval", "confusion matrix is empty");
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) trace += cm.cells[c][c];
  r.accuracy = static_cast<double>(trace) / static_cast<double>(r.total);

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::uint64_t predicted = 0, actual = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      predicted += cm.cells[k][c];
      actual += cm.cells[c][k];
    }
    const auto tp = static_cast<double>(cm.cells[c][c]);
    auto& m = r.per_class[c];
    m.support = actual;
    if (predicted > 0) m.precision = tp / static_cast<double>(predicted);
    else m.undefined = true;
    if (actual > 0) m.recall = tp / static_cast<double>(actual);
    else m.undefined = true;
    if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    r.zero_division = r.zero_division || m.undefined;

    const double w = static_cast<double>(actual) / static_cast<double>(r.total);
    r.macro.precision += m.precision / kNumClasses;
    r.macro.recall += m.recall / kNumClasses;
    r.macro.f1 += m.f1 / kNumClasses;
    r.weighted.precision += w * m.precision;
    r.weighted.recall += w * m.recall;
    r.weighted.f1 += w * m.f1;
  }
  return r;
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = r.per_class[c];
    per_class[to_string(label_from_index(c))] = {
        {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  }
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& row : r.confusion.cells) cells.push_back(row);
  return {{"accuracy", r.accuracy},
          {"precision", {{"macro", r.macro.precision}, {"weighted", r.weighted.precision}}},
          {"recall", {{"macro", r.macro.recall}, {"weighted", r.weighted.recall}}},
          {"f1", {{"macro", r.macro.f1}, {"weighted", r.weighted.f1}}},
          {"per_class", per_class},
          {"confusion_matrix", {{"labels", {-1, 0, 1}}, {"rows", "gold"}, {"cells", cells}}},
          {"support", r.total},
          {"zero_division", r.zero_division}};
}

/// One row per model: accuracy then precision / recall / F1, each as
/// macro and weighted.
inline std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t name_width = 5;
  for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %8s  %9s  %9s  %9s  %9s  %9s  %9s\n", static_cast<int>(name_width), "Model",
                "Accuracy", "Prec(M)", "Rec(M)", "F1(M)", "Prec(W)", "Rec(W)", "F1(W)");
  out += buf;
  out += std::string(name_width + 2 + 8 + 6 * 11, '-') + "\n";
  for (const auto& [name, r] : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %8.4f  %9.4f  %9.4f  %9.4f  %9.4f  %9.4f  %9.4f\n",
                  static_cast<int>(name_width), name.c_str(), r.accuracy, r.macro.precision, r.macro.recall,
                  r.macro.f1, r.weighted.precision, r.weighted.recall, r.weighted.f1);
    out += buf;
  }
  out += "(M) = macro average over classes, (W) = support-weighted average\n";
  return out;
}

}  // namespace sentibench
