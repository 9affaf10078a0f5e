// SPDX-License-Identifier: Apache-2.0
//
// Multinomial Naive Bayes over sparse document-term features.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentibench/error.hpp"
#include "sentibench/features.hpp"
#include "sentibench/label.hpp"

namespace sentibench {

using ClassVector = std::array<double, kNumClasses>;

struct NaiveBayesModel {
  ClassVector class_log_prior{};
  /// Row-major kNumClasses x num_features matrix of log P(term | class).
  std::vector<double> feature_log_likelihood;
  std::size_t num_features = 0;
  double alpha = 1.0;
  std::string vocabulary_hash;

  double log_likelihood(std::size_t cls, std::size_t feature) const {
    return feature_log_likelihood[cls * num_features + feature];
  }
};

inline double log_sum_exp(const ClassVector& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Lidstone-smoothed estimator. Feature values may be fractional.
inline NaiveBayesModel nb_fit(const DocTermMatrix& x, const std::vector<SentimentLabel>& y, double alpha,
                              std::string vocabulary_hash = {}) {
  if (x.rows() != y.size())
    throw Error("naive_bayes", "feature rows (" + std::to_string(x.rows()) + ") != labels (" +
                                   std::to_string(y.size()) + ")");
  if (!(alpha > 0.0)) throw Error("naive_bayes", "alpha must be positive");
  if (x.cols() == 0) throw Error("naive_bayes", "feature space is empty");

  const std::size_t v = x.cols();
  std::array<std::size_t, kNumClasses> doc_count{};
  std::vector<double> feature_sum(kNumClasses * v, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const std::size_t c = class_index(y[r]);
    ++doc_count[c];
    for (const auto& e : x.row(r)) feature_sum[c * v + e.index] += e.value;
  }
  for (std::size_t c = 0; c < kNumClasses; ++c)
    if (doc_count[c] == 0)
      throw Error("naive_bayes", "class " + to_string(label_from_index(c)) + " absent from training data");

  NaiveBayesModel model;
  model.num_features = v;
  model.alpha = alpha;
  model.vocabulary_hash = std::move(vocabulary_hash);
  model.feature_log_likelihood.resize(kNumClasses * v);
  const double n = static_cast<double>(y.size());
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    model.class_log_prior[c] = std::log(static_cast<double>(doc_count[c]) / n);
    double total = alpha * static_cast<double>(v);
    for (std::size_t t = 0; t < v; ++t) total += feature_sum[c * v + t];
    const double log_total = std::log(total);
    for (std::size_t t = 0; t < v; ++t)
      model.feature_log_likelihood[c * v + t] = std::log(feature_sum[c * v + t] + alpha) - log_total;
  }
  return model;
}

/// Unnormalised joint log score log P(c) + sum_t x_t log P(t|c).
inline ClassVector nb_joint_log_likelihood(const NaiveBayesModel& model, std::span<const SparseEntry> x) {
  ClassVector score = model.class_log_prior;
  for (const auto& e : x) {
    if (e.index >= model.num_features) throw Error("naive_bayes", "feature index outside model vocabulary");
    for (std::size_t c = 0; c < kNumClasses; ++c) score[c] += e.value * model.log_likelihood(c, e.index);
  }
  return score;
}

inline ClassVector nb_predict_log_proba(const NaiveBayesModel& model, std::span<const SparseEntry> x) {
  ClassVector score = nb_joint_log_likelihood(model, x);
  const double norm = log_sum_exp(score);
  for (double& s : score) s -= norm;
  return score;
}

inline SentimentLabel nb_predict(const NaiveBayesModel& model, std::span<const SparseEntry> x) {
  return argmax_label(nb_predict_log_proba(model, x));
}

inline constexpr int kNaiveBayesFormatVersion = 1;

inline nlohmann::json to_json(const NaiveBayesModel& m) {
  return {{"format", "sentibench.naive_bayes"},
          {"version", kNaiveBayesFormatVersion},
          {"alpha", m.alpha},
          {"num_features", m.num_features},
          {"class_log_prior", m.class_log_prior},
          {"feature_log_likelihood", m.feature_log_likelihood},
          {"vocabulary_hash", m.vocabulary_hash}};
}

inline NaiveBayesModel naive_bayes_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "sentibench.naive_bayes") throw Error("naive_bayes", "not a Naive Bayes artifact");
  if (j.value("version", 0) != kNaiveBayesFormatVersion)
    throw Error("naive_bayes", "unsupported artifact version " + j.value("version", nlohmann::json()).dump());
  NaiveBayesModel m;
  m.alpha = j.at("alpha").get<double>();
  m.num_features = j.at("num_features").get<std::size_t>();
  m.class_log_prior = j.at("class_log_prior").get<ClassVector>();
  m.feature_log_likelihood = j.at("feature_log_likelihood").get<std::vector<double>>();
  m.vocabulary_hash = j.at("vocabulary_hash").get<std::string>();
  if (m.feature_log_likelihood.size() != kNumClasses * m.num_features)
    throw Error("naive_bayes", "log-likelihood matrix has the wrong size");
  return m;
}

}  // namespace sentibench
