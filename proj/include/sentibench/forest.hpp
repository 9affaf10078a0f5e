// SPDX-License-Identifier: Apache-2.0
//
// CART classification trees (Gini) and a bootstrap-aggregated forest.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sentibench/error.hpp"
#include "sentibench/label.hpp"
#include "sentibench/rng.hpp"

namespace sentibench {

/// Dense row-major sample matrix.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(std::size_t dim = 0) : dim_(dim) {}

  void append(std::span<const double> row) {
    if (row.size() != dim_) throw Error("forest", "feature row has the wrong dimension");
    for (double v : row)
      if (!std::isfinite(v)) throw Error("forest", "feature values must be finite");
    values_.insert(values_.end(), row.begin(), row.end());
  }

  std::size_t rows() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * dim_, dim_}; }
  double at(std::size_t r, std::size_t f) const { return values_[r * dim_ + f]; }

 private:
  std::size_t dim_;
  std::vector<double> values_;
};

using ClassCounts = std::array<std::uint32_t, kNumClasses>;

inline double gini(const ClassCounts& counts) {
  double n = 0.0;
  for (auto c : counts) n += c;
  if (n == 0.0) return 0.0;
  double sq = 0.0;
  for (auto c : counts) sq += (c / n) * (c / n);
  return 1.0 - sq;
}

struct TreeParams {
  std::optional<std::size_t> max_depth = 12;  // nullopt = unlimited
  std::size_t min_samples_split = 2;
  std::size_t features_per_split = 0;  // 0 = ceil(sqrt(dim))
};

inline std::size_t resolve_features_per_split(std::size_t requested, std::size_t dim) {
  const std::size_t k =
      requested == 0 ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim)))) : requested;
  if (k < 1 || k > dim)
    throw Error("forest", "features_per_split must lie in [1, " + std::to_string(dim) + "]");
  return k;
}

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left iff x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  ClassCounts counts{};

  bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t dim = 0;
  TreeParams params;

  std::size_t depth() const {
    std::size_t best = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [n, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (!nodes[n].is_leaf()) {
        stack.emplace_back(static_cast<std::size_t>(nodes[n].left), d + 1);
        stack.emplace_back(static_cast<std::size_t>(nodes[n].right), d + 1);
      }
    }
    return best;
  }
};

namespace detail {

struct SplitChoice {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, const std::vector<SentimentLabel>& y, const TreeParams& params,
              CounterRng& rng)
      : x_(x), y_(y), params_(params), rng_(rng),
        k_(resolve_features_per_split(params.features_per_split, x.dim())) {}

  DecisionTree build(std::vector<std::size_t> sample) {
    tree_.dim = x_.dim();
    tree_.params = params_;
    grow(std::move(sample), 0);
    return std::move(tree_);
  }

 private:
  std::int32_t grow(std::vector<std::size_t> sample, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    ClassCounts counts{};
    for (auto i : sample) ++counts[class_index(y_[i])];
    tree_.nodes[id].counts = counts;

    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
    const bool too_deep = params_.max_depth && depth >= *params_.max_depth;
    if (pure || too_deep || sample.size() < params_.min_samples_split) return id;

    const auto split = best_split(sample);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto i : sample)
      (x_.at(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(i);
    sample.clear();
    sample.shrink_to_fit();

    tree_.nodes[id].feature = split.feature;
    tree_.nodes[id].threshold = split.threshold;
    const auto l = grow(std::move(left), depth + 1);
    const auto r = grow(std::move(right), depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> all(x_.dim());
    for (std::size_t f = 0; f < all.size(); ++f) all[f] = f;
    if (k_ == all.size()) return all;
    for (std::size_t i = 0; i < k_; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.below(all.size() - i));
      std::swap(all[i], all[j]);
    }
    all.resize(k_);
    std::sort(all.begin(), all.end());
    return all;
  }

  // Lowest weighted Gini; ties go to the lowest feature, then lowest threshold.
  SplitChoice best_split(const std::vector<std::size_t>& sample) {
    SplitChoice best;
    bool found = false;
    const double n = static_cast<double>(sample.size());
    std::vector<std::pair<double, std::size_t>> column(sample.size());
    for (auto f : candidate_features()) {
      for (std::size_t k = 0; k < sample.size(); ++k)
        column[k] = {x_.at(sample[k], f), class_index(y_[sample[k]])};
      std::sort(column.begin(), column.end());
      ClassCounts left{}, right{};
      for (const auto& [v, c] : column) ++right[c];
      for (std::size_t k = 0; k + 1 < column.size(); ++k) {
        ++left[column[k].second];
        --right[column[k].second];
        const double lo = column[k].first, hi = column[k + 1].first;
        if (!(lo < hi)) continue;
        double threshold = lo + (hi - lo) / 2.0;
        if (!(threshold < hi)) threshold = lo;
        const double nl = static_cast<double>(k + 1), nr = n - nl;
        const double impurity = (nl / n) * gini(left) + (nr / n) * gini(right);
        if (!found || impurity < best.impurity) {
          best = {static_cast<std::int32_t>(f), threshold, impurity};
          found = true;
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  const std::vector<SentimentLabel>& y_;
  TreeParams params_;
  CounterRng& rng_;
  std::size_t k_;
  DecisionTree tree_;
};

}  // namespace detail

/// Greedy CART on the rows listed in `sample` (duplicates allowed); an empty
/// `sample` means every row.
inline DecisionTree fit_decision_tree(const FeatureMatrix& x, const std::vector<SentimentLabel>& y,
                                      const TreeParams& params, CounterRng& rng,
                                      std::vector<std::size_t> sample = {}) {
  if (x.rows() == 0 || x.rows() != y.size())
    throw Error("forest", "training data must be nonempty with one label per row");
  if (sample.empty()) {
    sample.resize(x.rows());
    for (std::size_t i = 0; i < sample.size(); ++i) sample[i] = i;
  }
  return detail::TreeBuilder(x, y, params, rng).build(std::move(sample));
}

inline const TreeNode& tree_leaf(const DecisionTree& tree, std::span<const double> x) {
  if (x.size() != tree.dim)
    throw Error("forest", "probe has dimension " + std::to_string(x.size()) + ", tree expects " +
                              std::to_string(tree.dim));
  const TreeNode* node = &tree.nodes.at(0);
  while (!node->is_leaf())
    node = &tree.nodes[static_cast<std::size_t>(
        x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right)];
  return *node;
}

inline SentimentLabel tree_predict(const DecisionTree& tree, std::span<const double> x) {
  return argmax_label(tree_leaf(tree, x).counts);
}

struct ForestParams {
  std::size_t num_trees = 25;
  TreeParams tree;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct RandomForestModel {
  std::vector<DecisionTree> trees;
  ForestParams params;
  std::size_t features_per_split = 0;
};

inline constexpr std::uint64_t kBootstrapStream = 0x626f6f74ULL;
inline constexpr std::uint64_t kFeatureStream = 0x66656174ULL;

/// N draws with replacement for tree `tree_index`.
inline std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t seed, std::size_t tree_index) {
  CounterRng rng(seed, {kBootstrapStream, tree_index});
  std::vector<std::size_t> sample(n);
  for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));
  return sample;
}

inline RandomForestModel fit_forest(const FeatureMatrix& x, const std::vector<SentimentLabel>& y,
                                    const ForestParams& params) {
  if (params.num_trees < 1) throw Error("forest", "a forest needs at least one tree");
  if (x.rows() == 0 || x.rows() != y.size())
    throw Error("forest", "training data must be nonempty with one label per row");
  RandomForestModel model;
  model.params = params;
  model.features_per_split = resolve_features_per_split(params.tree.features_per_split, x.dim());
  TreeParams tp = params.tree;
  tp.features_per_split = model.features_per_split;
  model.trees.reserve(params.num_trees);
  for (std::size_t t = 0; t < params.num_trees; ++t) {
    CounterRng rng(params.seed, {kFeatureStream, t});
    std::vector<std::size_t> sample;
    if (params.bootstrap) sample = bootstrap_sample(x.rows(), params.seed, t);
    model.trees.push_back(fit_decision_tree(x, y, tp, rng, std::move(sample)));
  }
  return model;
}

inline std::array<std::size_t, kNumClasses> forest_votes(const RandomForestModel& model, std::span<const double> x) {
  std::array<std::size_t, kNumClasses> votes{};
  for (const auto& tree : model.trees) ++votes[class_index(tree_predict(tree, x))];
  return votes;
}

/// Majority vote, ties to the smallest label.
inline SentimentLabel forest_predict(const RandomForestModel& model, std::span<const double> x) {
  return argmax_label(forest_votes(model, x));
}

// ---------------------------------------------------------------------------
// Serialization: each tree is a set of flat node arrays.

inline constexpr int kForestFormatVersion = 1;

inline nlohmann::json to_json(const RandomForestModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(),
                   counts = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      counts.push_back(n.counts);
    }
    trees.push_back({{"dim", t.dim}, {"feature", feature}, {"threshold", threshold},
                     {"left", left}, {"right", right}, {"counts", counts}});
  }
  const auto& p = m.params;
  return {{"format", "sentibench.forest"},
          {"version", kForestFormatVersion},
          {"config",
           {{"num_trees", p.num_trees},
            {"max_depth", p.tree.max_depth ? nlohmann::json(*p.tree.max_depth) : nlohmann::json()},
            {"min_samples_split", p.tree.min_samples_split},
            {"features_per_split", m.features_per_split},
            {"bootstrap", p.bootstrap},
            {"seed", p.seed}}},
          {"trees", trees}};
}

inline RandomForestModel forest_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "sentibench.forest") throw Error("forest", "not a forest artifact");
  if (j.value("version", 0) != kForestFormatVersion)
    throw Error("forest", "unsupported artifact version " + j.value("version", nlohmann::json()).dump());
  RandomForestModel m;
  const auto& c = j.at("config");
  m.params.num_trees = c.at("num_trees").get<std::size_t>();
  if (!c.at("max_depth").is_null()) m.params.tree.max_depth = c.at("max_depth").get<std::size_t>();
  else m.params.tree.max_depth.reset();
  m.params.tree.min_samples_split = c.at("min_samples_split").get<std::size_t>();
  m.features_per_split = c.at("features_per_split").get<std::size_t>();
  m.params.tree.features_per_split = m.features_per_split;
  m.params.bootstrap = c.at("bootstrap").get<bool>();
  m.params.seed = c.at("seed").get<std::uint64_t>();
  for (const auto& tj : j.at("trees")) {
    DecisionTree t;
    t.dim = tj.at("dim").get<std::size_t>();
    t.params = m.params.tree;
    const auto& feature = tj.at("feature");
    const std::size_t n = feature.size();
    for (std::size_t i = 0; i < n; ++i) {
      TreeNode node;
      node.feature = feature[i].get<std::int32_t>();
      node.threshold = tj.at("threshold")[i].get<double>();
      node.left = tj.at("left")[i].get<std::int32_t>();
      node.right = tj.at("right")[i].get<std::int32_t>();
      node.counts = tj.at("counts")[i].get<ClassCounts>();
      if (!node.is_leaf() && (node.left <= 0 || node.right <= 0 || static_cast<std::size_t>(node.left) >= n ||
                              static_cast<std::size_t>(node.right) >= n))
        throw Error("forest", "corrupt tree: child index out of range");
      t.nodes.push_back(node);
    }
    if (t.nodes.empty()) throw Error("forest", "corrupt tree: no nodes");
    m.trees.push_back(std::move(t));
  }
  if (m.trees.size() != m.params.num_trees) throw Error("forest", "tree count does not match config");
  return m;
}

}  // namespace sentibench
