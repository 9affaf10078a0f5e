// SPDX-License-Identifier: Apache-2.0
//
// Generator for labelled corpora with a planted lexicon signal and a
// word-order dependent contrast pattern. Used to sanity-check that the
// benchmark harness ranks pipelines sensibly when the ground truth is known.
//
// Every document is built from lexicon sentiment words, intensity modifiers
// and filler words absent from the lexicon. Two document shapes exist:
//   plain     the label is what the lexicon scorer says about the document
//             (mean polarity above +band, below -band, or neutral between);
//   contrast  "<clause A> however <clause B>" where clause A leans one way
//             and clause B the other; the label follows clause B, so only a
//             model that reads word order can get it right.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "sentibench/corpus.hpp"
#include "sentibench/error.hpp"
#include "sentibench/lexicon.hpp"
#include "sentibench/rng.hpp"

namespace sentibench {

struct SyntheticCorpusConfig {
  std::size_t num_documents = 6000;
  std::uint64_t seed = 0;
  double contrast_fraction = 0.3;
  double neutral_band = 0.1;
  std::size_t words_per_pool = 40;  // per polarity pool
  std::size_t min_fillers = 2;
  std::size_t max_fillers = 6;
  double modifier_probability = 0.2;
  std::string contrast_marker = "however";
};

namespace detail {

inline const std::vector<std::string>& filler_candidates() {
  static const std::vector<std::string> words = {
      "phone",   "movie",  "service", "weather", "update",  "team",    "city",    "train",   "coffee",
      "airport", "store",  "laptop",  "driver",  "ticket",  "market",  "season",  "episode", "battery",
      "screen",  "menu",   "account", "order",   "package", "delivery", "station", "meeting", "lecture",
      "project", "garden", "kitchen", "office",  "street",  "bridge",  "concert", "album",   "camera",
      "network", "server", "update",  "version", "release", "trailer", "review",  "thread",  "comment",
      "channel", "stream", "podcast", "article", "policy",  "budget",  "vote",    "election", "match",
      "league",  "player", "coach",   "stadium", "flight",  "hotel",   "room",    "booking", "refund",
      "support", "agent",  "email",   "message", "reply",   "weekend", "morning", "evening", "tonight",
      "today",   "yesterday", "monday", "friday", "lunch",  "dinner",  "recipe",  "pizza",   "burger",
      "sequel",  "chapter", "novel",  "author",  "studio",  "console", "keyboard", "mouse",  "charger"};
  return words;
}

inline std::vector<std::string> sample_words(std::vector<std::string> pool, std::size_t k, CounterRng& rng) {
  std::sort(pool.begin(), pool.end());
  rng.shuffle(pool);
  if (pool.size() > k) pool.resize(k);
  return pool;
}

}  // namespace detail

/// Produces `num_documents` labelled documents. The lexicon and stopword set
/// decide which words carry signal, so the corpus stays consistent with the
/// preprocessing the pipelines apply.
inline std::vector<LabeledDocument> generate_synthetic_corpus(const SyntheticCorpusConfig& cfg, const Lexicon& lexicon,
                                                              const std::unordered_set<std::string>& stopwords,
                                                              const std::vector<std::string>& lexicon_words) {
  CounterRng rng(cfg.seed, {0x73796e7468ULL});
  auto usable = [&](const std::string& w) {
    return !stopwords.contains(w) && std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; }) &&
           w.size() > 2;
  };

  std::vector<std::string> strong_pos, strong_neg, weak_pos, weak_neg, modifiers;
  for (const auto& w : lexicon_words) {
    const LexiconEntry* e = lexicon.find(w);
    if (e == nullptr || !usable(w) || w == cfg.contrast_marker) continue;
    if (e->is_modifier) {
      if (e->intensity > 1.0) modifiers.push_back(w);
      continue;
    }
    if (e->polarity >= 0.5) strong_pos.push_back(w);
    else if (e->polarity <= -0.5) strong_neg.push_back(w);
    else if (e->polarity >= 0.15 && e->polarity < 0.4) weak_pos.push_back(w);
    else if (e->polarity <= -0.15 && e->polarity > -0.4) weak_neg.push_back(w);
  }
  std::sort(modifiers.begin(), modifiers.end());
  modifiers.erase(std::unique(modifiers.begin(), modifiers.end()), modifiers.end());
  strong_pos = detail::sample_words(strong_pos, cfg.words_per_pool, rng);
  strong_neg = detail::sample_words(strong_neg, cfg.words_per_pool, rng);
  weak_pos = detail::sample_words(weak_pos, cfg.words_per_pool / 2, rng);
  weak_neg = detail::sample_words(weak_neg, cfg.words_per_pool / 2, rng);
  std::vector<std::string> fillers;
  for (const auto& w : detail::filler_candidates())
    if (lexicon.find(w) == nullptr && usable(w) && std::find(fillers.begin(), fillers.end(), w) == fillers.end())
      fillers.push_back(w);
  if (strong_pos.empty() || strong_neg.empty() || weak_pos.empty() || weak_neg.empty() || fillers.empty())
    throw Error("synthetic", "lexicon lacks the word pools needed for a planted corpus");
  if (lexicon.find(cfg.contrast_marker) != nullptr || stopwords.contains(cfg.contrast_marker))
    throw Error("synthetic", "contrast marker must be neither a lexicon word nor a stopword");

  auto pick = [&](const std::vector<std::string>& pool) -> const std::string& {
    return pool[static_cast<std::size_t>(rng.below(pool.size()))];
  };
  auto add_fillers = [&](std::vector<std::string>& out, std::size_t lo, std::size_t hi) {
    const std::size_t n = lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
    for (std::size_t k = 0; k < n; ++k) out.push_back(pick(fillers));
  };
  // Sentiment words of one sign, optionally preceded by a modifier, with
  // fillers scattered between them.
  auto clause = [&](int sign, std::size_t strong, std::size_t weak) {
    std::vector<std::string> words;
    for (std::size_t k = 0; k < strong; ++k) words.push_back(pick(sign > 0 ? strong_pos : strong_neg));
    for (std::size_t k = 0; k < weak; ++k) words.push_back(pick(sign > 0 ? weak_pos : weak_neg));
    rng.shuffle(words);
    std::vector<std::string> out;
    for (const auto& w : words) {
      if (rng.below(2) == 0) out.push_back(pick(fillers));
      if (!modifiers.empty() && rng.uniform() < cfg.modifier_probability) out.push_back(pick(modifiers));
      out.push_back(w);
    }
    return out;
  };
  auto label_of = [&](double polarity) {
    if (polarity > cfg.neutral_band) return SentimentLabel::Positive;
    if (polarity < -cfg.neutral_band) return SentimentLabel::Negative;
    return SentimentLabel::Neutral;
  };
  auto join = [](const std::vector<std::string>& words) {
    std::string s;
    for (const auto& w : words) {
      if (!s.empty()) s += ' ';
      s += w;
    }
    return s;
  };

  std::vector<LabeledDocument> docs;
  docs.reserve(cfg.num_documents);
  for (std::size_t d = 0; d < cfg.num_documents; ++d) {
    std::vector<std::string> words;
    SentimentLabel label;
    if (rng.uniform() < cfg.contrast_fraction) {
      const int sign = rng.below(2) == 0 ? 1 : -1;
      add_fillers(words, 0, 2);
      for (auto& w : clause(sign, 2, rng.below(2))) words.push_back(std::move(w));
      words.push_back(cfg.contrast_marker);
      for (auto& w : clause(-sign, 1, 0)) words.push_back(std::move(w));
      add_fillers(words, 0, 2);
      label = sign > 0 ? SentimentLabel::Negative : SentimentLabel::Positive;
    } else {
      const auto shape = rng.below(6);
      add_fillers(words, cfg.min_fillers, cfg.max_fillers);
      std::vector<std::string> signal;
      if (shape == 0) {
        // fillers only
      } else if (shape <= 2) {
        const int sign = shape == 1 ? 1 : -1;
        signal = clause(sign, rng.below(3), 1 + rng.below(2));
        auto other = clause(-sign, rng.below(2), rng.below(2));
        signal.insert(signal.end(), other.begin(), other.end());
      } else {
        const int sign = shape <= 4 ? 1 : -1;
        signal = clause(sign, 1 + rng.below(2), rng.below(2));
        if (rng.below(2) == 0) {
          auto other = clause(-sign, rng.below(2), 1);
          signal.insert(signal.end(), other.begin(), other.end());
        }
      }
      // Scatter the signal among the fillers, keeping each modifier glued to
      // the word it modifies.
      for (std::size_t k = 0; k < signal.size(); ++k) {
        std::vector<std::string> unit{signal[k]};
        while (k + 1 < signal.size() && lexicon.find(unit.back()) && lexicon.find(unit.back())->is_modifier)
          unit.push_back(signal[++k]);
        const auto at = static_cast<std::ptrdiff_t>(rng.below(words.size() + 1));
        words.insert(words.begin() + at, unit.begin(), unit.end());
      }
      label = label_of(score_text(words, lexicon).polarity);
    }
    docs.push_back({join(words), label, "synthetic"});
  }
  return docs;
}

/// Distinct lexicon words from a lexicon file, in file order.
inline std::vector<std::string> lexicon_words_in_file(const std::string& path) {
  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  for (const auto& line : read_lines(path, "synthetic")) {
    if (line.empty() || line[0] == '#') continue;
    const auto w = line.substr(0, line.find('\t'));
    if (seen.insert(w).second) words.push_back(w);
  }
  return words;
}

}  // namespace sentibench
