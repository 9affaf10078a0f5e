// SPDX-License-Identifier: Apache-2.0
//
// Word-level polarity/subjectivity lexicon with intensity modifiers.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentibench/corpus.hpp"
#include "sentibench/error.hpp"
#include "sentibench/hash.hpp"

namespace sentibench {

struct LexiconEntry {
  std::string word;
  double polarity = 0.0;      // [-1, 1]
  double subjectivity = 0.0;  // [0, 1]
  double intensity = 1.0;     // > 0, applied to the following word
  bool is_modifier = false;   // modifiers carry no score of their own
};

struct SentimentScores {
  double polarity = 0.0;
  double subjectivity = 0.0;
  std::size_t matched_terms = 0;
};

class Lexicon {
 public:
  Lexicon() = default;

  /// Adds an entry; repeated words are merged by averaging polarity and
  /// subjectivity over all occurrences and keeping the largest intensity.
  void add(const LexiconEntry& e) {
    validate(e);
    auto [it, inserted] = accum_.try_emplace(e.word);
    auto& a = it->second;
    a.polarity_sum += e.polarity;
    a.subjectivity_sum += e.subjectivity;
    a.count += 1;
    a.intensity = inserted ? e.intensity : std::max(a.intensity, e.intensity);
    a.modifier = a.modifier || e.is_modifier;
    entries_[e.word] = LexiconEntry{e.word, a.polarity_sum / a.count, a.subjectivity_sum / a.count,
                                    a.intensity, a.modifier};
  }

  const LexiconEntry* find(const std::string& word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const noexcept { return entries_.size(); }

  /// Hash over the merged entries in word order.
  std::string fingerprint() const {
    std::map<std::string, const LexiconEntry*> sorted;
    for (const auto& [w, e] : entries_) sorted.emplace(w, &e);
    Sha256 h;
    char buf[128];
    for (const auto& [w, e] : sorted) {
      std::snprintf(buf, sizeof buf, "\t%.17g\t%.17g\t%.17g\t%d\n", e->polarity, e->subjectivity,
                    e->intensity, e->is_modifier ? 1 : 0);
      h.update(w).update(buf);
    }
    return h.hex();
  }

  /// Describes why an entry is invalid, or nullopt when it is fine.
  static std::optional<std::string> problem(const LexiconEntry& e) {
    if (e.word.empty()) return "empty word";
    if (!(e.polarity >= -1.0 && e.polarity <= 1.0)) return "polarity of '" + e.word + "' outside [-1, 1]";
    if (!(e.subjectivity >= 0.0 && e.subjectivity <= 1.0))
      return "subjectivity of '" + e.word + "' outside [0, 1]";
    if (!(e.intensity > 0.0 && std::isfinite(e.intensity))) return "intensity of '" + e.word + "' must be positive";
    return std::nullopt;
  }

  static void validate(const LexiconEntry& e) {
    if (auto p = problem(e)) throw Error("lexicon", *p);
  }

 private:
  struct Accumulator {
    double polarity_sum = 0.0;
    double subjectivity_sum = 0.0;
    double count = 0.0;
    double intensity = 1.0;
    bool modifier = false;
  };
  std::unordered_map<std::string, Accumulator> accum_;
  std::unordered_map<std::string, LexiconEntry> entries_;
};

namespace detail {

inline std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads `word<TAB>polarity<TAB>subjectivity<TAB>intensity<TAB>modifier_flag`
/// lines; '#' lines are comments.
inline Lexicon load_lexicon(const std::string& path) {
  Lexicon lex;
  const auto lines = read_lines(path, "lexicon");
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto& line = lines[n];
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(n + 1);
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 5) throw Error("lexicon", where + ": expected 5 tab-separated columns");
    auto pol = detail::parse_double(cols[1]);
    auto subj = detail::parse_double(cols[2]);
    auto inten = detail::parse_double(cols[3]);
    if (!pol || !subj || !inten || (cols[4] != "0" && cols[4] != "1"))
      throw Error("lexicon", where + ": malformed numeric field");
    LexiconEntry e{cols[0], *pol, *subj, *inten, cols[4] == "1"};
    std::transform(e.word.begin(), e.word.end(), e.word.begin(), detail::ascii_lower);
    if (auto p = Lexicon::problem(e)) throw Error("lexicon", where + ": " + *p);
    lex.add(e);
  }
  return lex;
}

/// Averages the scores of matched words. A modifier scales the next token's
/// polarity and subjectivity by its intensity (clamped into range); a
/// modifier followed by an unknown word is dropped. Unknown words do not
/// enter the average.
inline SentimentScores score_text(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
  double pol_sum = 0.0, subj_sum = 0.0;
  std::size_t matched = 0;
  double pending = 1.0;
  for (const auto& tok : tokens) {
    const LexiconEntry* e = lexicon.find(tok);
    if (e == nullptr) {
      pending = 1.0;
      continue;
    }
    if (e->is_modifier) {
      pending = e->intensity;
      continue;
    }
    pol_sum += std::clamp(e->polarity * pending, -1.0, 1.0);
    subj_sum += std::clamp(e->subjectivity * pending, 0.0, 1.0);
    ++matched;
    pending = 1.0;
  }
  if (matched == 0) return {};
  const double n = static_cast<double>(matched);
  return {std::clamp(pol_sum / n, -1.0, 1.0), std::clamp(subj_sum / n, 0.0, 1.0), matched};
}

}  // namespace sentibench
