// SPDX-License-Identifier: Apache-2.0
//
// Vocabulary, sparse document-term matrices, n-grams and TF-IDF weighting.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sentibench/error.hpp"
#include "sentibench/hash.hpp"

namespace sentibench {

using TermList = std::vector<std::string>;

struct NgramRange {
  std::size_t lo = 1;
  std::size_t hi = 2;
  friend bool operator==(const NgramRange&, const NgramRange&) = default;
};

/// Contiguous n-token windows joined by a single space, n ascending then
/// left to right.
inline TermList extract_ngrams(const TermList& tokens, NgramRange range) {
  if (range.lo < 1 || range.hi < range.lo) throw Error("features", "invalid n-gram range");
  TermList out;
  const std::size_t len = tokens.size();
  for (std::size_t n = range.lo; n <= range.hi && n <= len; ++n) {
    for (std::size_t start = 0; start + n <= len; ++start) {
      std::string gram = tokens[start];
      for (std::size_t k = 1; k < n; ++k) {
        gram += ' ';
        gram += tokens[start + k];
      }
      out.push_back(std::move(gram));
    }
  }
  return out;
}

/// Bijective term <-> dense index map, ordered by descending document
/// frequency with lexicographic tie-break.
class Vocabulary {
 public:
  Vocabulary() = default;

  Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> document_frequency)
      : terms_(std::move(terms)), df_(std::move(document_frequency)) {
    if (terms_.size() != df_.size()) throw Error("features", "vocabulary term/df size mismatch");
    index_.reserve(terms_.size());
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (!index_.emplace(terms_[i], static_cast<std::uint32_t>(i)).second)
        throw Error("features", "duplicate vocabulary term '" + terms_[i] + "'");
    }
  }

  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  const std::string& term(std::size_t i) const { return terms_.at(i); }
  std::size_t document_frequency(std::size_t i) const { return df_.at(i); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const std::vector<std::size_t>& document_frequencies() const noexcept { return df_; }

  std::optional<std::uint32_t> index_of(const std::string& term) const {
    auto it = index_.find(term);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Content hash over the ordered term list; used for artifact compatibility.
  std::string fingerprint() const {
    Sha256 h;
    for (const auto& t : terms_) h.update(t).update(std::string_view("\n", 1));
    return h.hex();
  }

 private:
  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

inline Vocabulary build_vocabulary(const std::vector<TermList>& docs, std::size_t min_df) {
  if (min_df < 1) throw Error("features", "min_df must be >= 1");
  if (docs.empty()) throw Error("features", "cannot build a vocabulary from an empty corpus");
  std::unordered_map<std::string, std::size_t> df;
  std::unordered_set<std::string_view> seen;
  for (const auto& doc : docs) {
    seen.clear();
    for (const auto& t : doc)
      if (seen.insert(t).second) ++df[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [term, count] : df)
    if (count >= min_df) kept.emplace_back(term, count);
  if (kept.empty())
    throw Error("features", "no term reaches min_df=" + std::to_string(min_df));
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> terms;
  std::vector<std::size_t> freqs;
  terms.reserve(kept.size());
  freqs.reserve(kept.size());
  for (auto& [term, count] : kept) {
    terms.push_back(std::move(term));
    freqs.push_back(count);
  }
  return Vocabulary(std::move(terms), std::move(freqs));
}

struct SparseEntry {
  std::uint32_t index;
  double value;
  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Sorted by index, no explicit zeros.
using SparseRow = std::vector<SparseEntry>;

/// Compressed sparse row document-term matrix.
class DocTermMatrix {
 public:
  /// Refuse dense materialisation beyond this many cells.
  static constexpr double kMaxDenseCells = 1e8;

  explicit DocTermMatrix(std::size_t cols = 0) : cols_(cols) { row_ptr_.push_back(0); }

  void append_row(const SparseRow& row) {
    for (const auto& e : row) {
      if (e.value == 0.0) continue;
      if (e.index >= cols_) throw Error("features", "column index out of range");
      if (e.value < 0.0) throw Error("features", "document-term values must be nonnegative");
      entries_.push_back(e);
    }
    row_ptr_.push_back(entries_.size());
  }

  std::size_t rows() const noexcept { return row_ptr_.size() - 1; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return entries_.size(); }

  std::span<const SparseEntry> row(std::size_t r) const {
    return {entries_.data() + row_ptr_.at(r), row_ptr_.at(r + 1) - row_ptr_.at(r)};
  }

  std::vector<double> to_dense() const {
    if (static_cast<double>(rows()) * static_cast<double>(cols_) > kMaxDenseCells)
      throw Error("features", "dense document-term matrix would exceed 1e8 cells");
    std::vector<double> dense(rows() * cols_, 0.0);
    for (std::size_t r = 0; r < rows(); ++r)
      for (const auto& e : row(r)) dense[r * cols_ + e.index] = e.value;
    return dense;
  }

 private:
  std::size_t cols_;
  std::vector<std::size_t> row_ptr_;
  std::vector<SparseEntry> entries_;
};

/// Term multiplicities; out-of-vocabulary terms are ignored.
inline SparseRow count_vectorize(const TermList& doc, const Vocabulary& vocab) {
  std::map<std::uint32_t, double> counts;
  for (const auto& t : doc)
    if (auto idx = vocab.index_of(t)) counts[*idx] += 1.0;
  SparseRow row;
  row.reserve(counts.size());
  for (auto [idx, c] : counts) row.push_back({idx, c});
  return row;
}

inline void l2_normalize(SparseRow& row) {
  double sq = 0.0;
  for (const auto& e : row) sq += e.value * e.value;
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& e : row) e.value *= inv;
}

/// Smooth-idf TF-IDF vectorizer over n-grams of the input tokens.
struct TfIdfModel {
  Vocabulary vocabulary;
  std::vector<double> idf;
  NgramRange ngram_range;
  std::size_t min_df = 2;
  std::size_t num_documents = 0;

  /// Raw n-gram counts against the fitted vocabulary.
  SparseRow counts(const TermList& tokens) const {
    return count_vectorize(extract_ngrams(tokens, ngram_range), vocabulary);
  }

  /// count * idf, then L2-normalised (zero rows stay zero).
  SparseRow transform(const TermList& tokens) const {
    SparseRow row = counts(tokens);
    for (auto& e : row) e.value *= idf[e.index];
    l2_normalize(row);
    return row;
  }

  DocTermMatrix transform_all(const std::vector<TermList>& docs, bool use_counts = false) const {
    DocTermMatrix m(vocabulary.size());
    for (const auto& d : docs) m.append_row(use_counts ? counts(d) : transform(d));
    return m;
  }
};

inline double smooth_idf(std::size_t num_documents, std::size_t df) {
  return std::log((1.0 + static_cast<double>(num_documents)) / (1.0 + static_cast<double>(df))) + 1.0;
}

inline TfIdfModel tfidf_fit(const std::vector<TermList>& docs, NgramRange ngram_range, std::size_t min_df) {
  if (docs.empty()) throw Error("features", "cannot fit TF-IDF on an empty corpus");
  std::vector<TermList> grams;
  grams.reserve(docs.size());
  for (const auto& d : docs) grams.push_back(extract_ngrams(d, ngram_range));
  TfIdfModel model;
  model.vocabulary = build_vocabulary(grams, min_df);
  model.ngram_range = ngram_range;
  model.min_df = min_df;
  model.num_documents = docs.size();
  model.idf.reserve(model.vocabulary.size());
  for (std::size_t i = 0; i < model.vocabulary.size(); ++i)
    model.idf.push_back(smooth_idf(docs.size(), model.vocabulary.document_frequency(i)));
  return model;
}

inline std::pair<TfIdfModel, DocTermMatrix> tfidf_fit_transform(const std::vector<TermList>& docs,
                                                                 NgramRange ngram_range, std::size_t min_df) {
  TfIdfModel model = tfidf_fit(docs, ngram_range, min_df);
  DocTermMatrix matrix = model.transform_all(docs);
  return {std::move(model), std::move(matrix)};
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int kTfIdfFormatVersion = 1;

inline nlohmann::json to_json(const TfIdfModel& m) {
  return {{"format", "sentibench.tfidf"},
          {"version", kTfIdfFormatVersion},
          {"ngram_range", {m.ngram_range.lo, m.ngram_range.hi}},
          {"min_df", m.min_df},
          {"num_documents", m.num_documents},
          {"terms", m.vocabulary.terms()},
          {"document_frequency", m.vocabulary.document_frequencies()},
          {"idf", m.idf},
          {"vocabulary_hash", m.vocabulary.fingerprint()}};
}

inline TfIdfModel tfidf_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "sentibench.tfidf")
    throw Error("features", "not a TF-IDF artifact");
  if (j.value("version", 0) != kTfIdfFormatVersion)
    throw Error("features", "unsupported TF-IDF artifact version " + j.value("version", nlohmann::json()).dump());
  TfIdfModel m;
  m.ngram_range = {j.at("ngram_range").at(0).get<std::size_t>(), j.at("ngram_range").at(1).get<std::size_t>()};
  m.min_df = j.at("min_df").get<std::size_t>();
  m.num_documents = j.at("num_documents").get<std::size_t>();
  m.vocabulary = Vocabulary(j.at("terms").get<std::vector<std::string>>(),
                            j.at("document_frequency").get<std::vector<std::size_t>>());
  m.idf = j.at("idf").get<std::vector<double>>();
  if (m.idf.size() != m.vocabulary.size()) throw Error("features", "idf length does not match vocabulary");
  if (j.at("vocabulary_hash").get<std::string>() != m.vocabulary.fingerprint())
    throw Error("features", "vocabulary hash mismatch in TF-IDF artifact");
  return m;
}

}  // namespace sentibench
