// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sentibench/features.hpp"

using namespace sentibench;

namespace {

TermList random_doc(std::mt19937_64& gen, std::size_t max_len, int alphabet) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> letter(0, alphabet - 1);
  TermList doc;
  const auto n = len(gen);
  for (std::size_t k = 0; k < n; ++k) doc.push_back(std::string(1, static_cast<char>('a' + letter(gen))));
  return doc;
}

double row_norm(std::span<const SparseEntry> row) {
  double sq = 0.0;
  for (const auto& e : row) sq += e.value * e.value;
  return std::sqrt(sq);
}

}  // namespace

TEST(Ngrams, WorkedExamples) {
  EXPECT_EQ(extract_ngrams({"a", "b", "c"}, {2, 2}), (TermList{"a b", "b c"}));
  EXPECT_EQ(extract_ngrams({"a", "b"}, {1, 1}), (TermList{"a", "b"}));
  EXPECT_TRUE(extract_ngrams({"a"}, {2, 3}).empty());
  EXPECT_EQ(extract_ngrams({"a", "b", "c"}, {1, 2}), (TermList{"a", "b", "c", "a b", "b c"}));
  EXPECT_THROW(extract_ngrams({"a"}, {0, 1}), Error);
  EXPECT_THROW(extract_ngrams({"a"}, {2, 1}), Error);
}

TEST(Ngrams, LengthFormula) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 500; ++trial) {
    const auto doc = random_doc(gen, 12, 5);
    const std::size_t lo = 1 + gen() % 3, hi = lo + gen() % 3;
    std::size_t expected = 0;
    for (std::size_t n = lo; n <= hi && n <= doc.size(); ++n) expected += doc.size() - n + 1;
    ASSERT_EQ(extract_ngrams(doc, {lo, hi}).size(), expected);
  }
}

TEST(Vocabulary, OrderingByDfThenLexicographic) {
  const auto v = build_vocabulary({{"a", "b"}, {"b", "c"}}, 1);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(*v.index_of("b"), 0u);
  EXPECT_EQ(*v.index_of("a"), 1u);
  EXPECT_EQ(*v.index_of("c"), 2u);
  EXPECT_EQ(v.document_frequency(0), 2u);
  const auto v2 = build_vocabulary({{"a", "b"}, {"b", "c"}}, 2);
  ASSERT_EQ(v2.size(), 1u);
  EXPECT_EQ(*v2.index_of("b"), 0u);
  EXPECT_THROW(build_vocabulary({}, 1), Error);
  EXPECT_THROW(build_vocabulary({{"a"}, {"b"}}, 2), Error);
  EXPECT_THROW(build_vocabulary({{"a"}}, 0), Error);
}

TEST(Vocabulary, DfCountsDocumentsNotOccurrences) {
  const auto v = build_vocabulary({{"x", "x", "x"}, {"y"}, {"y"}}, 1);
  EXPECT_EQ(v.term(0), "y");
  EXPECT_EQ(v.document_frequency(1), 1u);
}

TEST(Vocabulary, RoundTripAndFingerprint) {
  std::mt19937_64 gen(2);
  std::vector<TermList> docs;
  for (int i = 0; i < 30; ++i) docs.push_back(random_doc(gen, 8, 12));
  const auto v = build_vocabulary(docs, 1);
  for (std::size_t i = 0; i < v.size(); ++i) ASSERT_EQ(*v.index_of(v.term(i)), i);
  for (std::size_t i = 1; i < v.size(); ++i) {
    const auto a = v.document_frequency(i - 1), b = v.document_frequency(i);
    ASSERT_TRUE(a > b || (a == b && v.term(i - 1) < v.term(i)));
  }
  EXPECT_EQ(v.fingerprint(), build_vocabulary(docs, 1).fingerprint());
  EXPECT_NE(v.fingerprint(), build_vocabulary({{"q"}}, 1).fingerprint());
}

TEST(CountVectorize, WorkedExamples) {
  const Vocabulary v({"a", "b", "c"}, {1, 1, 1});
  EXPECT_EQ(count_vectorize({"b", "b", "c"}, v), (SparseRow{{1, 2.0}, {2, 1.0}}));
  EXPECT_TRUE(count_vectorize({}, v).empty());
  EXPECT_TRUE(count_vectorize({"z"}, v).empty());
}

TEST(CountVectorize, RowSumEqualsInVocabularyTokens) {
  std::mt19937_64 gen(3);
  const auto v = build_vocabulary({{"a", "b", "c", "d"}}, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto doc = random_doc(gen, 15, 8);
    double sum = 0.0;
    for (const auto& e : count_vectorize(doc, v)) sum += e.value;
    const auto in_vocab = std::count_if(doc.begin(), doc.end(), [&](const auto& t) { return v.index_of(t).has_value(); });
    ASSERT_EQ(sum, static_cast<double>(in_vocab));
  }
}

TEST(DocTermMatrix, RejectsBadEntriesAndDropsZeros) {
  DocTermMatrix m(3);
  m.append_row({{0, 1.0}, {2, 0.0}});
  EXPECT_EQ(m.nonzeros(), 1u);
  EXPECT_THROW(m.append_row({{3, 1.0}}), Error);
  EXPECT_THROW(m.append_row({{1, -1.0}}), Error);
  const auto dense = m.to_dense();
  EXPECT_EQ(dense, (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(DocTermMatrix, RefusesHugeDenseMaterialisation) {
  DocTermMatrix m(200000000);
  m.append_row({});
  EXPECT_THROW(m.to_dense(), Error);
}

TEST(TfIdf, HandComputedExample) {
  const auto [model, x] = tfidf_fit_transform({{"a"}, {"a", "b"}}, {1, 1}, 1);
  EXPECT_DOUBLE_EQ(model.idf[*model.vocabulary.index_of("a")], 1.0);
  EXPECT_NEAR(model.idf[*model.vocabulary.index_of("b")], std::log(1.5) + 1.0, 1e-15);
  EXPECT_NEAR(model.idf[*model.vocabulary.index_of("b")], 1.4055, 5e-5);
  const auto row = x.row(1);
  ASSERT_EQ(row.size(), 2u);
  double va = 0.0, vb = 0.0;
  for (const auto& e : row) (e.index == *model.vocabulary.index_of("a") ? va : vb) = e.value;
  // Independent evaluation: 1/sqrt(1 + 1.405465^2) and 1.405465/sqrt(1 + 1.405465^2).
  EXPECT_NEAR(va, 0.5797386715376657, 1e-12);
  EXPECT_NEAR(vb, 0.8148024746671689, 1e-12);
  EXPECT_NEAR(va, 0.5797, 5e-5);
  EXPECT_NEAR(vb, 0.8148, 5e-5);
}

TEST(TfIdf, SingleDocumentAndZeroRows) {
  const auto [model, x] = tfidf_fit_transform({{"a"}}, {1, 1}, 1);
  EXPECT_DOUBLE_EQ(model.idf[0], 1.0);
  ASSERT_EQ(x.row(0).size(), 1u);
  EXPECT_DOUBLE_EQ(x.row(0)[0].value, 1.0);
  EXPECT_TRUE(model.transform({"unseen", "words"}).empty());
  EXPECT_THROW(tfidf_fit({}, {1, 1}, 1), Error);
}

TEST(TfIdf, IdfPositiveAndRowsUnitNorm) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TermList> docs;
    for (int i = 0; i < 25; ++i) docs.push_back(random_doc(gen, 10, 10));
    docs.push_back({"a", "a"});
    const auto [model, x] = tfidf_fit_transform(docs, {1, 2}, 1 + gen() % 2);
    for (double w : model.idf) ASSERT_GT(w, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto row = x.row(r);
      if (!row.empty()) ASSERT_NEAR(row_norm(row), 1.0, 1e-9);
    }
  }
}

TEST(TfIdf, JsonRoundTripAndHashCheck) {
  const auto model = tfidf_fit({{"good", "day"}, {"bad", "day"}, {"good"}}, {1, 2}, 1);
  const auto j = to_json(model);
  const auto back = tfidf_from_json(j);
  EXPECT_EQ(back.vocabulary.terms(), model.vocabulary.terms());
  EXPECT_EQ(back.idf, model.idf);
  EXPECT_EQ(back.transform({"good", "day"}), model.transform({"good", "day"}));
  auto tampered = j;
  tampered["terms"][0] = "evil";
  EXPECT_THROW(tfidf_from_json(tampered), Error);
  auto skew = j;
  skew["version"] = 99;
  EXPECT_THROW(tfidf_from_json(skew), Error);
}
