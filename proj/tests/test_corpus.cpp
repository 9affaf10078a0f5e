// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "sentibench/corpus.hpp"
#include "sentibench/hash.hpp"
#include "test_support.hpp"

using namespace sentibench;
using testing_support::data_file;
using testing_support::shipped_preprocess;
using testing_support::random_post;
using testing_support::TempDir;

TEST(CleanText, WorkedExamples) {
  const auto& pc = shipped_preprocess();
  EXPECT_EQ(clean_text("Loved it! https://t.co/x #great @bob", pc), "loved it");
  EXPECT_EQ(clean_text("", pc), "");
  EXPECT_EQ(clean_text("I can't    WAIT!!!", pc), "i cannot wait");
}

TEST(CleanText, RuleDetails) {
  const auto& pc = shipped_preprocess();
  EXPECT_EQ(clean_text("see www.example.com now", pc), "see now");
  EXPECT_EQ(clean_text("link:https://x.y/#tag end", pc), "end");
  EXPECT_EQ(clean_text("hi@bob and#tag", pc), "hi and");
  EXPECT_EQ(clean_text("happy :) sad :( ok", pc), "happy sad ok");
  EXPECT_EQ(clean_text("I don\xE2\x80\x99t know", pc), "i do not know");
  EXPECT_EQ(clean_text("'can't'", pc), "cannot");
  EXPECT_EQ(clean_text("caf\xC3\xA9 ole", pc), "caf ole");
  EXPECT_EQ(clean_text("a\t\n b", pc), "a b");
  EXPECT_EQ(clean_text("x:)y", pc), "x y");  // glued emoticon is not removed; its symbols are
}

TEST(CleanText, LowercaseFlagOff) {
  auto pc = shipped_preprocess();
  pc.lowercase = false;
  EXPECT_EQ(clean_text("Hello WORLD!", pc), "Hello WORLD");
}

TEST(CleanText, IdempotentOnRandomStrings) {
  const auto& pc = shipped_preprocess();
  std::mt19937_64 gen(20240601);
  for (int i = 0; i < 10000; ++i) {
    const auto raw = random_post(gen);
    const auto once = clean_text(raw, pc);
    ASSERT_EQ(clean_text(once, pc), once) << "input: " << raw;
  }
}

TEST(CleanText, PipelineOutputIsHygienic) {
  const auto& pc = shipped_preprocess();
  std::mt19937_64 gen(77);
  for (int i = 0; i < 10000; ++i) {
    const auto raw = random_post(gen);
    for (const auto& tok : remove_stopwords(tokenize(clean_text(raw, pc)), pc)) {
      ASSERT_FALSE(tok.empty());
      ASSERT_EQ(tok.find('#'), std::string::npos) << raw;
      ASSERT_EQ(tok.find('@'), std::string::npos) << raw;
      ASSERT_EQ(tok.find("http"), std::string::npos) << raw;
      ASSERT_TRUE(std::none_of(tok.begin(), tok.end(), [](char c) { return c >= 'A' && c <= 'Z'; })) << raw;
      ASSERT_FALSE(pc.stopwords.contains(tok));
    }
  }
}

TEST(Tokenize, WorkedExamples) {
  EXPECT_EQ(tokenize("cannot wait"), (std::vector<std::string>{"cannot", "wait"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("a  b"), (std::vector<std::string>{"a", "b"}));
}

TEST(RemoveStopwords, WorkedExamples) {
  const auto& pc = shipped_preprocess();
  EXPECT_EQ(remove_stopwords({"this", "movie", "is", "great"}, pc), (std::vector<std::string>{"movie", "great"}));
  EXPECT_TRUE(remove_stopwords({}, pc).empty());
  EXPECT_TRUE(remove_stopwords({"the", "the"}, pc).empty());
}

TEST(ShippedData, StopwordListIsPinned) {
  const auto stop = load_stopwords(data_file("stopwords_en.txt"));
  EXPECT_EQ(stop.size(), 127u);
  for (const char* w : {"i", "me", "this", "is", "the", "not", "very", "but", "don", "should", "now"})
    EXPECT_TRUE(stop.contains(w)) << w;
  EXPECT_EQ(sha256_file(data_file("stopwords_en.txt")),
            "b3f772a000465cb76e23adb03b47073c591c156fad8f7af09c8b8e80d6bd8eac");
}

TEST(ShippedData, ContractionsAndEmoticons) {
  const auto contr = load_contractions(data_file("contractions_en.tsv"));
  EXPECT_EQ(contr.size(), 87u);
  EXPECT_EQ(contr.at("can't"), "cannot");
  EXPECT_EQ(contr.at("won't"), "will not");
  const auto emo = load_emoticons(data_file("emoticons.txt"));
  EXPECT_EQ(emo.size(), 54u);
  EXPECT_TRUE(std::is_sorted(emo.begin(), emo.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); }));
}

TEST(ResourceFiles, RejectEntriesThatBreakIdempotence) {
  TempDir dir("res");
  EXPECT_THROW(load_contractions(dir.write("c1.tsv", "cant\tcannot\n").string()), Error);
  EXPECT_THROW(load_contractions(dir.write("c2.tsv", "can't\tcan't\n").string()), Error);
  EXPECT_THROW(load_contractions(dir.write("c3.tsv", "no tab here\n").string()), Error);
  EXPECT_THROW(load_emoticons(dir.write("e.txt", "XD\n").string()), Error);
  EXPECT_THROW(load_stopwords((dir / "missing.txt").string()), Error);
}

TEST(LoadDataset, CsvInFileOrder) {
  TempDir dir("csv");
  const auto p = dir.write("d.csv", "text,label\n\"great day\",1\nbad day,-1\n");
  const auto docs = load_dataset(p.string(), DatasetFormat::Csv);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].text, "great day");
  EXPECT_EQ(docs[0].label, SentimentLabel::Positive);
  EXPECT_EQ(docs[1].text, "bad day");
  EXPECT_EQ(docs[1].label, SentimentLabel::Negative);
}

TEST(LoadDataset, HeaderOnlyIsEmpty) {
  TempDir dir("csv0");
  EXPECT_TRUE(load_dataset(dir.write("d.csv", "text,label\n").string(), DatasetFormat::Csv).empty());
  EXPECT_TRUE(load_dataset(dir.write("d.jsonl", "").string(), DatasetFormat::Jsonl).empty());
}

TEST(LoadDataset, BadLabelNamesTheLine) {
  TempDir dir("csv2");
  const auto p = dir.write("d.csv", "text,label\nok,1\nnope,2\n");
  try {
    load_dataset(p.string(), DatasetFormat::Csv);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.module(), "corpus");
    EXPECT_NE(std::string(e.what()).find("d.csv:3"), std::string::npos) << e.what();
  }
}

TEST(LoadDataset, CsvQuotingAndSource) {
  TempDir dir("csv3");
  const auto p = dir.write("d.csv", "source,text,label\r\ntwitter,\"a, \"\"quoted\"\"\nline\",0\r\nreddit,plain,+1\r\n");
  const auto docs = load_dataset(p.string(), DatasetFormat::Csv);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].text, "a, \"quoted\"\nline");
  EXPECT_EQ(docs[0].source, "twitter");
  EXPECT_EQ(docs[1].label, SentimentLabel::Positive);
  EXPECT_THROW(load_dataset(dir.write("x.csv", "body,label\nx,1\n").string(), DatasetFormat::Csv), Error);
  EXPECT_THROW(load_dataset(dir.write("y.csv", "text,label\n\"open,1\n").string(), DatasetFormat::Csv), Error);
  EXPECT_THROW(load_dataset(dir.write("z.csv", "text,label\na,1,extra\n").string(), DatasetFormat::Csv), Error);
}

TEST(LoadDataset, Jsonl) {
  TempDir dir("jsonl");
  const auto p = dir.write("d.jsonl", "{\"text\":\"good\",\"label\":1,\"source\":\"reddit\"}\n\n{\"text\":\"meh\",\"label\":\"0\"}\n");
  const auto docs = load_dataset(p.string(), DatasetFormat::Jsonl);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].source, "reddit");
  EXPECT_EQ(docs[1].label, SentimentLabel::Neutral);
  const auto bad = dir.write("b.jsonl", "{\"text\":\"x\",\"label\":1}\n{\"text\":\"y\",\"label\":5}\n");
  try {
    load_dataset(bad.string(), DatasetFormat::Jsonl);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("b.jsonl:2"), std::string::npos);
  }
  EXPECT_THROW(load_dataset((dir / "none.jsonl").string(), DatasetFormat::Jsonl), Error);
}

TEST(LoadDataset, CsvWriterRoundTrips) {
  TempDir dir("rt");
  std::vector<LabeledDocument> docs = {{"plain", SentimentLabel::Positive, "s"},
                                       {"comma, \"quote\"\nnewline", SentimentLabel::Negative, ""},
                                       {"", SentimentLabel::Neutral, "x,y"}};
  const auto p = dir.write("rt.csv", format_csv_dataset(docs));
  const auto back = load_dataset(p.string(), DatasetFormat::Csv);
  ASSERT_EQ(back.size(), docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    EXPECT_EQ(back[i].text, docs[i].text);
    EXPECT_EQ(back[i].label, docs[i].label);
    EXPECT_EQ(back[i].source, docs[i].source);
  }
}

namespace {

std::vector<SentimentLabel> labels_with_counts(std::size_t neg, std::size_t neu, std::size_t pos) {
  std::vector<SentimentLabel> y;
  // Interleave so class membership is not contiguous.
  while (neg + neu + pos > 0) {
    if (neg) --neg, y.push_back(SentimentLabel::Negative);
    if (neu) --neu, y.push_back(SentimentLabel::Neutral);
    if (pos) --pos, y.push_back(SentimentLabel::Positive);
  }
  return y;
}

}  // namespace

TEST(Split, StratifiedCountsMatchLargestRemainder) {
  const auto y = labels_with_counts(40, 30, 30);
  SplitConfig cfg;
  cfg.seed = 7;
  const auto s = split_indices(y, cfg);
  EXPECT_EQ(s.train.size(), 75u);
  EXPECT_EQ(s.test.size(), 25u);
  std::map<SentimentLabel, int> per_class;
  for (auto i : s.test) ++per_class[y[i]];
  EXPECT_EQ(per_class[SentimentLabel::Negative], 10);
  EXPECT_EQ(per_class[SentimentLabel::Neutral], 8);
  EXPECT_EQ(per_class[SentimentLabel::Positive], 7);
}

TEST(Split, DeterministicPartition) {
  const auto y = labels_with_counts(40, 30, 30);
  SplitConfig cfg;
  cfg.seed = 7;
  const auto a = split_indices(y, cfg), b = split_indices(y, cfg);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  cfg.seed = 8;
  EXPECT_NE(split_indices(y, cfg).test, a.test);
}

TEST(Split, TinyCases) {
  SplitConfig cfg;
  cfg.seed = 1;
  const std::vector<SentimentLabel> four = {SentimentLabel::Negative, SentimentLabel::Neutral,
                                            SentimentLabel::Positive, SentimentLabel::Positive};
  const auto s = split_indices(four, cfg);
  EXPECT_EQ(s.train.size(), 3u);
  EXPECT_EQ(s.test.size(), 1u);
  const std::vector<SentimentLabel> missing = {SentimentLabel::Negative, SentimentLabel::Positive,
                                               SentimentLabel::Positive, SentimentLabel::Negative};
  EXPECT_THROW(split_indices(missing, cfg), Error);
  cfg.stratified = false;
  EXPECT_EQ(split_indices(missing, cfg).test.size(), 1u);
}

TEST(Split, RejectsBadFraction) {
  const auto y = labels_with_counts(3, 3, 3);
  for (double f : {0.0, 1.0, -0.1, 1.5}) {
    SplitConfig cfg;
    cfg.test_fraction = f;
    EXPECT_THROW(split_indices(y, cfg), Error) << f;
  }
}

TEST(Split, PartitionPropertiesOnRandomInputs) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::size_t> count(1, 60);
    const auto neg = count(gen), neu = count(gen), pos = count(gen);
    const auto y = labels_with_counts(neg, neu, pos);
    SplitConfig cfg;
    cfg.seed = gen();
    cfg.test_fraction = std::uniform_real_distribution<double>(0.05, 0.95)(gen);
    const auto s = split_indices(y, cfg);
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), y.size());
    for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
    const double n = static_cast<double>(y.size());
    ASSERT_LE(std::abs(static_cast<double>(s.test.size()) - std::round(cfg.test_fraction * n)), 3.0);
    for (auto label : kAllLabels) {
      double in_class = 0.0, in_test = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) in_class += y[i] == label;
      for (auto i : s.test) in_test += y[i] == label;
      ASSERT_LE(std::abs(in_test - cfg.test_fraction * in_class), 1.0 + 1e-9);
    }
    ASSERT_TRUE(std::is_sorted(s.train.begin(), s.train.end()));
    ASSERT_TRUE(std::is_sorted(s.test.begin(), s.test.end()));
  }
}

TEST(Split, DatasetWrapperKeepsDocuments) {
  std::vector<LabeledDocument> docs;
  const auto y = labels_with_counts(4, 4, 4);
  for (std::size_t i = 0; i < y.size(); ++i) docs.push_back({"doc" + std::to_string(i), y[i], ""});
  SplitConfig cfg;
  cfg.seed = 3;
  const auto [train, test] = split_dataset(docs, cfg);
  EXPECT_EQ(train.size() + test.size(), docs.size());
  std::set<std::string> seen;
  for (const auto& d : train) seen.insert(d.text);
  for (const auto& d : test) EXPECT_TRUE(seen.insert(d.text).second);
}
