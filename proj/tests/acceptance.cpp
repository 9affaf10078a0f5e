// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status if
// any criterion fails. Runtime budgets are part of each criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "bilstm_support.hpp"
#include "oracles.hpp"
#include "sentibench/experiment.hpp"
#include "sentibench/synthetic.hpp"
#include "test_support.hpp"

using namespace sentibench;
using testing_support::data_file;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  std::ostringstream s;
  s << std::setprecision(2) << std::scientific << v;
  return s.str();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << std::fixed << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 1. Naive Bayes log-posteriors against plain-probability Bayes.
Verdict nb_oracle() {
  std::mt19937_64 gen(1);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t docs = 3 + gen() % 3, terms = 1 + gen() % 5;
    std::vector<std::vector<double>> dense(docs, std::vector<double>(terms, 0.0));
    std::vector<int> yi(docs);
    std::vector<SentimentLabel> y;
    DocTermMatrix x(terms);
    for (std::size_t d = 0; d < docs; ++d) {
      yi[d] = d < 3 ? static_cast<int>(d) : static_cast<int>(gen() % 3);
      y.push_back(label_from_index(static_cast<std::size_t>(yi[d])));
      SparseRow row;
      for (std::size_t t = 0; t < terms; ++t)
        if (gen() % 2) {
          dense[d][t] = static_cast<double>(1 + gen() % 3);
          row.push_back({static_cast<std::uint32_t>(t), dense[d][t]});
        }
      x.append_row(row);
    }
    const double alpha = 0.5 + static_cast<double>(gen() % 4) / 2.0;
    const auto m = nb_fit(x, y, alpha);
    std::vector<double> probe(terms, 0.0);
    SparseRow sparse;
    for (std::size_t t = 0; t < terms; ++t)
      if (gen() % 2) {
        probe[t] = static_cast<double>(1 + gen() % 3);
        sparse.push_back({static_cast<std::uint32_t>(t), probe[t]});
      }
    const auto want = oracle::nb_posterior(dense, yi, alpha, probe);
    const auto got = nb_predict_log_proba(m, sparse);
    for (std::size_t c = 0; c < kNumClasses; ++c) worst = std::max(worst, std::abs(got[c] - std::log(want[c])));
  }
  return {worst <= 1e-9, "50 corpora, max |log p - log p_oracle| = " + sci(worst)};
}

// 2. Finite-difference gradient check on E=3, H=4, L=5, B=2.
Verdict gradient_check() {
  const auto f = testing_support::gradient_fixture(1);
  double worst_tensor = 0.0, worst_component = 0.0;
  std::string worst_name;
  for (const auto& t : testing_support::finite_difference_check(f.model, f.batch, f.labels, 1e-4)) {
    if (t.relative_error >= worst_tensor) {
      worst_tensor = t.relative_error;
      worst_name = t.name;
    }
    worst_component = std::max(worst_component, t.max_component_error);
  }
  return {worst_tensor < 1e-4 && worst_component < 1e-4,
          "max per-tensor relative error " + sci(worst_tensor) + " (" + worst_name +
              "), max per-component " + sci(worst_component)};
}

// 3. Overfitting 100 separable examples at the default optimiser settings.
Verdict overfit() {
  const auto train = testing_support::toy_sequences(100, 10, 3);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 3;
  std::size_t reached = 0;
  double best = 0.0;
  train_model(train, {}, {9, 16, 16, 10}, cfg, [&](const EpochRecord& r) {
    best = std::max(best, r.train_accuracy);
    if (reached == 0 && r.train_accuracy >= 0.95) reached = r.epoch;
  });
  const bool defaults = cfg.learning_rate == 0.1 && cfg.momentum == 0.8;
  return {reached > 0 && defaults,
          reached > 0 ? "train accuracy >= 0.95 at epoch " + std::to_string(reached) + " (lr 0.1, momentum 0.8)"
                      : "best train accuracy " + fixed(best) + " after 200 epochs"};
}

// 4. Lexicon scorer against the materialise-then-average oracle.
Verdict lexicon_oracle() {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> pol(-1.0, 1.0), subj(0.0, 1.0), inten(0.2, 3.0);
  double worst = 0.0;
  bool bounded = true;
  for (int trial = 0; trial < 1000; ++trial) {
    Lexicon lex;
    std::map<std::string, oracle::WordScore> ref;
    const int words = 1 + static_cast<int>(gen() % 12);
    for (int w = 0; w < words; ++w) {
      const bool modifier = gen() % 4 == 0;
      const oracle::WordScore ws{modifier ? 0.0 : pol(gen), modifier ? 0.0 : subj(gen), modifier ? inten(gen) : 1.0,
                                 modifier};
      lex.add({"w" + std::to_string(w), ws.polarity, ws.subjectivity, ws.intensity, ws.modifier});
      ref["w" + std::to_string(w)] = ws;
    }
    std::vector<std::string> doc;
    const int len = static_cast<int>(gen() % 20);
    for (int k = 0; k < len; ++k) doc.push_back("w" + std::to_string(gen() % static_cast<unsigned>(words + 3)));
    const auto got = score_text(doc, lex);
    const auto want = oracle::lexicon_average(doc, ref);
    worst = std::max({worst, std::abs(got.polarity - want[0]), std::abs(got.subjectivity - want[1])});
    bounded = bounded && got.polarity >= -1.0 && got.polarity <= 1.0 && got.subjectivity >= 0.0 &&
              got.subjectivity <= 1.0;
  }
  return {worst <= 1e-12 && bounded,
          "1000 documents, max deviation " + sci(worst) + (bounded ? ", bounds held" : ", BOUNDS VIOLATED")};
}

// 5. Forest prediction is the mode of its trees' votes.
Verdict forest_votes_check() {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> noise(0.0, 0.5);
  FeatureMatrix x(2);
  std::vector<SentimentLabel> y;
  for (int i = 0; i < 400; ++i) {
    const auto c = static_cast<std::size_t>(gen() % 3);
    x.append(std::vector<double>{static_cast<double>(c) - 1.0 + noise(gen), 0.5 + noise(gen)});
    y.push_back(label_from_index(c));
  }
  ForestParams fp;
  fp.seed = 5;
  const auto forest = fit_forest(x, y, fp);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  int mismatches = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::vector<double> probe{u(gen), u(gen)};
    std::vector<int> votes;
    for (const auto& t : forest.trees) votes.push_back(static_cast<int>(class_index(tree_predict(t, probe))));
    if (class_index(forest_predict(forest, probe)) != static_cast<std::size_t>(oracle::vote_mode(votes))) ++mismatches;
  }
  return {mismatches == 0 && forest.trees.size() == 25,
          "1000 probes, " + std::to_string(mismatches) + " mismatches; default forest has " +
              std::to_string(forest.trees.size()) + " trees"};
}

// 6. Weighted recall equals accuracy; the worked four-example case.
Verdict metrics_identities() {
  std::mt19937_64 gen(6);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    ConfusionMatrix cm;
    for (auto& row : cm.cells)
      for (auto& cell : row) cell = gen() % 4 == 0 ? 0 : gen() % 50;
    if (cm.total() == 0) cm.cells[0][0] = 1;
    const auto r = compute_metrics(cm);
    worst = std::max(worst, std::abs(r.weighted.recall - r.accuracy));
  }
  using L = SentimentLabel;
  const auto r = compute_metrics(confusion_matrix({L::Positive, L::Positive, L::Neutral, L::Negative},
                                                  {L::Positive, L::Neutral, L::Neutral, L::Negative}));
  const bool worked = r.accuracy == 0.75 && std::abs(r.macro.f1 - 7.0 / 9.0) < 1e-15 &&
                      r.per_class[class_index(L::Positive)].precision == 1.0 &&
                      r.per_class[class_index(L::Positive)].recall == 0.5 &&
                      r.per_class[class_index(L::Neutral)].precision == 0.5;
  return {worst <= 1e-12 && worked, "1000 matrices, max |weighted recall - accuracy| = " + sci(worst) +
                                        "; worked case accuracy " + fixed(r.accuracy) + ", macro F1 " + fixed(r.macro.f1)};
}

// 7. TF-IDF rows are unit length; the two-document example.
Verdict tfidf_norms() {
  std::mt19937_64 gen(7);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TermList> docs;
    for (int d = 0; d < 30; ++d) {
      TermList doc;
      for (std::size_t k = 0, n = gen() % 10; k < n; ++k) doc.push_back("t" + std::to_string(gen() % 12));
      docs.push_back(doc);
    }
    const auto [model, x] = tfidf_fit_transform(docs, {1, 2}, 1 + gen() % 2);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double sq = 0.0;
      for (const auto& e : x.row(r)) sq += e.value * e.value;
      if (sq > 0.0) worst = std::max(worst, std::abs(std::sqrt(sq) - 1.0));
    }
  }
  const auto [model, x] = tfidf_fit_transform({{"a"}, {"a", "b"}}, {1, 1}, 1);
  double va = 0.0, vb = 0.0;
  for (const auto& e : x.row(1)) (e.index == *model.vocabulary.index_of("a") ? va : vb) = e.value;
  const bool example = std::round(va * 1e4) == 5797.0 && std::round(vb * 1e4) == 8148.0;
  return {worst <= 1e-9 && example,
          "max |norm - 1| = " + sci(worst) + "; example row [" + fixed(va) + ", " + fixed(vb) + "]"};
}

nlohmann::json experiment_config(const fs::path& dataset, const fs::path& out, std::uint64_t seed) {
  return {{"schema_version", 1},
          {"seed", seed},
          {"output_dir", out.string()},
          {"dataset", {{"path", dataset.string()}, {"format", "csv"}}},
          {"preprocess",
           {{"stopwords", data_file("stopwords_en.txt")},
            {"contractions", data_file("contractions_en.tsv")},
            {"emoticons", data_file("emoticons.txt")},
            {"lexicon", data_file("lexicon_en.tsv")}}},
          {"split", {{"test_fraction", 0.25}, {"stratified", true}}}};
}

fs::path write_synthetic(const fs::path& path, std::size_t docs, std::uint64_t seed) {
  SyntheticCorpusConfig sc;
  sc.num_documents = docs;
  sc.seed = seed;
  const auto lex = load_lexicon(data_file("lexicon_en.tsv"));
  const auto corpus = generate_synthetic_corpus(sc, lex, load_stopwords(data_file("stopwords_en.txt")),
                                                lexicon_words_in_file(data_file("lexicon_en.tsv")));
  write_text_file(path, format_csv_dataset(corpus));
  return path;
}

// 8. Ordering BiLSTM >= lexicon + forest >= Naive Bayes on a planted corpus,
// all pipelines at their default hyperparameters.
Verdict directional(const testing_support::TempDir& dir) {
  const auto dataset = write_synthetic(dir / "planted.csv", 6000, 7);
  const auto cfg_path = dir.write("planted.json", experiment_config(dataset, dir / "planted-out", 42).dump(2));
  std::ostringstream log;
  const auto outcome = run_compare(load_experiment_config(cfg_path), log);
  const double nb = outcome.rows[0].metrics.accuracy, rf = outcome.rows[1].metrics.accuracy,
               bl = outcome.rows[2].metrics.accuracy;
  return {outcome.complete && bl >= rf && rf >= nb,
          "accuracy BiLSTM " + fixed(bl) + " >= lexicon+RF " + fixed(rf) + " >= NB " + fixed(nb)};
}

// 9. Reruns with the same config and seed produce byte-identical metrics.
Verdict determinism(const testing_support::TempDir& dir) {
  const auto dataset = write_synthetic(dir / "rerun.csv", 600, 11);
  const auto out = dir / "rerun-out";
  const auto cfg_path = dir.write("rerun.json", experiment_config(dataset, out, 3).dump(2));
  std::ostringstream log;
  std::vector<std::string> files;
  auto run_all = [&] {
    std::map<std::string, std::string> bytes;
    const auto c = load_experiment_config(cfg_path);
    run_compare(c, log);
    for (const char* key : {"nb", "lexicon-rf", "bilstm"}) {
      run_evaluate(out / (std::string(key) + ".model"), c, std::nullopt, log);
      for (const auto& suffix : {".metrics.json", ".evaluate.json"})
        bytes[std::string(key) + suffix] = slurp(out / (std::string(key) + suffix));
    }
    bytes["compare.json"] = slurp(out / "compare.json");
    return bytes;
  };
  const auto first = run_all();
  fs::remove_all(out);
  const auto second = run_all();
  std::size_t differing = 0;
  for (const auto& [name, content] : first)
    if (content.empty() || second.at(name) != content) ++differing;
  return {differing == 0, std::to_string(first.size()) + " metrics files from compare and evaluate, " +
                              std::to_string(differing) + " differ on rerun"};
}

// 10. clean_text idempotence and token hygiene on random strings.
Verdict preprocessing() {
  const auto& pc = testing_support::shipped_preprocess();
  std::mt19937_64 gen(10);
  int not_idempotent = 0, dirty = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto raw = testing_support::random_post(gen);
    const auto once = clean_text(raw, pc);
    if (clean_text(once, pc) != once) ++not_idempotent;
    for (const auto& tok : remove_stopwords(tokenize(once), pc))
      if (tok.find_first_of("#@") != std::string::npos || tok.find("http") != std::string::npos ||
          std::any_of(tok.begin(), tok.end(), [](char c) { return c >= 'A' && c <= 'Z'; }))
        ++dirty;
  }
  return {not_idempotent == 0 && dirty == 0, "10000 strings, " + std::to_string(not_idempotent) +
                                                 " not idempotent, " + std::to_string(dirty) + " dirty tokens"};
}

}  // namespace

int main() {
  testing_support::TempDir dir("acceptance");
  struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "Naive Bayes oracle equivalence", 10, nb_oracle},
      {2, "BiLSTM gradient check", 60, gradient_check},
      {3, "BiLSTM overfit sanity", 300, overfit},
      {4, "Lexicon scorer oracle and bounds", 0, lexicon_oracle},
      {5, "Forest vote consistency", 0, forest_votes_check},
      {6, "Metrics identities", 0, metrics_identities},
      {7, "TF-IDF normalisation", 0, tfidf_norms},
      {8, "Directional replication", 900, [&] { return directional(dir); }},
      {9, "Determinism", 0, [&] { return determinism(dir); }},
      {10, "Preprocessing idempotence and hygiene", 0, preprocessing},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = v.pass;
    std::string timing = fixed(secs, 2) + " s";
    if (c.budget_seconds > 0) {
      timing += " of " + fixed(c.budget_seconds, 0) + " s budget";
      if (secs >= c.budget_seconds) pass = false;
    }
    if (!pass) ++failures;
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << v.detail << " (" << timing
              << ")" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
