// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration and the three end-to-end pipelines behind the
// `train`, `evaluate` and `compare` commands.
#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sentibench/bilstm.hpp"
#include "sentibench/corpus.hpp"
#include "sentibench/error.hpp"
#include "sentibench/eval.hpp"
#include "sentibench/features.hpp"
#include "sentibench/forest.hpp"
#include "sentibench/hash.hpp"
#include "sentibench/lexicon.hpp"
#include "sentibench/naive_bayes.hpp"

namespace sentibench {

namespace fs = std::filesystem;

inline constexpr int kConfigSchemaVersion = 1;

enum class ModelKind { NaiveBayes, LexiconForest, BiLstm };

inline ModelKind parse_model_kind(const std::string& name) {
  if (name == "nb") return ModelKind::NaiveBayes;
  if (name == "lexicon-rf") return ModelKind::LexiconForest;
  if (name == "bilstm") return ModelKind::BiLstm;
  throw Error("cli", "unknown model '" + name + "' (expected nb, lexicon-rf or bilstm)");
}

inline std::string model_key(ModelKind k) {
  switch (k) {
    case ModelKind::NaiveBayes: return "nb";
    case ModelKind::LexiconForest: return "lexicon-rf";
    case ModelKind::BiLstm: return "bilstm";
  }
  return {};
}

inline std::string model_display_name(ModelKind k) {
  switch (k) {
    case ModelKind::NaiveBayes: return "Naive Bayes";
    case ModelKind::LexiconForest: return "TextBlob + Random Forest";
    case ModelKind::BiLstm: return "Custom BiLSTM";
  }
  return {};
}

struct NbSettings {
  double alpha = 1.0;
  NgramRange ngram_range{1, 2};
  std::size_t min_df = 2;
  bool use_counts = false;  // raw counts instead of TF-IDF weights
};

struct LexiconForestSettings {
  ForestParams forest;
  bool score_stopword_removed = true;
};

struct BiLstmSettings {
  std::size_t embedding = 64;
  std::size_t hidden = 64;
  std::size_t seq_len = 48;
  std::size_t max_vocab = 20000;
  double validation_fraction = 0.1;
  TrainConfig train;
};

struct ExperimentConfig {
  nlohmann::json echo;  // effective configuration after overrides
  fs::path dataset_path;
  DatasetFormat dataset_format = DatasetFormat::Csv;
  fs::path stopwords_path, contractions_path, emoticons_path, lexicon_path;
  bool lowercase = true;
  SplitConfig split;
  std::uint64_t seed = 0;
  fs::path output_dir;
  NbSettings nb;
  LexiconForestSettings lexicon_rf;
  BiLstmSettings bilstm;

  /// Every referenced input file must exist.
  void validate() const {
    const std::pair<const char*, const fs::path*> files[] = {
        {"dataset.path", &dataset_path},         {"preprocess.stopwords", &stopwords_path},
        {"preprocess.contractions", &contractions_path}, {"preprocess.emoticons", &emoticons_path},
        {"preprocess.lexicon", &lexicon_path}};
    for (const auto& [key, path] : files)
      if (path->empty() || !fs::is_regular_file(*path))
        throw Error("config", std::string(key) + ": file '" + path->string() + "' does not exist");
  }
};

namespace detail {

inline nlohmann::json& json_at_dotted(nlohmann::json& root, const std::string& dotted) {
  nlohmann::json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error("config", "malformed key '" + dotted + "'");
    if (node->is_null()) *node = nlohmann::json::object();  // missing sections are created
    if (!node->is_object()) throw Error("config", "key '" + dotted + "' descends into a non-object");
    node = &(*node)[part];
    if (dot == std::string::npos) return *node;
    start = dot + 1;
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error("config", std::string("bad value for '") + key + "': " + j.at(key).dump());
  }
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace detail

/// Applies `key=value` overrides (dotted keys; values parsed as JSON when
/// possible, otherwise taken as strings) to a configuration document.
inline void apply_override(nlohmann::json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw Error("config", "override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  auto& slot = detail::json_at_dotted(root, key);
  if (slot.is_object() || slot.is_array()) throw Error("config", "override '" + key + "' targets a non-scalar");
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  slot = value.is_discarded() ? nlohmann::json(raw) : value;
}

/// Builds the typed configuration. Relative paths resolve against `base_dir`
/// (the directory holding the config file).
inline ExperimentConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  using detail::get_or;
  if (!j.is_object()) throw Error("config", "configuration must be a JSON object");
  const int schema = get_or<int>(j, "schema_version", 0);
  if (schema != kConfigSchemaVersion)
    throw Error("config", "schema_version must be " + std::to_string(kConfigSchemaVersion));
  if (!j.contains("seed") || !j.at("seed").is_number_unsigned())
    throw Error("config", "'seed' is mandatory and must be a non-negative integer");

  ExperimentConfig c;
  c.echo = j;
  c.seed = j.at("seed").get<std::uint64_t>();

  const auto ds = j.value("dataset", nlohmann::json::object());
  c.dataset_path = detail::resolve(base_dir, get_or<std::string>(ds, "path", ""));
  c.dataset_format = parse_dataset_format(get_or<std::string>(ds, "format", "csv"));

  const auto pp = j.value("preprocess", nlohmann::json::object());
  c.stopwords_path = detail::resolve(base_dir, get_or<std::string>(pp, "stopwords", ""));
  c.contractions_path = detail::resolve(base_dir, get_or<std::string>(pp, "contractions", ""));
  c.emoticons_path = detail::resolve(base_dir, get_or<std::string>(pp, "emoticons", ""));
  c.lexicon_path = detail::resolve(base_dir, get_or<std::string>(pp, "lexicon", ""));
  c.lowercase = get_or<bool>(pp, "lowercase", true);

  const auto sp = j.value("split", nlohmann::json::object());
  c.split.test_fraction = get_or<double>(sp, "test_fraction", 0.25);
  c.split.stratified = get_or<bool>(sp, "stratified", true);
  c.split.seed = c.seed;

  c.output_dir = detail::resolve(base_dir, get_or<std::string>(j, "output_dir", "out"));

  const auto nb = j.value("nb", nlohmann::json::object());
  c.nb.alpha = get_or<double>(nb, "alpha", 1.0);
  c.nb.ngram_range = {get_or<std::size_t>(nb, "ngram_min", 1), get_or<std::size_t>(nb, "ngram_max", 2)};
  c.nb.min_df = get_or<std::size_t>(nb, "min_df", 2);
  const auto features = get_or<std::string>(nb, "features", "tfidf");
  if (features != "tfidf" && features != "counts") throw Error("config", "nb.features must be tfidf or counts");
  c.nb.use_counts = features == "counts";

  const auto rf = j.value("lexicon_rf", nlohmann::json::object());
  c.lexicon_rf.forest.num_trees = get_or<std::size_t>(rf, "trees", 25);
  c.lexicon_rf.forest.tree.max_depth = rf.contains("max_depth") && rf.at("max_depth").is_null()
                                           ? std::nullopt
                                           : std::optional<std::size_t>(get_or<std::size_t>(rf, "max_depth", 12));
  c.lexicon_rf.forest.tree.min_samples_split = get_or<std::size_t>(rf, "min_samples_split", 2);
  c.lexicon_rf.forest.tree.features_per_split = get_or<std::size_t>(rf, "features_per_split", 0);
  c.lexicon_rf.forest.bootstrap = get_or<bool>(rf, "bootstrap", true);
  c.lexicon_rf.forest.seed = mix64(c.seed ^ 0x666f72657374ULL);
  c.lexicon_rf.score_stopword_removed = get_or<bool>(rf, "score_stopword_removed", true);

  const auto bl = j.value("bilstm", nlohmann::json::object());
  c.bilstm.embedding = get_or<std::size_t>(bl, "embedding_dim", 64);
  c.bilstm.hidden = get_or<std::size_t>(bl, "hidden_dim", 64);
  c.bilstm.seq_len = get_or<std::size_t>(bl, "max_len", 48);
  c.bilstm.max_vocab = get_or<std::size_t>(bl, "max_vocab", 20000);
  c.bilstm.validation_fraction = get_or<double>(bl, "validation_fraction", 0.1);
  c.bilstm.train.epochs = get_or<std::size_t>(bl, "epochs", 20);
  c.bilstm.train.learning_rate = get_or<double>(bl, "learning_rate", 0.1);
  c.bilstm.train.momentum = get_or<double>(bl, "momentum", 0.8);
  c.bilstm.train.batch_size = get_or<std::size_t>(bl, "batch_size", 64);
  c.bilstm.train.gradient_clip_norm = get_or<double>(bl, "gradient_clip_norm", 5.0);
  c.bilstm.train.seed = mix64(c.seed ^ 0x62696c73746dULL);
  c.bilstm.train.validate();
  if (c.bilstm.max_vocab < 1) throw Error("config", "bilstm.max_vocab must be >= 1");
  if (!(c.bilstm.validation_fraction >= 0.0 && c.bilstm.validation_fraction < 1.0))
    throw Error("config", "bilstm.validation_fraction must lie in [0, 1)");
  return c;
}

inline ExperimentConfig load_experiment_config(const fs::path& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw Error("config", "cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("config", path.string() + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  return config_from_json(j, fs::absolute(path).parent_path());
}

// ---------------------------------------------------------------------------
// Shared data preparation

struct PreparedData {
  std::vector<LabeledDocument> docs;
  std::vector<TermList> tokens;      // stopwords removed
  std::vector<TermList> raw_tokens;  // stopwords kept
  SplitIndices split;
  std::string data_fingerprint;
  std::string split_fingerprint;

  std::vector<SentimentLabel> labels(const std::vector<std::size_t>& idx) const {
    std::vector<SentimentLabel> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(docs[i].label);
    return out;
  }
  std::vector<TermList> gather(const std::vector<TermList>& from, const std::vector<std::size_t>& idx) const {
    std::vector<TermList> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(from[i]);
    return out;
  }
};

inline std::string split_fingerprint(const SplitIndices& s) {
  Sha256 h;
  h.update("train");
  for (auto i : s.train) h.update(":" + std::to_string(i));
  h.update("|test");
  for (auto i : s.test) h.update(":" + std::to_string(i));
  return h.hex();
}

inline PreprocessConfig load_preprocessing(const ExperimentConfig& c) {
  auto pc = load_preprocess_config(c.stopwords_path.string(), c.contractions_path.string(), c.emoticons_path.string());
  pc.lowercase = c.lowercase;
  return pc;
}

inline void tokenize_all(const std::vector<LabeledDocument>& docs, const PreprocessConfig& pc,
                         std::vector<TermList>& tokens, std::vector<TermList>& raw_tokens) {
  tokens.clear();
  raw_tokens.clear();
  tokens.reserve(docs.size());
  raw_tokens.reserve(docs.size());
  for (const auto& d : docs) {
    raw_tokens.push_back(tokenize(clean_text(d.text, pc)));
    tokens.push_back(remove_stopwords(raw_tokens.back(), pc));
  }
}

/// Loads and cleans a dataset file. With `split` set, partitions it per the
/// configured split; otherwise every document lands in the test portion.
inline PreparedData prepare_data(const ExperimentConfig& c, const PreprocessConfig& pc, const fs::path& dataset,
                                 bool split) {
  PreparedData d;
  d.docs = load_dataset(dataset.string(), c.dataset_format);
  if (d.docs.empty()) throw Error("corpus", "dataset '" + dataset.string() + "' has no records");
  d.data_fingerprint = sha256_file(dataset.string());
  tokenize_all(d.docs, pc, d.tokens, d.raw_tokens);
  if (split) {
    d.split = split_indices(d.labels([&] {
                              std::vector<std::size_t> all(d.docs.size());
                              for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
                              return all;
                            }()),
                            c.split);
  } else {
    for (std::size_t i = 0; i < d.docs.size(); ++i) d.split.test.push_back(i);
  }
  d.split_fingerprint = split_fingerprint(d.split);
  return d;
}

// ---------------------------------------------------------------------------
// Pipelines. Each trained pipeline serialises to a self-describing artifact.

struct NbPipeline {
  TfIdfModel vectorizer;
  NaiveBayesModel model;
  bool use_counts = false;

  SparseRow features(const TermList& tokens) const {
    return use_counts ? vectorizer.counts(tokens) : vectorizer.transform(tokens);
  }
  std::vector<SentimentLabel> predict(const std::vector<TermList>& docs) const {
    std::vector<SentimentLabel> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(nb_predict(model, features(d)));
    return out;
  }
};

inline NbPipeline train_nb(const std::vector<TermList>& docs, const std::vector<SentimentLabel>& y,
                           const NbSettings& s) {
  NbPipeline p;
  p.use_counts = s.use_counts;
  p.vectorizer = tfidf_fit(docs, s.ngram_range, s.min_df);
  const DocTermMatrix x = p.vectorizer.transform_all(docs, s.use_counts);
  p.model = nb_fit(x, y, s.alpha, p.vectorizer.vocabulary.fingerprint());
  return p;
}

inline nlohmann::json to_json(const NbPipeline& p) {
  return {{"format", "sentibench.model.nb"},
          {"version", 1},
          {"features", p.use_counts ? "counts" : "tfidf"},
          {"vectorizer", to_json(p.vectorizer)},
          {"naive_bayes", to_json(p.model)}};
}

inline NbPipeline nb_pipeline_from_json(const nlohmann::json& j) {
  NbPipeline p;
  p.use_counts = j.at("features").get<std::string>() == "counts";
  p.vectorizer = tfidf_from_json(j.at("vectorizer"));
  p.model = naive_bayes_from_json(j.at("naive_bayes"));
  if (p.model.vocabulary_hash != p.vectorizer.vocabulary.fingerprint())
    throw Error("naive_bayes", "vocabulary hash mismatch: model was fitted against a different vocabulary");
  if (p.model.num_features != p.vectorizer.vocabulary.size())
    throw Error("naive_bayes", "model feature count does not match the vocabulary");
  return p;
}

struct LexiconForestPipeline {
  RandomForestModel forest;
  std::string lexicon_hash;
  bool score_stopword_removed = true;

  static FeatureMatrix features(const std::vector<TermList>& docs, const Lexicon& lex) {
    FeatureMatrix x(2);
    for (const auto& d : docs) {
      const auto s = score_text(d, lex);
      const double row[2] = {s.polarity, s.subjectivity};
      x.append(row);
    }
    return x;
  }

  std::vector<SentimentLabel> predict(const std::vector<TermList>& docs, const Lexicon& lex) const {
    if (lex.fingerprint() != lexicon_hash)
      throw Error("lexicon", "lexicon does not match the one the forest was trained with");
    const auto x = features(docs, lex);
    std::vector<SentimentLabel> out;
    out.reserve(docs.size());
    for (std::size_t r = 0; r < x.rows(); ++r) out.push_back(forest_predict(forest, x.row(r)));
    return out;
  }
};

inline LexiconForestPipeline train_lexicon_forest(const std::vector<TermList>& docs,
                                                  const std::vector<SentimentLabel>& y, const Lexicon& lex,
                                                  const LexiconForestSettings& s) {
  LexiconForestPipeline p;
  p.lexicon_hash = lex.fingerprint();
  p.score_stopword_removed = s.score_stopword_removed;
  p.forest = fit_forest(LexiconForestPipeline::features(docs, lex), y, s.forest);
  return p;
}

inline nlohmann::json to_json(const LexiconForestPipeline& p) {
  return {{"format", "sentibench.model.lexicon-rf"},
          {"version", 1},
          {"lexicon_hash", p.lexicon_hash},
          {"score_stopword_removed", p.score_stopword_removed},
          {"forest", to_json(p.forest)}};
}

inline LexiconForestPipeline lexicon_forest_from_json(const nlohmann::json& j) {
  LexiconForestPipeline p;
  p.lexicon_hash = j.at("lexicon_hash").get<std::string>();
  p.score_stopword_removed = j.at("score_stopword_removed").get<bool>();
  p.forest = forest_from_json(j.at("forest"));
  return p;
}

struct BiLstmPipeline {
  BiLstmArtifact artifact;
  std::vector<EpochRecord> history;

  std::vector<SentimentLabel> predict(const std::vector<TermList>& docs) const {
    std::vector<Sequence> seqs;
    seqs.reserve(docs.size());
    for (const auto& d : docs) seqs.push_back(encode_and_pad(d, artifact.tokenizer, artifact.model.dims.seq_len));
    return model_predict(artifact.model, seqs);
  }
};

inline BiLstmPipeline train_bilstm(const std::vector<TermList>& docs, const std::vector<SentimentLabel>& y,
                                   const BiLstmSettings& s, std::ostream* log = nullptr) {
  // Hold out a validation slice of the training portion for model selection.
  SplitIndices parts;
  if (s.validation_fraction > 0.0) {
    SplitConfig vc{s.validation_fraction, mix64(s.train.seed ^ 0x76616cULL), true};
    parts = split_indices(y, vc);
  } else {
    for (std::size_t i = 0; i < docs.size(); ++i) parts.train.push_back(i);
  }
  std::vector<TermList> fit_docs;
  for (auto i : parts.train) fit_docs.push_back(docs[i]);

  BiLstmPipeline p;
  p.artifact.tokenizer = fit_tokenizer(fit_docs, s.max_vocab);
  p.artifact.train_config = s.train;
  const BiLstmDims dims{p.artifact.tokenizer.vocab_size(), s.embedding, s.hidden, s.seq_len};

  auto encode = [&](const std::vector<std::size_t>& idx) {
    EncodedDataset e;
    for (auto i : idx) {
      e.sequences.push_back(encode_and_pad(docs[i], p.artifact.tokenizer, s.seq_len));
      e.labels.push_back(y[i]);
    }
    return e;
  };
  const auto train = encode(parts.train);
  const auto validation = encode(parts.test);
  auto result = train_model(train, validation, dims, s.train, [&](const EpochRecord& r) {
    if (log)
      *log << "[bilstm] epoch " << r.epoch << ": train loss " << r.train_loss << " acc " << r.train_accuracy
           << ", val loss " << r.validation_loss << " acc " << r.validation_accuracy << "\n";
  });
  p.artifact.model = std::move(result.model);
  p.artifact.best_epoch = result.best_epoch;
  p.history = std::move(result.history);
  return p;
}

// ---------------------------------------------------------------------------
// Commands

struct TrainOutcome {
  ModelKind kind;
  fs::path artifact_path;
  fs::path manifest_path;
  fs::path metrics_path;
  MetricsReport metrics;
};

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cli", "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("cli", "write failed for '" + path.string() + "'");
}

inline void write_json_file(const fs::path& path, const nlohmann::json& j) { write_text_file(path, j.dump(2) + "\n"); }

namespace detail {

// Fits one pipeline on the train portion, writes its artifact, and scores it
// on the test portion.
inline TrainOutcome train_one(ModelKind kind, const ExperimentConfig& c,
                              const PreparedData& data, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(c.output_dir);
  const std::string key = model_key(kind);
  TrainOutcome out;
  out.kind = kind;
  out.artifact_path = c.output_dir / (key + ".model");
  out.manifest_path = c.output_dir / (key + ".manifest.json");
  out.metrics_path = c.output_dir / (key + ".metrics.json");

  const auto y_train = data.labels(data.split.train);
  const auto y_test = data.labels(data.split.test);
  std::vector<SentimentLabel> predicted;
  nlohmann::json extra = nlohmann::json::object();
  log << "[" << key << "] training on " << data.split.train.size() << " documents\n";

  switch (kind) {
    case ModelKind::NaiveBayes: {
      const auto p = train_nb(data.gather(data.tokens, data.split.train), y_train, c.nb);
      write_json_file(out.artifact_path, to_json(p));
      predicted = p.predict(data.gather(data.tokens, data.split.test));
      extra["vocabulary_size"] = p.vectorizer.vocabulary.size();
      break;
    }
    case ModelKind::LexiconForest: {
      const Lexicon lex = load_lexicon(c.lexicon_path.string());
      const auto& src = c.lexicon_rf.score_stopword_removed ? data.tokens : data.raw_tokens;
      const auto p = train_lexicon_forest(data.gather(src, data.split.train), y_train, lex, c.lexicon_rf);
      write_json_file(out.artifact_path, to_json(p));
      predicted = p.predict(data.gather(src, data.split.test), lex);
      extra["lexicon_entries"] = lex.size();
      break;
    }
    case ModelKind::BiLstm: {
      const auto p = train_bilstm(data.gather(data.tokens, data.split.train), y_train, c.bilstm, &log);
      save_bilstm(out.artifact_path.string(), p.artifact);
      predicted = p.predict(data.gather(data.tokens, data.split.test));
      nlohmann::json history = nlohmann::json::array();
      for (const auto& r : p.history)
        history.push_back({{"epoch", r.epoch},
                           {"train_loss", r.train_loss},
                           {"train_accuracy", r.train_accuracy},
                           {"validation_loss", r.validation_loss},
                           {"validation_accuracy", r.validation_accuracy}});
      extra["history"] = history;
      extra["best_epoch"] = p.artifact.best_epoch;
      extra["vocabulary_size"] = p.artifact.tokenizer.vocab_size();
      break;
    }
  }

  out.metrics = compute_metrics(confusion_matrix(y_test, predicted));
  nlohmann::json metrics = {{"model", model_display_name(kind)}, {"metrics", to_json(out.metrics)}};
  write_json_file(out.metrics_path, metrics);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  nlohmann::json manifest = {{"model", key},
                             {"artifact", out.artifact_path.filename().string()},
                             {"config", c.echo},
                             {"seed", c.seed},
                             {"data_fingerprint", data.data_fingerprint},
                             {"split_fingerprint", data.split_fingerprint},
                             {"train_size", data.split.train.size()},
                             {"test_size", data.split.test.size()},
                             {"test_metrics", to_json(out.metrics)},
                             {"details", extra},
                             {"wall_time_seconds", wall}};
  write_json_file(out.manifest_path, manifest);
  log << "[" << key << "] test accuracy " << out.metrics.accuracy << " (" << wall << " s)\n";
  return out;
}

}  // namespace detail

inline TrainOutcome run_train(ModelKind kind, const ExperimentConfig& c, std::ostream& log = std::cerr) {
  c.validate();
  const auto pc = load_preprocessing(c);
  const auto data = prepare_data(c, pc, c.dataset_path, true);
  return detail::train_one(kind, c, data, log);
}

/// Identifies the pipeline stored in an artifact file.
inline ModelKind artifact_kind(const fs::path& path) {
  if (is_bilstm_artifact(path.string())) return ModelKind::BiLstm;
  std::ifstream in(path);
  if (!in) throw Error("cli", "cannot open artifact '" + path.string() + "'");
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("cli", "'" + path.string() + "' is not a model artifact");
  const auto format = j.value("format", "");
  if (format == "sentibench.model.nb") return ModelKind::NaiveBayes;
  if (format == "sentibench.model.lexicon-rf") return ModelKind::LexiconForest;
  throw Error("cli", "'" + path.string() + "' has unknown artifact format '" + format + "'");
}

inline nlohmann::json read_json_artifact(const fs::path& path, int expected_version) {
  std::ifstream in(path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("version", 0) != expected_version)
    throw Error("cli", "artifact version skew: '" + path.string() + "' has version " +
                           j.value("version", nlohmann::json()).dump());
  return j;
}

struct EvaluateOutcome {
  ModelKind kind;
  MetricsReport metrics;
  fs::path metrics_path;
};

/// Scores an artifact on the configured test split, or on every document of
/// `data_override` when given.
inline EvaluateOutcome run_evaluate(const fs::path& artifact, const ExperimentConfig& c,
                                    const std::optional<fs::path>& data_override = std::nullopt,
                                    std::ostream& log = std::cerr) {
  c.validate();
  const ModelKind kind = artifact_kind(artifact);
  const auto pc = load_preprocessing(c);
  const auto data = prepare_data(c, pc, data_override.value_or(c.dataset_path), !data_override.has_value());
  const auto gold = data.labels(data.split.test);
  std::vector<SentimentLabel> predicted;
  switch (kind) {
    case ModelKind::NaiveBayes: {
      const auto p = nb_pipeline_from_json(read_json_artifact(artifact, 1));
      predicted = p.predict(data.gather(data.tokens, data.split.test));
      break;
    }
    case ModelKind::LexiconForest: {
      const auto p = lexicon_forest_from_json(read_json_artifact(artifact, 1));
      const Lexicon lex = load_lexicon(c.lexicon_path.string());
      predicted = p.predict(data.gather(p.score_stopword_removed ? data.tokens : data.raw_tokens, data.split.test), lex);
      break;
    }
    case ModelKind::BiLstm: {
      BiLstmPipeline p;
      p.artifact = load_bilstm(artifact.string());
      predicted = p.predict(data.gather(data.tokens, data.split.test));
      break;
    }
  }
  EvaluateOutcome out;
  out.kind = kind;
  out.metrics = compute_metrics(confusion_matrix(gold, predicted));
  fs::create_directories(c.output_dir);
  out.metrics_path = c.output_dir / (model_key(kind) + ".evaluate.json");
  write_json_file(out.metrics_path, {{"model", model_display_name(kind)},
                                     {"data_fingerprint", data.data_fingerprint},
                                     {"split_fingerprint", data.split_fingerprint},
                                     {"metrics", to_json(out.metrics)}});
  log << "[evaluate] " << model_key(kind) << " on " << gold.size() << " documents\n";
  return out;
}

struct CompareOutcome {
  std::vector<TrainOutcome> rows;
  bool complete = false;
  nlohmann::json report;
  std::string table;
};

/// Trains all three pipelines on one shared split and writes compare.json
/// and compare.txt. A failing pipeline stops the run; the report written so
/// far is marked incomplete and the error is rethrown.
inline CompareOutcome run_compare(const ExperimentConfig& c, std::ostream& log = std::cerr) {
  c.validate();
  const auto pc = load_preprocessing(c);
  const auto data = prepare_data(c, pc, c.dataset_path, true);
  fs::create_directories(c.output_dir);

  CompareOutcome out;
  auto emit = [&](const std::optional<std::string>& error) {
    nlohmann::json rows = nlohmann::json::array();
    std::vector<std::pair<std::string, MetricsReport>> table_rows;
    for (const auto& r : out.rows) {
      rows.push_back({{"model", model_display_name(r.kind)}, {"key", model_key(r.kind)}, {"metrics", to_json(r.metrics)}});
      table_rows.emplace_back(model_display_name(r.kind), r.metrics);
    }
    out.report = {{"schema_version", 1},
                  {"complete", out.complete},
                  {"seed", c.seed},
                  {"data_fingerprint", data.data_fingerprint},
                  {"split_fingerprint", data.split_fingerprint},
                  {"train_size", data.split.train.size()},
                  {"test_size", data.split.test.size()},
                  {"rows", rows}};
    if (error) out.report["error"] = *error;
    out.table = format_metrics_table(table_rows);
    if (!out.complete) out.table += "INCOMPLETE: " + error.value_or("comparison did not finish") + "\n";
    write_json_file(c.output_dir / "compare.json", out.report);
    write_text_file(c.output_dir / "compare.txt", out.table);
  };

  for (ModelKind kind : {ModelKind::NaiveBayes, ModelKind::LexiconForest, ModelKind::BiLstm}) {
    try {
      out.rows.push_back(detail::train_one(kind, c, data, log));
    } catch (const std::exception& e) {
      emit(std::string(model_key(kind)) + ": " + e.what());
      throw;
    }
  }
  out.complete = true;
  emit(std::nullopt);
  return out;
}

}  // namespace sentibench
