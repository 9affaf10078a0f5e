// SPDX-License-Identifier: Apache-2.0
//
// sentibench command-line harness: train, evaluate, compare, synth.
// Progress goes to stderr; results go to stdout and the output directory.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sentibench/experiment.hpp"
#include "sentibench/synthetic.hpp"

namespace fs = std::filesystem;
using namespace sentibench;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
  std::string format;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override the global seed");
  cmd->add_option("--out", o.out, "Override the output directory");
  cmd->add_option("--data", o.data, "Dataset path");
  cmd->add_option("--format", o.format, "Dataset format")->check(CLI::IsMember({"csv", "jsonl"}));
  cmd->add_option("--set", o.overrides, "Override a config key (key=value, dotted keys)");
}

// Paths given on the command line are relative to the working directory,
// whereas paths inside the config file are relative to the file itself.
std::string quoted_path(const std::string& p) { return nlohmann::json(fs::absolute(p).string()).dump(); }

ExperimentConfig load_config(const CommonOptions& o, bool data_is_dataset) {
  std::vector<std::string> overrides = o.overrides;
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  if (!o.out.empty()) overrides.push_back("output_dir=" + quoted_path(o.out));
  if (data_is_dataset && !o.data.empty()) overrides.push_back("dataset.path=" + quoted_path(o.data));
  if (!o.format.empty()) overrides.push_back("dataset.format=" + nlohmann::json(o.format).dump());
  return load_experiment_config(o.config, overrides);
}

void print_metrics(const std::string& model, const MetricsReport& m) {
  std::cout << nlohmann::json{{"model", model}, {"metrics", to_json(m)}}.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentiment classification benchmark: lexicon + random forest, TF-IDF + Naive Bayes, BiLSTM"};
  app.require_subcommand(1);

  CommonOptions train_opts, eval_opts, compare_opts;
  std::string model_name;
  auto* train = app.add_subcommand("train", "Train one pipeline and score it on the held-out split");
  add_common(train, train_opts);
  train->add_option("--model", model_name, "Pipeline to train")
      ->required()
      ->check(CLI::IsMember({"nb", "lexicon-rf", "bilstm"}));

  std::string artifact;
  auto* evaluate = app.add_subcommand("evaluate", "Score a trained artifact on the test split or on --data");
  add_common(evaluate, eval_opts);
  evaluate->add_option("--artifact", artifact, "Model artifact")->required()->check(CLI::ExistingFile);

  bool compare_json = false;
  auto* compare = app.add_subcommand("compare", "Train all three pipelines on one split and tabulate");
  add_common(compare, compare_opts);
  compare->add_flag("--json", compare_json, "Print the JSON report instead of the table");

  SyntheticCorpusConfig synth_cfg;
  std::string synth_out, synth_lexicon = SENTIBENCH_DEFAULT_DATA_DIR "/lexicon_en.tsv",
                         synth_stopwords = SENTIBENCH_DEFAULT_DATA_DIR "/stopwords_en.txt";
  auto* synth = app.add_subcommand("synth", "Write a planted-signal synthetic corpus as CSV");
  synth->add_option("--out", synth_out, "Output CSV path")->required();
  synth->add_option("--seed", synth_cfg.seed, "Generator seed")->required();
  synth->add_option("--docs", synth_cfg.num_documents, "Number of documents")->capture_default_str();
  synth->add_option("--contrast-fraction", synth_cfg.contrast_fraction, "Share of contrast documents")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--lexicon", synth_lexicon, "Lexicon file")->capture_default_str()->check(CLI::ExistingFile);
  synth->add_option("--stopwords", synth_stopwords, "Stopword file")->capture_default_str()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto c = load_config(train_opts, true);
      const auto kind = parse_model_kind(model_name);
      const auto outcome = run_train(kind, c);
      print_metrics(model_display_name(kind), outcome.metrics);
    } else if (*evaluate) {
      const auto c = load_config(eval_opts, false);
      std::optional<fs::path> data;
      if (!eval_opts.data.empty()) data = fs::absolute(eval_opts.data);
      const auto outcome = run_evaluate(artifact, c, data);
      print_metrics(model_display_name(outcome.kind), outcome.metrics);
    } else if (*compare) {
      const auto c = load_config(compare_opts, true);
      const auto outcome = run_compare(c);
      std::cout << (compare_json ? outcome.report.dump(2) + "\n" : outcome.table);
    } else if (*synth) {
      const Lexicon lex = load_lexicon(synth_lexicon);
      const auto docs = generate_synthetic_corpus(synth_cfg, lex, load_stopwords(synth_stopwords),
                                                  lexicon_words_in_file(synth_lexicon));
      if (const auto parent = fs::absolute(synth_out).parent_path(); !parent.empty()) fs::create_directories(parent);
      write_text_file(synth_out, format_csv_dataset(docs));
      std::cerr << "[synth] wrote " << docs.size() << " documents to " << synth_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
