// SPDX-License-Identifier: Apache-2.0
//
// Dataset loading, text cleaning, tokenization, stopword removal and
// deterministic train/test splitting.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sentibench/error.hpp"
#include "sentibench/label.hpp"
#include "sentibench/rng.hpp"

namespace sentibench {

struct LabeledDocument {
  std::string text;
  SentimentLabel label = SentimentLabel::Neutral;
  std::string source;

  friend bool operator==(const LabeledDocument&, const LabeledDocument&) = default;
};

enum class DatasetFormat { Csv, Jsonl };

inline DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "csv") return DatasetFormat::Csv;
  if (name == "jsonl") return DatasetFormat::Jsonl;
  throw Error("corpus", "unknown dataset format '" + std::string(name) + "' (expected csv or jsonl)");
}

/// Cleaning resources. All three tables are data loaded from files.
struct PreprocessConfig {
  std::unordered_set<std::string> stopwords;
  std::unordered_map<std::string, std::string> contractions;
  std::vector<std::string> emoticons;  // longest first after load
  bool lowercase = true;
};

struct SplitConfig {
  double test_fraction = 0.25;
  std::uint64_t seed = 0;
  bool stratified = true;
};

namespace detail {

inline bool is_ascii_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
inline bool is_ascii_alnum(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}
inline bool is_word_char(char c) noexcept { return is_ascii_alnum(c) || c == '_'; }
inline char ascii_lower(char c) noexcept {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}
inline bool is_clean_char(char c, bool lowercase) noexcept {
  if (c == ' ' || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) return true;
  return !lowercase && c >= 'A' && c <= 'Z';
}

inline std::string rstrip_cr(std::string line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  return line;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.size() > haystack.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < needle.size() && ok; ++j)
      ok = ascii_lower(haystack[i + j]) == needle[j];
    if (ok) return true;
  }
  return false;
}

// Any whitespace-delimited chunk that carries a web address marker is a URL.
inline std::string strip_urls(const std::string& in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (is_ascii_space(in[i])) {
      out += in[i++];
      continue;
    }
    std::size_t j = i;
    while (j < in.size() && !is_ascii_space(in[j])) ++j;
    std::string_view chunk(in.data() + i, j - i);
    if (contains_ci(chunk, "http") || contains_ci(chunk, "www."))
      out += ' ';
    else
      out.append(chunk);
    i = j;
  }
  return out;
}

// Removes `marker` followed by one or more word characters.
inline std::string strip_tagged(const std::string& in, char marker) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] == marker && i + 1 < in.size() && is_word_char(in[i + 1])) {
      std::size_t j = i + 1;
      while (j < in.size() && is_word_char(in[j])) ++j;
      out += ' ';
      i = j;
    } else {
      out += in[i++];
    }
  }
  return out;
}

// Emoticons match only when not glued to letters or digits on either side.
inline std::string strip_emoticons(const std::string& in, const std::vector<std::string>& emoticons) {
  if (emoticons.empty()) return in;
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    bool matched = false;
    if (i == 0 || !is_ascii_alnum(in[i - 1])) {
      for (const auto& emo : emoticons) {
        if (in.compare(i, emo.size(), emo) != 0) continue;
        const std::size_t end = i + emo.size();
        if (end < in.size() && is_ascii_alnum(in[end])) continue;
        out += ' ';
        i = end;
        matched = true;
        break;
      }
    }
    if (!matched) out += in[i++];
  }
  return out;
}

// Typographic apostrophes U+2018/U+2019 become ASCII so contraction keys match.
inline std::string normalize_apostrophes(const std::string& in) {
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (i + 2 < in.size() && static_cast<unsigned char>(in[i]) == 0xE2 &&
        static_cast<unsigned char>(in[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(in[i + 2]) == 0x98 || static_cast<unsigned char>(in[i + 2]) == 0x99)) {
      out += '\'';
      i += 2;
    } else {
      out += in[i];
    }
  }
  return out;
}

inline std::string expand_contractions(const std::string& in,
                                       const std::unordered_map<std::string, std::string>& map) {
  if (map.empty()) return in;
  auto is_run_char = [](char c) { return is_ascii_alnum(c) || c == '\''; };
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (!is_run_char(in[i])) {
      out += in[i++];
      continue;
    }
    std::size_t j = i;
    while (j < in.size() && is_run_char(in[j])) ++j;
    std::string run = in.substr(i, j - i);
    if (auto it = map.find(run); it != map.end()) {
      out += it->second;
    } else {
      // Retry with quote marks around the word removed: "'can't'".
      std::size_t a = 0, b = run.size();
      while (a < b && run[a] == '\'') ++a;
      while (b > a && run[b - 1] == '\'') --b;
      auto inner = map.find(run.substr(a, b - a));
      if ((a > 0 || b < run.size()) && inner != map.end()) {
        out += ' ';
        out += inner->second;
        out += ' ';
      } else {
        out += run;
      }
    }
    i = j;
  }
  return out;
}

}  // namespace detail

/// Cleans raw post text. Rule order: URLs, mentions, hashtags, emoticons,
/// lowercase, contraction expansion, special-character removal, whitespace
/// collapse. Removed spans are replaced by a space so neighbours never fuse.
inline std::string clean_text(const std::string& raw, const PreprocessConfig& config) {
  std::string s = detail::strip_urls(raw);
  s = detail::strip_tagged(s, '@');
  s = detail::strip_tagged(s, '#');
  s = detail::strip_emoticons(s, config.emoticons);
  s = detail::normalize_apostrophes(s);
  if (config.lowercase)
    std::transform(s.begin(), s.end(), s.begin(), detail::ascii_lower);
  s = detail::expand_contractions(s, config.contractions);

  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (!detail::is_clean_char(c, config.lowercase) || c == ' ') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

inline std::vector<std::string> tokenize(std::string_view clean) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < clean.size()) {
    while (i < clean.size() && detail::is_ascii_space(clean[i])) ++i;
    std::size_t j = i;
    while (j < clean.size() && !detail::is_ascii_space(clean[j])) ++j;
    if (j > i) tokens.emplace_back(clean.substr(i, j - i));
    i = j;
  }
  return tokens;
}

inline std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                                 const PreprocessConfig& config) {
  std::vector<std::string> kept;
  kept.reserve(tokens.size());
  for (const auto& t : tokens)
    if (!config.stopwords.contains(t)) kept.push_back(t);
  return kept;
}

/// clean -> tokenize -> optional stopword removal.
inline std::vector<std::string> preprocess(const std::string& raw, const PreprocessConfig& config,
                                           bool drop_stopwords = true) {
  auto tokens = tokenize(clean_text(raw, config));
  return drop_stopwords ? remove_stopwords(tokens, config) : tokens;
}

// ---------------------------------------------------------------------------
// Resource files

inline std::vector<std::string> read_lines(const std::string& path, const char* module) {
  std::ifstream in(path);
  if (!in) throw Error(module, "cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(detail::rstrip_cr(std::move(line)));
  return lines;
}

inline std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::unordered_set<std::string> words;
  for (const auto& line : read_lines(path, "corpus")) {
    if (line.empty() || line[0] == '#') continue;
    std::string w = line;
    std::transform(w.begin(), w.end(), w.begin(), detail::ascii_lower);
    words.insert(std::move(w));
  }
  return words;
}

/// `contraction<TAB>expansion` per line. Keys must contain a character that
/// cannot survive cleaning (typically an apostrophe) and expansions must be
/// plain lowercase words, which keeps clean_text idempotent.
inline std::unordered_map<std::string, std::string> load_contractions(const std::string& path) {
  std::unordered_map<std::string, std::string> map;
  const auto lines = read_lines(path, "corpus");
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto& line = lines[n];
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    const std::string where = path + ":" + std::to_string(n + 1);
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      throw Error("corpus", where + ": expected 'contraction<TAB>expansion'");
    std::string key = line.substr(0, tab);
    std::string value = line.substr(tab + 1);
    std::transform(key.begin(), key.end(), key.begin(), detail::ascii_lower);
    if (std::all_of(key.begin(), key.end(), [](char c) { return detail::is_clean_char(c, true); }))
      throw Error("corpus", where + ": contraction '" + key + "' has no punctuation");
    if (!std::all_of(value.begin(), value.end(), [](char c) { return detail::is_clean_char(c, true); }))
      throw Error("corpus", where + ": expansion '" + value + "' must be lowercase words");
    map[key] = value;
  }
  return map;
}

inline std::vector<std::string> load_emoticons(const std::string& path) {
  std::vector<std::string> emoticons;
  const auto lines = read_lines(path, "corpus");
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto& e = lines[n];
    if (e.empty()) continue;
    if (std::all_of(e.begin(), e.end(), [](char c) { return detail::is_ascii_alnum(c) || c == ' '; }))
      throw Error("corpus", path + ":" + std::to_string(n + 1) + ": emoticon '" + e +
                                "' must contain a symbol");
    emoticons.push_back(e);
  }
  std::stable_sort(emoticons.begin(), emoticons.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  emoticons.erase(std::unique(emoticons.begin(), emoticons.end()), emoticons.end());
  return emoticons;
}

inline PreprocessConfig load_preprocess_config(const std::string& stopwords_path,
                                               const std::string& contractions_path,
                                               const std::string& emoticons_path) {
  PreprocessConfig config;
  config.stopwords = load_stopwords(stopwords_path);
  config.contractions = load_contractions(contractions_path);
  config.emoticons = load_emoticons(emoticons_path);
  return config;
}

// ---------------------------------------------------------------------------
// Dataset loading

namespace detail {

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based physical line where the record starts
};

// RFC 4180: quoted fields may hold commas, doubled quotes and newlines.
inline std::vector<CsvRecord> parse_csv(const std::string& data, const std::string& path) {
  std::vector<CsvRecord> records;
  std::size_t i = 0, line = 1;
  if (data.size() >= 3 && data.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
  while (i < data.size()) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool in_quotes = false, quoted = false, done = false;
    while (!done) {
      if (i >= data.size()) {
        if (in_quotes) throw Error("corpus", path + ":" + std::to_string(rec.line) + ": unterminated quoted field");
        rec.fields.push_back(std::move(field));
        break;
      }
      char c = data[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < data.size() && data[i + 1] == '"') {
            field += '"';
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field += c;
          ++i;
        }
        continue;
      }
      switch (c) {
        case '"':
          if (!field.empty() || quoted)
            throw Error("corpus", path + ":" + std::to_string(line) + ": stray quote in field");
          in_quotes = quoted = true;
          ++i;
          break;
        case ',':
          rec.fields.push_back(std::move(field));
          field.clear();
          quoted = false;
          ++i;
          break;
        case '\r':
          ++i;
          break;
        case '\n':
          rec.fields.push_back(std::move(field));
          ++line;
          ++i;
          done = true;
          break;
        default:
          if (quoted)
            throw Error("corpus", path + ":" + std::to_string(line) + ": text after closing quote");
          field += c;
          ++i;
      }
    }
    const bool blank = rec.fields.size() == 1 && rec.fields[0].empty();
    if (!blank) records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<LabeledDocument> load_csv(const std::string& data, const std::string& path) {
  auto records = parse_csv(data, path);
  std::vector<LabeledDocument> docs;
  if (records.empty()) return docs;
  const auto& header = records.front().fields;
  std::ptrdiff_t text_col = -1, label_col = -1, source_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "text") text_col = static_cast<std::ptrdiff_t>(c);
    else if (header[c] == "label") label_col = static_cast<std::ptrdiff_t>(c);
    else if (header[c] == "source") source_col = static_cast<std::ptrdiff_t>(c);
  }
  if (text_col < 0 || label_col < 0)
    throw Error("corpus", path + ":1: header must name 'text' and 'label' columns");
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::string where = path + ":" + std::to_string(rec.line);
    if (rec.fields.size() != header.size())
      throw Error("corpus", where + ": expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(rec.fields.size()));
    auto label = parse_label(rec.fields[static_cast<std::size_t>(label_col)]);
    if (!label)
      throw Error("corpus", where + ": label '" + rec.fields[static_cast<std::size_t>(label_col)] +
                                "' not in {-1,0,1}");
    LabeledDocument doc;
    doc.text = rec.fields[static_cast<std::size_t>(text_col)];
    doc.label = *label;
    if (source_col >= 0) doc.source = rec.fields[static_cast<std::size_t>(source_col)];
    docs.push_back(std::move(doc));
  }
  return docs;
}

inline std::vector<LabeledDocument> load_jsonl(const std::string& data, const std::string& path) {
  std::vector<LabeledDocument> docs;
  std::istringstream in(data);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = rstrip_cr(std::move(line));
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(n);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("corpus", where + ": invalid JSON (" + e.what() + ")");
    }
    if (!rec.is_object() || !rec.contains("text") || !rec["text"].is_string() || !rec.contains("label"))
      throw Error("corpus", where + ": record needs a string 'text' and a 'label'");
    std::optional<SentimentLabel> label;
    const auto& lj = rec["label"];
    if (lj.is_number_integer()) label = label_from_int(lj.get<long long>());
    else if (lj.is_string()) label = parse_label(lj.get<std::string>());
    if (!label) throw Error("corpus", where + ": label " + lj.dump() + " not in {-1,0,1}");
    LabeledDocument doc;
    doc.text = rec["text"].get<std::string>();
    doc.label = *label;
    if (rec.contains("source") && rec["source"].is_string()) doc.source = rec["source"].get<std::string>();
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace detail

inline std::string read_file_bytes(const std::string& path, const char* module) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(module, "cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline std::vector<LabeledDocument> load_dataset(const std::string& path, DatasetFormat format) {
  const std::string data = read_file_bytes(path, "corpus");
  return format == DatasetFormat::Csv ? detail::load_csv(data, path) : detail::load_jsonl(data, path);
}

/// RFC 4180 serialisation with a text,label,source header; round-trips
/// through load_dataset.
inline std::string format_csv_dataset(const std::vector<LabeledDocument>& docs) {
  auto quote = [](const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string q = "\"";
    for (char c : field) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  };
  std::string out = "text,label,source\n";
  for (const auto& d : docs) out += quote(d.text) + ',' + to_string(d.label) + ',' + quote(d.source) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Deterministic partition of N labelled items. Stratified mode apportions
/// round(fraction * N) test slots across classes by largest remainder (ties
/// to the smaller label) and picks members with a per-class keyed shuffle.
inline SplitIndices split_indices(const std::vector<SentimentLabel>& labels, const SplitConfig& config) {
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0))
    throw Error("corpus", "test_fraction must lie strictly between 0 and 1");
  const std::size_t n = labels.size();
  const auto total_test = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(n)));
  std::vector<bool> in_test(n, false);

  if (!config.stratified) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    CounterRng rng(config.seed, {0x53504c54ULL, 0xffULL});
    rng.shuffle(order);
    for (std::size_t k = 0; k < total_test; ++k) in_test[order[k]] = true;
  } else {
    std::array<std::vector<std::size_t>, kNumClasses> members;
    for (std::size_t i = 0; i < n; ++i) members[class_index(labels[i])].push_back(i);
    for (std::size_t c = 0; c < kNumClasses; ++c)
      if (members[c].empty())
        throw Error("corpus", "stratified split: class " + to_string(label_from_index(c)) + " has no documents");

    std::array<std::size_t, kNumClasses> quota{};
    std::array<double, kNumClasses> remainder{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const double exact = config.test_fraction * static_cast<double>(members[c].size());
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      remainder[c] = exact - static_cast<double>(quota[c]);
      assigned += quota[c];
    }
    std::array<std::size_t, kNumClasses> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < total_test && k < kNumClasses; ++k, ++assigned) ++quota[order[k]];

    for (std::size_t c = 0; c < kNumClasses; ++c) {
      auto shuffled = members[c];
      CounterRng rng(config.seed, {0x53504c54ULL, c});
      rng.shuffle(shuffled);
      for (std::size_t k = 0; k < quota[c]; ++k) in_test[shuffled[k]] = true;
    }
  }

  SplitIndices out;
  for (std::size_t i = 0; i < n; ++i) (in_test[i] ? out.test : out.train).push_back(i);
  return out;
}

inline std::pair<std::vector<LabeledDocument>, std::vector<LabeledDocument>> split_dataset(
    const std::vector<LabeledDocument>& docs, const SplitConfig& config) {
  std::vector<SentimentLabel> labels;
  labels.reserve(docs.size());
  for (const auto& d : docs) labels.push_back(d.label);
  const auto idx = split_indices(labels, config);
  std::pair<std::vector<LabeledDocument>, std::vector<LabeledDocument>> out;
  for (auto i : idx.train) out.first.push_back(docs[i]);
  for (auto i : idx.test) out.second.push_back(docs[i]);
  return out;
}

}  // namespace sentibench
