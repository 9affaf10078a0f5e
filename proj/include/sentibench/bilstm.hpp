// SPDX-License-Identifier: Apache-2.0
//
// Bidirectional LSTM sequence classifier trained with backpropagation
// through time and momentum SGD.
//
// Layout per direction: gate rows are stacked [i; f; g; o], each H rows.
//   i = sigm(W_i x + U_i h + b_i)   f = sigm(W_f x + U_f h + b_f)
//   g = tanh(W_g x + U_g h + b_g)   o = sigm(W_o x + U_o h + b_o)
//   c = f * c_prev + i * g          h = o * tanh(c)
// The forward direction reads positions 0..L-1, the backward direction
// L-1..0; the sequence representation is [h_fwd(last) ; h_bwd(last)].
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sentibench/error.hpp"
#include "sentibench/hash.hpp"
#include "sentibench/label.hpp"
#include "sentibench/rng.hpp"

namespace sentibench {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Sequence = std::vector<std::int32_t>;

// ---------------------------------------------------------------------------
// Tokenizer

/// Frequency-ranked word index. Index 0 is reserved for padding.
class SeqTokenizer {
 public:
  SeqTokenizer() = default;

  /// `words[k]` receives index k + 1.
  explicit SeqTokenizer(std::vector<std::string> words) : words_(std::move(words)) {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (!index_.emplace(words_[k], static_cast<std::int32_t>(k + 1)).second)
        throw Error("bilstm", "duplicate tokenizer word '" + words_[k] + "'");
  }

  std::size_t vocab_size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  std::optional<std::int32_t> index_of(const std::string& w) const {
    auto it = index_.find(w);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::string fingerprint() const {
    Sha256 h;
    for (const auto& w : words_) h.update(w).update(std::string_view("\n", 1));
    return h.hex();
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Ranks words by corpus frequency, ties by first occurrence, keeping at
/// most `max_vocab`.
inline SeqTokenizer fit_tokenizer(const std::vector<std::vector<std::string>>& docs, std::size_t max_vocab) {
  if (docs.empty()) throw Error("bilstm", "cannot fit a tokenizer on an empty corpus");
  struct Stat {
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Stat> stats;
  std::size_t position = 0;
  for (const auto& doc : docs)
    for (const auto& w : doc) {
      auto [it, inserted] = stats.try_emplace(w);
      if (inserted) it->second.first = position;
      ++it->second.count;
      ++position;
    }
  std::vector<std::pair<std::string, Stat>> ranked(stats.begin(), stats.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second.count != b.second.count ? a.second.count > b.second.count : a.second.first < b.second.first;
  });
  if (ranked.size() > max_vocab) ranked.resize(max_vocab);
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [w, _] : ranked) words.push_back(std::move(w));
  return SeqTokenizer(std::move(words));
}

/// Known words to indices, unknown words dropped, truncated to the first
/// `maxlen` indices, then zero-padded at the end.
inline Sequence encode_and_pad(const std::vector<std::string>& doc, const SeqTokenizer& tok, std::size_t maxlen) {
  if (maxlen < 1) throw Error("bilstm", "sequence length must be >= 1");
  Sequence seq;
  seq.reserve(maxlen);
  for (const auto& w : doc) {
    if (seq.size() == maxlen) break;
    if (auto idx = tok.index_of(w)) seq.push_back(*idx);
  }
  seq.resize(maxlen, 0);
  return seq;
}

// ---------------------------------------------------------------------------
// Parameters

struct BiLstmDims {
  std::size_t vocab_size = 0;  // words, excluding padding
  std::size_t embedding = 64;
  std::size_t hidden = 64;
  std::size_t seq_len = 48;
};

struct LstmParams {
  RowMatrix w;        // 4H x E
  RowMatrix u;        // 4H x H
  Eigen::VectorXd b;  // 4H

  void resize(std::size_t e, std::size_t h) {
    w = RowMatrix::Zero(static_cast<Eigen::Index>(4 * h), static_cast<Eigen::Index>(e));
    u = RowMatrix::Zero(static_cast<Eigen::Index>(4 * h), static_cast<Eigen::Index>(h));
    b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(4 * h));
  }
};

/// Model parameters. The same type holds gradients and momentum buffers.
struct BiLstmModel {
  BiLstmDims dims;
  RowMatrix embedding;  // (V+1) x E, row 0 is padding
  LstmParams forward;
  LstmParams backward;
  RowMatrix head_w;        // 3 x 2H
  Eigen::VectorXd head_b;  // 3

  static BiLstmModel zeros(const BiLstmDims& d) {
    BiLstmModel m;
    m.dims = d;
    const auto e = static_cast<Eigen::Index>(d.embedding), h = static_cast<Eigen::Index>(d.hidden);
    m.embedding = RowMatrix::Zero(static_cast<Eigen::Index>(d.vocab_size + 1), e);
    m.forward.resize(d.embedding, d.hidden);
    m.backward.resize(d.embedding, d.hidden);
    m.head_w = RowMatrix::Zero(kNumClasses, 2 * h);
    m.head_b = Eigen::VectorXd::Zero(kNumClasses);
    return m;
  }

  /// Named views over every tensor in a fixed order (row-major storage).
  std::vector<std::pair<std::string, std::span<double>>> tensors() {
    auto view = [](auto& t) { return std::span<double>(t.data(), static_cast<std::size_t>(t.size())); };
    return {{"embedding", view(embedding)},   {"forward.w", view(forward.w)},
            {"forward.u", view(forward.u)},   {"forward.b", view(forward.b)},
            {"backward.w", view(backward.w)}, {"backward.u", view(backward.u)},
            {"backward.b", view(backward.b)}, {"head.w", view(head_w)},
            {"head.b", view(head_b)}};
  }

  std::vector<std::pair<std::string, std::span<const double>>> tensors() const {
    auto all = const_cast<BiLstmModel*>(this)->tensors();
    std::vector<std::pair<std::string, std::span<const double>>> out;
    for (auto& [n, s] : all) out.emplace_back(n, s);
    return out;
  }
};

inline void fill_glorot(std::span<double> values, std::size_t fan_in, std::size_t fan_out, CounterRng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : values) v = rng.uniform(-limit, limit);
}

/// Glorot-uniform weights, zero biases except forget gate = 1, zero padding row.
inline BiLstmModel init_model(const BiLstmDims& d, std::uint64_t seed) {
  if (d.embedding < 1 || d.hidden < 1 || d.seq_len < 1) throw Error("bilstm", "model dimensions must be >= 1");
  BiLstmModel m = BiLstmModel::zeros(d);
  CounterRng rng(seed, {0x696e6974ULL});
  const std::size_t e = d.embedding, h = d.hidden;
  fill_glorot({m.embedding.data(), static_cast<std::size_t>(m.embedding.size())}, d.vocab_size + 1, e, rng);
  m.embedding.row(0).setZero();
  for (LstmParams* p : {&m.forward, &m.backward}) {
    fill_glorot({p->w.data(), static_cast<std::size_t>(p->w.size())}, e, 4 * h, rng);
    fill_glorot({p->u.data(), static_cast<std::size_t>(p->u.size())}, h, 4 * h, rng);
    p->b.segment(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(h)).setConstant(1.0);
  }
  fill_glorot({m.head_w.data(), static_cast<std::size_t>(m.head_w.size())}, 2 * h, kNumClasses, rng);
  return m;
}

// ---------------------------------------------------------------------------
// Forward pass

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

/// Activations of one time step for a batch (columns = examples).
struct LstmStepCache {
  Eigen::MatrixXd gates;   // 4H x B, activated [i; f; g; o]
  Eigen::MatrixXd c;       // H x B
  Eigen::MatrixXd tanh_c;  // H x B
  Eigen::MatrixXd h;       // H x B
};

inline void lstm_step(const LstmParams& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev,
                      const Eigen::MatrixXd& c_prev, LstmStepCache& out) {
  const Eigen::Index h = p.u.cols();
  out.gates.noalias() = p.w * x;
  out.gates.noalias() += p.u * h_prev;
  out.gates.colwise() += p.b;
  auto sig = [](double z) { return detail::sigmoid(z); };
  auto th = [](double z) { return std::tanh(z); };
  out.gates.topRows(2 * h) = out.gates.topRows(2 * h).unaryExpr(sig);
  out.gates.middleRows(2 * h, h) = out.gates.middleRows(2 * h, h).unaryExpr(th);
  out.gates.bottomRows(h) = out.gates.bottomRows(h).unaryExpr(sig);
  out.c = out.gates.middleRows(h, h).cwiseProduct(c_prev) +
          out.gates.topRows(h).cwiseProduct(out.gates.middleRows(2 * h, h));
  out.tanh_c = out.c.unaryExpr(th);
  out.h = out.gates.bottomRows(h).cwiseProduct(out.tanh_c);
}

/// Single-vector LSTM cell: returns (h, c).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> lstm_cell_step(const Eigen::VectorXd& x,
                                                                  const Eigen::VectorXd& h_prev,
                                                                  const Eigen::VectorXd& c_prev,
                                                                  const LstmParams& params) {
  LstmStepCache cache;
  lstm_step(params, x, h_prev, c_prev, cache);
  return {cache.h.col(0), cache.c.col(0)};
}

struct DirectionCache {
  std::vector<Eigen::MatrixXd> inputs;  // E x B per processed step
  std::vector<LstmStepCache> steps;
};

struct ForwardCache {
  DirectionCache forward;
  DirectionCache backward;
  Eigen::MatrixXd representation;  // 2H x B
};

struct ForwardResult {
  Eigen::MatrixXd probabilities;  // 3 x B, column per example
  ForwardCache cache;
};

namespace detail {

inline Eigen::MatrixXd gather_embeddings(const BiLstmModel& m, std::span<const Sequence> batch, std::size_t pos) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(m.dims.embedding), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto id = batch[b][pos];
    if (id < 0 || static_cast<std::size_t>(id) > m.dims.vocab_size)
      throw Error("bilstm", "token index " + std::to_string(id) + " outside the embedding table");
    x.col(static_cast<Eigen::Index>(b)) = m.embedding.row(id).transpose();
  }
  return x;
}

inline void run_direction(const BiLstmModel& m, const LstmParams& p, std::span<const Sequence> batch,
                          bool reverse, DirectionCache& cache) {
  const std::size_t len = m.dims.seq_len;
  const auto h = static_cast<Eigen::Index>(m.dims.hidden), bsz = static_cast<Eigen::Index>(batch.size());
  cache.inputs.resize(len);
  cache.steps.resize(len);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(h, bsz);
  for (std::size_t t = 0; t < len; ++t) {
    const std::size_t pos = reverse ? len - 1 - t : t;
    cache.inputs[t] = gather_embeddings(m, batch, pos);
    const auto& h_prev = t == 0 ? zero : cache.steps[t - 1].h;
    const auto& c_prev = t == 0 ? zero : cache.steps[t - 1].c;
    lstm_step(p, cache.inputs[t], h_prev, c_prev, cache.steps[t]);
  }
}

inline Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    const double mx = logits.col(b).maxCoeff();
    p.col(b) = (logits.col(b).array() - mx).exp().matrix();
    p.col(b) /= p.col(b).sum();
  }
  return p;
}

}  // namespace detail

inline ForwardResult model_forward(const BiLstmModel& m, std::span<const Sequence> batch) {
  if (batch.empty()) throw Error("bilstm", "empty batch");
  for (const auto& s : batch)
    if (s.size() != m.dims.seq_len)
      throw Error("bilstm", "sequence of length " + std::to_string(s.size()) + ", model expects " +
                                std::to_string(m.dims.seq_len));
  ForwardResult r;
  detail::run_direction(m, m.forward, batch, false, r.cache.forward);
  detail::run_direction(m, m.backward, batch, true, r.cache.backward);
  const auto h = static_cast<Eigen::Index>(m.dims.hidden);
  r.cache.representation.resize(2 * h, static_cast<Eigen::Index>(batch.size()));
  r.cache.representation.topRows(h) = r.cache.forward.steps.back().h;
  r.cache.representation.bottomRows(h) = r.cache.backward.steps.back().h;
  Eigen::MatrixXd logits = m.head_w * r.cache.representation;
  logits.colwise() += m.head_b;
  r.probabilities = detail::softmax_columns(logits);
  return r;
}

// ---------------------------------------------------------------------------
// Loss and gradients

struct LossAndGradients {
  double loss = 0.0;
  BiLstmModel gradients;
};

namespace detail {

// BPTT through one direction. Accumulates into `grad` and returns dL/dx per
// processed step.
inline std::vector<Eigen::MatrixXd> direction_backward(const LstmParams& p, const DirectionCache& cache,
                                                       const Eigen::MatrixXd& dh_final, LstmParams& grad) {
  const std::size_t len = cache.steps.size();
  const Eigen::Index h = p.u.cols(), bsz = dh_final.cols();
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(h, bsz);
  std::vector<Eigen::MatrixXd> dx(len);
  Eigen::MatrixXd dh = dh_final;
  Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(h, bsz);
  Eigen::MatrixXd dz(4 * h, bsz);
  for (std::size_t k = len; k-- > 0;) {
    const auto& s = cache.steps[k];
    const auto& h_prev = k == 0 ? zero : cache.steps[k - 1].h;
    const auto& c_prev = k == 0 ? zero : cache.steps[k - 1].c;
    const auto i = s.gates.topRows(h).array();
    const auto f = s.gates.middleRows(h, h).array();
    const auto g = s.gates.middleRows(2 * h, h).array();
    const auto o = s.gates.bottomRows(h).array();
    const auto tc = s.tanh_c.array();

    dc.array() += dh.array() * o * (1.0 - tc.square());
    dz.topRows(h).array() = dc.array() * g * i * (1.0 - i);
    dz.middleRows(h, h).array() = dc.array() * c_prev.array() * f * (1.0 - f);
    dz.middleRows(2 * h, h).array() = dc.array() * i * (1.0 - g.square());
    dz.bottomRows(h).array() = dh.array() * tc * o * (1.0 - o);

    grad.w.noalias() += dz * cache.inputs[k].transpose();
    grad.u.noalias() += dz * h_prev.transpose();
    grad.b += dz.rowwise().sum();
    dx[k].noalias() = p.w.transpose() * dz;
    dh.noalias() = p.u.transpose() * dz;
    dc = dc.cwiseProduct(s.gates.middleRows(h, h));
  }
  return dx;
}

}  // namespace detail

/// Mean categorical cross-entropy over the batch and its exact gradient.
/// The padding embedding row's gradient is forced to zero.
inline LossAndGradients loss_and_gradients(const BiLstmModel& m, std::span<const Sequence> batch,
                                           std::span<const SentimentLabel> labels) {
  if (labels.size() != batch.size()) throw Error("bilstm", "batch and label counts differ");
  ForwardResult fr = model_forward(m, batch);
  const auto bsz = static_cast<Eigen::Index>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(bsz);

  LossAndGradients out;
  out.gradients = BiLstmModel::zeros(m.dims);
  auto& g = out.gradients;

  Eigen::MatrixXd dlogits = fr.probabilities;
  for (Eigen::Index b = 0; b < bsz; ++b) {
    const auto c = static_cast<Eigen::Index>(class_index(labels[static_cast<std::size_t>(b)]));
    out.loss -= std::log(fr.probabilities(c, b));
    dlogits(c, b) -= 1.0;
  }
  out.loss *= inv_b;
  dlogits *= inv_b;

  g.head_w.noalias() = dlogits * fr.cache.representation.transpose();
  g.head_b = dlogits.rowwise().sum();
  const Eigen::MatrixXd drep = m.head_w.transpose() * dlogits;
  const auto h = static_cast<Eigen::Index>(m.dims.hidden);

  const auto dx_fwd = detail::direction_backward(m.forward, fr.cache.forward, drep.topRows(h), g.forward);
  const auto dx_bwd = detail::direction_backward(m.backward, fr.cache.backward, drep.bottomRows(h), g.backward);

  const std::size_t len = m.dims.seq_len;
  for (std::size_t t = 0; t < len; ++t) {
    for (Eigen::Index b = 0; b < bsz; ++b) {
      const auto& seq = batch[static_cast<std::size_t>(b)];
      g.embedding.row(seq[t]) += dx_fwd[t].col(b).transpose();
      g.embedding.row(seq[len - 1 - t]) += dx_bwd[t].col(b).transpose();
    }
  }
  g.embedding.row(0).setZero();
  return out;
}

// ---------------------------------------------------------------------------
// Optimiser

struct TrainConfig {
  std::size_t epochs = 20;
  double learning_rate = 0.1;
  double momentum = 0.8;
  std::size_t batch_size = 64;
  double gradient_clip_norm = 5.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw Error("bilstm", "learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw Error("bilstm", "momentum must lie in [0, 1)");
    if (batch_size < 1) throw Error("bilstm", "batch_size must be >= 1");
    if (!(gradient_clip_norm > 0.0)) throw Error("bilstm", "gradient_clip_norm must be positive");
  }
};

inline double global_norm(const BiLstmModel& grads) {
  double sq = 0.0;
  for (const auto& [_, t] : grads.tensors())
    for (double v : t) sq += v * v;
  return std::sqrt(sq);
}

/// Clips the global gradient norm, then v <- mu v + g and theta <- theta - eta v.
/// Returns the pre-clipping gradient norm.
inline double sgd_momentum_step(BiLstmModel& params, BiLstmModel grads, BiLstmModel& velocity,
                                const TrainConfig& config) {
  const double norm = global_norm(grads);
  const double scale = norm > config.gradient_clip_norm ? config.gradient_clip_norm / norm : 1.0;
  auto pt = params.tensors();
  auto gt = grads.tensors();
  auto vt = velocity.tensors();
  for (std::size_t k = 0; k < pt.size(); ++k) {
    auto& p = pt[k].second;
    const auto& gr = gt[k].second;
    auto& v = vt[k].second;
    if (p.size() != gr.size() || p.size() != v.size()) throw Error("bilstm", "tensor shape mismatch in update");
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = config.momentum * v[i] + scale * gr[i];
      p[i] -= config.learning_rate * v[i];
    }
  }
  params.embedding.row(0).setZero();
  velocity.embedding.row(0).setZero();
  return norm;
}

// ---------------------------------------------------------------------------
// Training

struct EncodedDataset {
  std::vector<Sequence> sequences;
  std::vector<SentimentLabel> labels;

  std::size_t size() const noexcept { return sequences.size(); }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_loss = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainResult {
  BiLstmModel model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

inline std::vector<SentimentLabel> model_predict(const BiLstmModel& m, std::span<const Sequence> seqs,
                                                 std::size_t chunk = 256) {
  std::vector<SentimentLabel> out;
  out.reserve(seqs.size());
  for (std::size_t start = 0; start < seqs.size(); start += chunk) {
    const auto n = std::min(chunk, seqs.size() - start);
    const auto fr = model_forward(m, seqs.subspan(start, n));
    for (Eigen::Index b = 0; b < fr.probabilities.cols(); ++b) out.push_back(argmax_label(fr.probabilities.col(b)));
  }
  return out;
}

/// Mean loss and accuracy over a dataset, evaluated in fixed-size chunks.
inline std::pair<double, double> evaluate_model(const BiLstmModel& m, const EncodedDataset& data,
                                                std::size_t chunk = 256) {
  if (data.size() == 0) return {0.0, 0.0};
  double loss = 0.0;
  std::size_t correct = 0;
  const std::span<const Sequence> seqs(data.sequences);
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const auto n = std::min(chunk, data.size() - start);
    const auto fr = model_forward(m, seqs.subspan(start, n));
    for (std::size_t b = 0; b < n; ++b) {
      const auto col = fr.probabilities.col(static_cast<Eigen::Index>(b));
      const auto gold = data.labels[start + b];
      loss -= std::log(col(static_cast<Eigen::Index>(class_index(gold))));
      if (argmax_label(col) == gold) ++correct;
    }
  }
  const double n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(correct) / n};
}

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Seeded per-epoch shuffle, mini-batches (final partial batch kept), and
/// selection of the epoch with the best validation accuracy (earliest on
/// ties; the last epoch when no validation data is given).
inline TrainResult train_model(const EncodedDataset& train, const EncodedDataset& validation,
                               const BiLstmDims& dims, const TrainConfig& config,
                               const EpochCallback& on_epoch = {}) {
  config.validate();
  if (train.size() == 0) throw Error("bilstm", "empty training set");
  if (train.labels.size() != train.size() || validation.labels.size() != validation.size())
    throw Error("bilstm", "sequence and label counts differ");
  std::array<bool, kNumClasses> seen{};
  for (auto l : train.labels) seen[class_index(l)] = true;
  for (std::size_t c = 0; c < kNumClasses; ++c)
    if (!seen[c]) throw Error("bilstm", "class " + to_string(label_from_index(c)) + " absent from training data");

  TrainResult result;
  BiLstmModel model = init_model(dims, config.seed);
  BiLstmModel velocity = BiLstmModel::zeros(dims);
  double best_accuracy = -1.0;

  std::vector<std::size_t> order(train.size());
  std::vector<Sequence> batch_seqs;
  std::vector<SentimentLabel> batch_labels;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    CounterRng rng(config.seed, {0x65706f63ULL, epoch});
    rng.shuffle(order);
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const auto n = std::min(config.batch_size, order.size() - start);
      batch_seqs.clear();
      batch_labels.clear();
      for (std::size_t k = 0; k < n; ++k) {
        batch_seqs.push_back(train.sequences[order[start + k]]);
        batch_labels.push_back(train.labels[order[start + k]]);
      }
      auto lg = loss_and_gradients(model, batch_seqs, batch_labels);
      if (!std::isfinite(lg.loss))
        throw Error("bilstm", "training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                  std::to_string(batch_no + 1));
      sgd_momentum_step(model, std::move(lg.gradients), velocity, config);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    std::tie(rec.train_loss, rec.train_accuracy) = evaluate_model(model, train);
    std::tie(rec.validation_loss, rec.validation_accuracy) = evaluate_model(model, validation);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    const double score = validation.size() > 0 ? rec.validation_accuracy : 0.0;
    if (validation.size() == 0 || score > best_accuracy) {
      best_accuracy = score;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  if (config.epochs == 0) result.model = model;
  return result;
}

// ---------------------------------------------------------------------------
// Binary artifact: magic, version, JSON header, then every tensor as
// (rows, cols) followed by row-major little-endian float64 values.

inline constexpr char kBiLstmMagic[8] = {'S', 'B', 'B', 'I', 'L', 'S', 'T', 'M'};
inline constexpr std::uint32_t kBiLstmFormatVersion = 1;

namespace detail {

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error("bilstm", "truncated model artifact");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline std::pair<std::uint64_t, std::uint64_t> tensor_shape(const BiLstmModel& m, const std::string& name) {
  auto rc = [](const auto& t) { return std::pair<std::uint64_t, std::uint64_t>(t.rows(), t.cols()); };
  if (name == "embedding") return rc(m.embedding);
  if (name == "forward.w") return rc(m.forward.w);
  if (name == "forward.u") return rc(m.forward.u);
  if (name == "forward.b") return rc(m.forward.b);
  if (name == "backward.w") return rc(m.backward.w);
  if (name == "backward.u") return rc(m.backward.u);
  if (name == "backward.b") return rc(m.backward.b);
  if (name == "head.w") return rc(m.head_w);
  return rc(m.head_b);
}

}  // namespace detail

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"batch_size", c.batch_size},
          {"gradient_clip_norm", c.gradient_clip_norm},
          {"seed", c.seed}};
}

struct BiLstmArtifact {
  BiLstmModel model;
  SeqTokenizer tokenizer;
  TrainConfig train_config;
  std::size_t best_epoch = 0;
};

inline void save_bilstm(const std::string& path, const BiLstmArtifact& a) {
  const auto& d = a.model.dims;
  if (a.tokenizer.vocab_size() != d.vocab_size) throw Error("bilstm", "tokenizer does not match model vocabulary");
  nlohmann::json header = {{"format", "sentibench.bilstm"},
                           {"dims",
                            {{"vocab_size", d.vocab_size},
                             {"embedding", d.embedding},
                             {"hidden", d.hidden},
                             {"seq_len", d.seq_len}}},
                           {"tokenizer", a.tokenizer.words()},
                           {"tokenizer_hash", a.tokenizer.fingerprint()},
                           {"train_config", to_json(a.train_config)},
                           {"best_epoch", a.best_epoch}};
  const std::string hdr = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("bilstm", "cannot write '" + path + "'");
  out.write(kBiLstmMagic, sizeof kBiLstmMagic);
  detail::write_le<std::uint32_t>(out, kBiLstmFormatVersion);
  detail::write_le<std::uint64_t>(out, hdr.size());
  out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
  const auto tensors = a.model.tensors();
  detail::write_le<std::uint64_t>(out, tensors.size());
  for (const auto& [name, values] : tensors) {
    const auto [rows, cols] = detail::tensor_shape(a.model, name);
    detail::write_le<std::uint64_t>(out, rows);
    detail::write_le<std::uint64_t>(out, cols);
    for (double v : values) detail::write_le<double>(out, v);
  }
  if (!out) throw Error("bilstm", "write failed for '" + path + "'");
}

inline bool is_bilstm_artifact(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[8] = {};
  return in.read(magic, sizeof magic) && std::memcmp(magic, kBiLstmMagic, sizeof magic) == 0;
}

inline BiLstmArtifact load_bilstm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("bilstm", "cannot open '" + path + "'");
  char magic[8] = {};
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kBiLstmMagic, sizeof magic) != 0)
    throw Error("bilstm", "'" + path + "' is not a BiLSTM artifact");
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kBiLstmFormatVersion)
    throw Error("bilstm", "unsupported artifact version " + std::to_string(version));
  const auto hdr_len = detail::read_le<std::uint64_t>(in);
  if (hdr_len > (1ULL << 32)) throw Error("bilstm", "corrupt artifact header");
  std::string hdr(hdr_len, '\0');
  if (!in.read(hdr.data(), static_cast<std::streamsize>(hdr_len))) throw Error("bilstm", "truncated model artifact");
  const auto header = nlohmann::json::parse(hdr);

  BiLstmArtifact a;
  const auto& dj = header.at("dims");
  BiLstmDims dims{dj.at("vocab_size").get<std::size_t>(), dj.at("embedding").get<std::size_t>(),
                  dj.at("hidden").get<std::size_t>(), dj.at("seq_len").get<std::size_t>()};
  a.tokenizer = SeqTokenizer(header.at("tokenizer").get<std::vector<std::string>>());
  if (a.tokenizer.fingerprint() != header.at("tokenizer_hash").get<std::string>())
    throw Error("bilstm", "tokenizer hash mismatch in '" + path + "'");
  if (a.tokenizer.vocab_size() != dims.vocab_size) throw Error("bilstm", "tokenizer size does not match dims");
  const auto& tc = header.at("train_config");
  a.train_config = {tc.at("epochs").get<std::size_t>(),        tc.at("learning_rate").get<double>(),
                    tc.at("momentum").get<double>(),           tc.at("batch_size").get<std::size_t>(),
                    tc.at("gradient_clip_norm").get<double>(), tc.at("seed").get<std::uint64_t>()};
  a.best_epoch = header.value("best_epoch", std::size_t{0});

  a.model = BiLstmModel::zeros(dims);
  const auto count = detail::read_le<std::uint64_t>(in);
  auto tensors = a.model.tensors();
  if (count != tensors.size()) throw Error("bilstm", "unexpected tensor count in artifact");
  for (auto& [name, values] : tensors) {
    const auto rows = detail::read_le<std::uint64_t>(in);
    const auto cols = detail::read_le<std::uint64_t>(in);
    if (std::pair(rows, cols) != detail::tensor_shape(a.model, name))
      throw Error("bilstm", "tensor '" + name + "' has an unexpected shape");
    for (double& v : values) {
      v = detail::read_le<double>(in);
      if (!std::isfinite(v)) throw Error("bilstm", "non-finite value in tensor '" + name + "'");
    }
  }
  return a;
}

}  // namespace sentibench
