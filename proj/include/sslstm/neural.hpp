#pragma once

// Dual-channel LSTM classifier: one recurrent encoder per embedding channel,
// final hidden states concatenated (semantic first), one fully connected
// hidden layer and a 4-way softmax. Forward and backward passes are written
// out by hand; every dense type is templated on the scalar.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sslstm/embeddings.hpp"
#include "sslstm/errors.hpp"
#include "sslstm/labels.hpp"
#include "sslstm/text_norm.hpp"

namespace sslstm {

enum class Channels { both, semantic, sentiment };
enum class Activation { relu, tanh, identity };

constexpr bool uses_semantic(Channels c) { return c != Channels::sentiment; }
constexpr bool uses_sentiment(Channels c) { return c != Channels::semantic; }

std::string_view to_string(Channels c);
std::string_view to_string(Activation a);
Channels parse_channels(std::string_view s);
Activation parse_activation(std::string_view s);

struct ModelConfig {
  Channels channels = Channels::both;
  Eigen::Index semantic_hidden = 128;
  Eigen::Index sentiment_hidden = 128;
  Eigen::Index fc_hidden = 128;
  Activation fc_activation = Activation::relu;
  std::size_t max_sequence_length = 50;
  /// Fine-tune word vectors; off keeps both tables frozen.
  bool train_embeddings = false;

  Eigen::Index feature_width() const {
    return (uses_semantic(channels) ? semantic_hidden : 0) +
           (uses_sentiment(channels) ? sentiment_hidden : 0);
  }
};

/// Row blocks of the stacked gate matrices.
enum class Gate : Eigen::Index { input = 0, forget = 1, output = 2, candidate = 3 };

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// LSTM weights with the four gates stacked in rows as (input, forget,
/// output, candidate): W is 4h x d, U is 4h x h, b has 4h entries.
template <typename Scalar>
struct LstmParams {
  Mat<Scalar> W;
  Mat<Scalar> U;
  Vec<Scalar> b;

  LstmParams() = default;
  LstmParams(Eigen::Index input_dim, Eigen::Index hidden_dim)
      : W(Mat<Scalar>::Zero(4 * hidden_dim, input_dim)),
        U(Mat<Scalar>::Zero(4 * hidden_dim, hidden_dim)),
        b(Vec<Scalar>::Zero(4 * hidden_dim)) {}

  Eigen::Index input_dim() const { return W.cols(); }
  Eigen::Index hidden_dim() const { return U.cols(); }
  bool empty() const { return U.size() == 0; }

  auto gate_W(Gate g) { return W.middleRows(static_cast<Eigen::Index>(g) * hidden_dim(), hidden_dim()); }
  auto gate_U(Gate g) { return U.middleRows(static_cast<Eigen::Index>(g) * hidden_dim(), hidden_dim()); }
  auto gate_b(Gate g) { return b.segment(static_cast<Eigen::Index>(g) * hidden_dim(), hidden_dim()); }
};

/// Per-step activations kept for backpropagation through time. Column t
/// holds step t.
template <typename Scalar>
struct LstmCache {
  Mat<Scalar> inputs;     // d x T
  Mat<Scalar> gates;      // 4h x T, post-nonlinearity
  Mat<Scalar> cells;      // h x T
  Mat<Scalar> cell_tanh;  // h x T
  Mat<Scalar> hidden;     // h x T

  Eigen::Index length() const { return hidden.cols(); }
};

template <typename Scalar>
struct LstmOutput {
  Vec<Scalar> final_hidden;
  LstmCache<Scalar> cache;

  const Mat<Scalar>& hidden_states() const { return cache.hidden; }
};

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

/// Standard LSTM recurrence from zero hidden and cell state. `inputs` holds
/// one column per step; an empty sequence yields a zero final state.
template <typename Scalar, typename Derived>
LstmOutput<Scalar> lstm_forward(const LstmParams<Scalar>& p, const Eigen::MatrixBase<Derived>& inputs) {
  const Eigen::Index h = p.hidden_dim();
  const Eigen::Index steps = inputs.cols();
  if (inputs.rows() != p.input_dim() && steps > 0) {
    throw std::invalid_argument("lstm_forward: input has " + std::to_string(inputs.rows()) +
                                " rows, expected " + std::to_string(p.input_dim()));
  }
  LstmOutput<Scalar> out;
  LstmCache<Scalar>& c = out.cache;
  c.inputs = inputs.template cast<Scalar>();
  c.gates.resize(4 * h, steps);
  c.cells.resize(h, steps);
  c.cell_tanh.resize(h, steps);
  c.hidden.resize(h, steps);

  Vec<Scalar> h_prev = Vec<Scalar>::Zero(h);
  Vec<Scalar> c_prev = Vec<Scalar>::Zero(h);
  Vec<Scalar> z(4 * h);
  for (Eigen::Index t = 0; t < steps; ++t) {
    z.noalias() = p.W * c.inputs.col(t);
    z.noalias() += p.U * h_prev;
    z += p.b;
    auto g = c.gates.col(t);
    g.head(3 * h) = z.head(3 * h).unaryExpr([](Scalar v) { return sigmoid(v); });
    g.tail(h) = z.tail(h).array().tanh();
    const auto i_gate = g.segment(0, h).array();
    const auto f_gate = g.segment(h, h).array();
    const auto o_gate = g.segment(2 * h, h).array();
    const auto cand = g.segment(3 * h, h).array();
    c.cells.col(t) = f_gate * c_prev.array() + i_gate * cand;
    c.cell_tanh.col(t) = c.cells.col(t).array().tanh();
    c.hidden.col(t) = o_gate * c.cell_tanh.col(t).array();
    h_prev = c.hidden.col(t);
    c_prev = c.cells.col(t);
  }
  out.final_hidden = h_prev;
  return out;
}

/// Backpropagates a gradient on the final hidden state through time.
/// Parameter gradients are accumulated into `grad`; per-step input
/// gradients are written to `d_inputs` when given.
template <typename Scalar>
void lstm_backward(const LstmParams<Scalar>& p, const LstmCache<Scalar>& c,
                   const Vec<Scalar>& d_final_hidden, LstmParams<Scalar>& grad,
                   Mat<Scalar>* d_inputs = nullptr) {
  const Eigen::Index h = p.hidden_dim();
  const Eigen::Index steps = c.length();
  if (d_inputs != nullptr) d_inputs->setZero(p.input_dim(), steps);
  Vec<Scalar> dh = d_final_hidden;
  Vec<Scalar> dc = Vec<Scalar>::Zero(h);
  Vec<Scalar> dz(4 * h);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto g = c.gates.col(t).array();
    const auto i_gate = g.segment(0, h);
    const auto f_gate = g.segment(h, h);
    const auto o_gate = g.segment(2 * h, h);
    const auto cand = g.segment(3 * h, h);
    const auto tc = c.cell_tanh.col(t).array();

    dc.array() += dh.array() * o_gate * (Scalar(1) - tc.square());
    const Vec<Scalar> c_prev = t > 0 ? Vec<Scalar>(c.cells.col(t - 1)) : Vec<Scalar>::Zero(h);

    dz.segment(0, h) = (dc.array() * cand * i_gate * (Scalar(1) - i_gate)).matrix();
    dz.segment(h, h) = (dc.array() * c_prev.array() * f_gate * (Scalar(1) - f_gate)).matrix();
    dz.segment(2 * h, h) = (dh.array() * tc * o_gate * (Scalar(1) - o_gate)).matrix();
    dz.segment(3 * h, h) = (dc.array() * i_gate * (Scalar(1) - cand.square())).matrix();

    grad.W.noalias() += dz * c.inputs.col(t).transpose();
    if (t > 0) grad.U.noalias() += dz * c.hidden.col(t - 1).transpose();
    grad.b += dz;
    if (d_inputs != nullptr) d_inputs->col(t).noalias() = p.W.transpose() * dz;

    dh.noalias() = p.U.transpose() * dz;
    dc.array() *= f_gate;
  }
}

/// Every trainable tensor of the classifier. Gradient bundles reuse this
/// type; channels that are switched off stay empty.
template <typename Scalar>
struct SsLstmParams {
  LstmParams<Scalar> semantic;
  LstmParams<Scalar> sentiment;
  Mat<Scalar> fc_weight;   // fc_hidden x feature_width
  Vec<Scalar> fc_bias;
  Mat<Scalar> out_weight;  // 4 x fc_hidden, rows in Label order
  Vec<Scalar> out_bias;
  // Fine-tuned word vectors (vocab x dim); empty while embeddings are frozen.
  Mat<Scalar> semantic_embedding;
  Mat<Scalar> sentiment_embedding;
};

/// Visits (name, tensor) for every tensor the configuration trains, in a
/// fixed order shared by checkpoints, SGD and gradient checking.
template <typename Params, typename Fn>
void for_each_tensor(const ModelConfig& cfg, Params& p, Fn&& fn) {
  if (uses_semantic(cfg.channels)) {
    fn("semantic.W", p.semantic.W);
    fn("semantic.U", p.semantic.U);
    fn("semantic.b", p.semantic.b);
  }
  if (uses_sentiment(cfg.channels)) {
    fn("sentiment.W", p.sentiment.W);
    fn("sentiment.U", p.sentiment.U);
    fn("sentiment.b", p.sentiment.b);
  }
  fn("fc.weight", p.fc_weight);
  fn("fc.bias", p.fc_bias);
  fn("out.weight", p.out_weight);
  fn("out.bias", p.out_bias);
  if (cfg.train_embeddings) {
    if (uses_semantic(cfg.channels)) fn("semantic.embedding", p.semantic_embedding);
    if (uses_sentiment(cfg.channels)) fn("sentiment.embedding", p.sentiment_embedding);
  }
}

template <typename Scalar>
struct SsLstmModel {
  ModelConfig config;
  std::shared_ptr<const EmbeddingTable> semantic_table;
  std::shared_ptr<const EmbeddingTable> sentiment_table;
  SsLstmParams<Scalar> params;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_tensor(config, params, [&](const char*, const auto& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
  }
};

using Model = SsLstmModel<double>;

/// Gradient of the loss for one or more examples. Embedding rows touched by
/// the inputs are kept sparsely, keyed by table row.
template <typename Scalar>
struct Gradients {
  SsLstmParams<Scalar> params;
  std::map<Eigen::Index, Vec<Scalar>> semantic_embedding;
  std::map<Eigen::Index, Vec<Scalar>> sentiment_embedding;

  static Gradients zeros_like(const SsLstmModel<Scalar>& model) {
    Gradients g;
    SsLstmParams<Scalar>& gp = g.params;
    const SsLstmParams<Scalar>& mp = model.params;
    auto zero = [](auto& dst, const auto& src) { dst.setZero(src.rows(), src.cols()); };
    zero(gp.semantic.W, mp.semantic.W);
    zero(gp.semantic.U, mp.semantic.U);
    zero(gp.semantic.b, mp.semantic.b);
    zero(gp.sentiment.W, mp.sentiment.W);
    zero(gp.sentiment.U, mp.sentiment.U);
    zero(gp.sentiment.b, mp.sentiment.b);
    zero(gp.fc_weight, mp.fc_weight);
    zero(gp.fc_bias, mp.fc_bias);
    zero(gp.out_weight, mp.out_weight);
    zero(gp.out_bias, mp.out_bias);
    return g;
  }

  bool has_embedding_entries() const {
    return !semantic_embedding.empty() || !sentiment_embedding.empty() ||
           params.semantic_embedding.size() != 0 || params.sentiment_embedding.size() != 0;
  }

  /// this += scale * other (shapes must agree).
  void add(const Gradients& other, Scalar scale) {
    add_dense(params.semantic.W, other.params.semantic.W, scale);
    add_dense(params.semantic.U, other.params.semantic.U, scale);
    add_dense(params.semantic.b, other.params.semantic.b, scale);
    add_dense(params.sentiment.W, other.params.sentiment.W, scale);
    add_dense(params.sentiment.U, other.params.sentiment.U, scale);
    add_dense(params.sentiment.b, other.params.sentiment.b, scale);
    add_dense(params.fc_weight, other.params.fc_weight, scale);
    add_dense(params.fc_bias, other.params.fc_bias, scale);
    add_dense(params.out_weight, other.params.out_weight, scale);
    add_dense(params.out_bias, other.params.out_bias, scale);
    add_sparse(semantic_embedding, other.semantic_embedding, scale);
    add_sparse(sentiment_embedding, other.sentiment_embedding, scale);
  }

  void scale(Scalar s) {
    params.semantic.W *= s;
    params.semantic.U *= s;
    params.semantic.b *= s;
    params.sentiment.W *= s;
    params.sentiment.U *= s;
    params.sentiment.b *= s;
    params.fc_weight *= s;
    params.fc_bias *= s;
    params.out_weight *= s;
    params.out_bias *= s;
    for (auto& [row, v] : semantic_embedding) v *= s;
    for (auto& [row, v] : sentiment_embedding) v *= s;
  }

  bool all_finite() const {
    bool ok = params.semantic.W.allFinite() && params.semantic.U.allFinite() &&
              params.semantic.b.allFinite() && params.sentiment.W.allFinite() &&
              params.sentiment.U.allFinite() && params.sentiment.b.allFinite() &&
              params.fc_weight.allFinite() && params.fc_bias.allFinite() &&
              params.out_weight.allFinite() && params.out_bias.allFinite();
    for (const auto& [row, v] : semantic_embedding) ok = ok && v.allFinite();
    for (const auto& [row, v] : sentiment_embedding) ok = ok && v.allFinite();
    return ok;
  }

 private:
  template <typename T>
  static void add_dense(T& dst, const T& src, Scalar scale) {
    if (dst.rows() != src.rows() || dst.cols() != src.cols()) {
      throw ShapeMismatchError("gradient accumulation: shape mismatch");
    }
    dst += scale * src;
  }
  static void add_sparse(std::map<Eigen::Index, Vec<Scalar>>& dst,
                         const std::map<Eigen::Index, Vec<Scalar>>& src, Scalar scale) {
    for (const auto& [row, v] : src) {
      auto it = dst.find(row);
      if (it == dst.end()) {
        dst.emplace(row, scale * v);
      } else {
        it->second += scale * v;
      }
    }
  }
};

/// Everything the backward pass needs from one forward pass.
template <typename Scalar>
struct ForwardCache {
  std::size_t length = 0;  // tokens consumed after truncation
  std::vector<Eigen::Index> semantic_rows;   // table row per step, -1 when OOV
  std::vector<Eigen::Index> sentiment_rows;
  LstmCache<Scalar> semantic;
  LstmCache<Scalar> sentiment;
  Vec<Scalar> features;  // concatenated final hidden states
  Vec<Scalar> fc_pre;
  Vec<Scalar> fc_act;
  Vec<Scalar> logits;
  Vec<Scalar> probabilities;
};

namespace detail {

template <typename Scalar>
void init_uniform(Mat<Scalar>& m, double fan_in, double fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Scalar>(dist(rng));
  }
}

template <typename Scalar>
LstmParams<Scalar> init_lstm(Eigen::Index input_dim, Eigen::Index hidden, std::mt19937_64& rng) {
  LstmParams<Scalar> p(input_dim, hidden);
  for (Gate g : {Gate::input, Gate::forget, Gate::output, Gate::candidate}) {
    Mat<Scalar> w(hidden, input_dim);
    init_uniform(w, static_cast<double>(input_dim), static_cast<double>(hidden), rng);
    p.gate_W(g) = w;
    Mat<Scalar> u(hidden, hidden);
    init_uniform(u, static_cast<double>(hidden), static_cast<double>(hidden), rng);
    p.gate_U(g) = u;
  }
  p.gate_b(Gate::forget).setOnes();
  return p;
}

template <typename Scalar>
Mat<Scalar> table_matrix(const EmbeddingTable& table) {
  Mat<Scalar> m(static_cast<Eigen::Index>(table.size()), table.dim());
  for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r) = table.row(r).transpose().template cast<Scalar>();
  return m;
}

template <typename Scalar>
Vec<Scalar> softmax(const Vec<Scalar>& logits) {
  const Scalar top = logits.maxCoeff();
  Vec<Scalar> e = (logits.array() - top).exp().matrix();
  return e / e.sum();
}

template <typename Scalar>
Vec<Scalar> activate(Activation a, const Vec<Scalar>& x) {
  switch (a) {
    case Activation::relu: return x.cwiseMax(Scalar(0));
    case Activation::tanh: return x.array().tanh().matrix();
    case Activation::identity: return x;
  }
  return x;
}

template <typename Scalar>
Vec<Scalar> activation_grad(Activation a, const Vec<Scalar>& pre, const Vec<Scalar>& act) {
  switch (a) {
    case Activation::relu:
      return pre.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); });
    case Activation::tanh: return (Scalar(1) - act.array().square()).matrix();
    case Activation::identity: return Vec<Scalar>::Ones(pre.size());
  }
  return Vec<Scalar>::Ones(pre.size());
}

// Embeds the token sequence column-wise, recording each token's table row.
template <typename Scalar>
Mat<Scalar> embed(const EmbeddingTable& table, const Mat<Scalar>* tuned,
                  std::span<const Token> tokens, std::vector<Eigen::Index>& rows) {
  const auto steps = static_cast<Eigen::Index>(tokens.size());
  Mat<Scalar> x = Mat<Scalar>::Zero(table.dim(), steps);
  rows.resize(tokens.size());
  for (Eigen::Index t = 0; t < steps; ++t) {
    const Eigen::Index row = table.index_of(tokens[static_cast<std::size_t>(t)].surface);
    rows[static_cast<std::size_t>(t)] = row;
    if (row < 0) continue;
    if (tuned != nullptr) {
      x.col(t) = tuned->row(row).transpose();
    } else {
      x.col(t) = table.row(row).template cast<Scalar>();
    }
  }
  return x;
}

}  // namespace detail

/// Fresh model. Weights are uniform in +-sqrt(6 / (fan_in + fan_out)),
/// biases zero except the forget gate (one). Deterministic in `seed`.
template <typename Scalar = double>
SsLstmModel<Scalar> init_model(const ModelConfig& config,
                               std::shared_ptr<const EmbeddingTable> semantic_table,
                               std::shared_ptr<const EmbeddingTable> sentiment_table,
                               std::uint64_t seed) {
  if (config.fc_hidden <= 0) throw std::invalid_argument("init_model: fc hidden width must be positive");
  if (config.max_sequence_length == 0) throw std::invalid_argument("init_model: max sequence length must be positive");
  if (uses_semantic(config.channels)) {
    if (!semantic_table) throw std::invalid_argument("init_model: semantic channel needs an embedding table");
    if (config.semantic_hidden <= 0) throw std::invalid_argument("init_model: semantic hidden dim must be positive");
  }
  if (uses_sentiment(config.channels)) {
    if (!sentiment_table) throw std::invalid_argument("init_model: sentiment channel needs an embedding table");
    if (config.sentiment_hidden <= 0) throw std::invalid_argument("init_model: sentiment hidden dim must be positive");
  }

  std::mt19937_64 rng(seed);
  SsLstmModel<Scalar> m;
  m.config = config;
  m.semantic_table = std::move(semantic_table);
  m.sentiment_table = std::move(sentiment_table);
  SsLstmParams<Scalar>& p = m.params;
  if (uses_semantic(config.channels)) {
    p.semantic = detail::init_lstm<Scalar>(m.semantic_table->dim(), config.semantic_hidden, rng);
  }
  if (uses_sentiment(config.channels)) {
    p.sentiment = detail::init_lstm<Scalar>(m.sentiment_table->dim(), config.sentiment_hidden, rng);
  }
  const Eigen::Index width = config.feature_width();
  p.fc_weight.resize(config.fc_hidden, width);
  detail::init_uniform(p.fc_weight, static_cast<double>(width), static_cast<double>(config.fc_hidden), rng);
  p.fc_bias = Vec<Scalar>::Zero(config.fc_hidden);
  p.out_weight.resize(static_cast<Eigen::Index>(kNumClasses), config.fc_hidden);
  detail::init_uniform(p.out_weight, static_cast<double>(config.fc_hidden),
                       static_cast<double>(kNumClasses), rng);
  p.out_bias = Vec<Scalar>::Zero(static_cast<Eigen::Index>(kNumClasses));
  if (config.train_embeddings) {
    if (uses_semantic(config.channels)) p.semantic_embedding = detail::table_matrix<Scalar>(*m.semantic_table);
    if (uses_sentiment(config.channels)) p.sentiment_embedding = detail::table_matrix<Scalar>(*m.sentiment_table);
  }
  return m;
}

/// Class probabilities for one utterance plus the activations needed by
/// ss_backward. Tokens past the configured maximum length are ignored.
template <typename Scalar>
ForwardCache<Scalar> ss_forward(const SsLstmModel<Scalar>& model, std::span<const Token> tokens) {
  const ModelConfig& cfg = model.config;
  const SsLstmParams<Scalar>& p = model.params;
  ForwardCache<Scalar> cache;
  cache.length = std::min(tokens.size(), cfg.max_sequence_length);
  const auto used = tokens.first(cache.length);

  cache.features.resize(cfg.feature_width());
  Eigen::Index offset = 0;
  if (uses_semantic(cfg.channels)) {
    const Mat<Scalar>* tuned = cfg.train_embeddings ? &p.semantic_embedding : nullptr;
    const Mat<Scalar> x = detail::embed(*model.semantic_table, tuned, used, cache.semantic_rows);
    LstmOutput<Scalar> out = lstm_forward(p.semantic, x);
    cache.features.segment(offset, p.semantic.hidden_dim()) = out.final_hidden;
    offset += p.semantic.hidden_dim();
    cache.semantic = std::move(out.cache);
  }
  if (uses_sentiment(cfg.channels)) {
    const Mat<Scalar>* tuned = cfg.train_embeddings ? &p.sentiment_embedding : nullptr;
    const Mat<Scalar> x = detail::embed(*model.sentiment_table, tuned, used, cache.sentiment_rows);
    LstmOutput<Scalar> out = lstm_forward(p.sentiment, x);
    cache.features.segment(offset, p.sentiment.hidden_dim()) = out.final_hidden;
    cache.sentiment = std::move(out.cache);
  }
  cache.fc_pre = p.fc_weight * cache.features + p.fc_bias;
  cache.fc_act = detail::activate(cfg.fc_activation, cache.fc_pre);
  cache.logits = p.out_weight * cache.fc_act + p.out_bias;
  cache.probabilities = detail::softmax(cache.logits);
  return cache;
}

template <typename Scalar>
Vec<Scalar> class_probabilities(const SsLstmModel<Scalar>& model, std::span<const Token> tokens) {
  return ss_forward(model, tokens).probabilities;
}

/// Exact gradient of -log p[target] with respect to every trained tensor.
template <typename Scalar>
Gradients<Scalar> ss_backward(const SsLstmModel<Scalar>& model, const ForwardCache<Scalar>& cache,
                              Label target) {
  const ModelConfig& cfg = model.config;
  const SsLstmParams<Scalar>& p = model.params;
  const Eigen::Index width = cfg.feature_width();
  const bool stale =
      cache.probabilities.size() != static_cast<Eigen::Index>(kNumClasses) ||
      cache.features.size() != width || p.fc_weight.cols() != width ||
      cache.fc_pre.size() != p.fc_weight.rows() || cache.fc_act.size() != p.out_weight.cols() ||
      (uses_semantic(cfg.channels) &&
       (cache.semantic.hidden.rows() != p.semantic.hidden_dim() ||
        cache.semantic.inputs.rows() != p.semantic.input_dim() ||
        cache.semantic.length() != static_cast<Eigen::Index>(cache.length))) ||
      (uses_sentiment(cfg.channels) &&
       (cache.sentiment.hidden.rows() != p.sentiment.hidden_dim() ||
        cache.sentiment.inputs.rows() != p.sentiment.input_dim() ||
        cache.sentiment.length() != static_cast<Eigen::Index>(cache.length)));
  if (stale) throw ShapeMismatchError("ss_backward: forward cache does not match the model");

  Gradients<Scalar> g = Gradients<Scalar>::zeros_like(model);
  SsLstmParams<Scalar>& gp = g.params;

  Vec<Scalar> d_logits = cache.probabilities;
  d_logits[static_cast<Eigen::Index>(index_of(target))] -= Scalar(1);
  gp.out_weight.noalias() = d_logits * cache.fc_act.transpose();
  gp.out_bias = d_logits;

  const Vec<Scalar> d_act = p.out_weight.transpose() * d_logits;
  const Vec<Scalar> d_pre =
      (d_act.array() * detail::activation_grad(cfg.fc_activation, cache.fc_pre, cache.fc_act).array()).matrix();
  gp.fc_weight.noalias() = d_pre * cache.features.transpose();
  gp.fc_bias = d_pre;
  const Vec<Scalar> d_features = p.fc_weight.transpose() * d_pre;

  auto backprop_channel = [&](const LstmParams<Scalar>& lp, const LstmCache<Scalar>& lc,
                              const Vec<Scalar>& d_final, LstmParams<Scalar>& grad,
                              const std::vector<Eigen::Index>& rows,
                              std::map<Eigen::Index, Vec<Scalar>>& emb_grad) {
    if (!cfg.train_embeddings) {
      lstm_backward(lp, lc, d_final, grad);
      return;
    }
    Mat<Scalar> d_inputs;
    lstm_backward(lp, lc, d_final, grad, &d_inputs);
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t] < 0) continue;
      auto col = d_inputs.col(static_cast<Eigen::Index>(t));
      auto it = emb_grad.find(rows[t]);
      if (it == emb_grad.end()) {
        emb_grad.emplace(rows[t], col);
      } else {
        it->second += col;
      }
    }
  };

  Eigen::Index offset = 0;
  if (uses_semantic(cfg.channels)) {
    const Eigen::Index h = p.semantic.hidden_dim();
    backprop_channel(p.semantic, cache.semantic, d_features.segment(offset, h), gp.semantic,
                     cache.semantic_rows, g.semantic_embedding);
    offset += h;
  }
  if (uses_sentiment(cfg.channels)) {
    const Eigen::Index h = p.sentiment.hidden_dim();
    backprop_channel(p.sentiment, cache.sentiment, d_features.segment(offset, h), gp.sentiment,
                     cache.sentiment_rows, g.sentiment_embedding);
  }
  return g;
}

/// Argmax with ties resolved toward the earlier class.
template <typename Derived>
Label argmax_label(const Eigen::MatrixBase<Derived>& scores) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return label_at(static_cast<std::size_t>(best));
}

template <typename Scalar>
Label predict(const SsLstmModel<Scalar>& model, std::span<const Token> tokens) {
  return argmax_label(class_probabilities(model, tokens));
}

}  // namespace sslstm
