#include "sslstm/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "sslstm/errors.hpp"
#include "sslstm/metrics.hpp"

namespace sslstm {
namespace {

struct View {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const { return rows * cols; }
};

template <typename Params>
std::vector<View> views(const ModelConfig& cfg, Params& params) {
  std::vector<View> out;
  for_each_tensor(cfg, params, [&](const char* name, auto& t) {
    out.push_back({name, const_cast<double*>(t.data()), t.rows(), t.cols()});
  });
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void apply_sparse(Eigen::MatrixXd& table, const std::map<Eigen::Index, Eigen::VectorXd>& rows,
                  double lr, const char* name) {
  for (const auto& [row, g] : rows) {
    if (row < 0 || row >= table.rows() || g.size() != table.cols()) {
      throw ShapeMismatchError(std::string("sgd_step: embedding gradient does not fit '") + name + "'");
    }
    table.row(row) -= lr * g.transpose();
  }
}

}  // namespace

double cross_entropy(const Eigen::Ref<const Eigen::VectorXd>& probabilities, Label target) {
  return -std::log(probabilities[static_cast<Eigen::Index>(index_of(target))]);
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> lengths,
                                                   std::size_t token_budget, std::uint64_t seed) {
  if (token_budget == 0) throw std::invalid_argument("make_batches: token budget must be positive");
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> current;
  std::size_t tokens = 0;
  for (std::size_t idx : order) {
    if (!current.empty() && tokens + lengths[idx] > token_budget) {
      batches.push_back(std::move(current));
      current.clear();
      tokens = 0;
    }
    current.push_back(idx);
    tokens += lengths[idx];
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const Example> examples,
                                                   std::size_t token_budget, std::uint64_t seed,
                                                   std::size_t max_length) {
  std::vector<std::size_t> lengths;
  lengths.reserve(examples.size());
  for (const Example& e : examples) lengths.push_back(std::min(e.tokens.size(), max_length));
  return make_batches(lengths, token_budget, seed);
}

void sgd_step(Model& model, const Gradients<double>& gradients, double learning_rate) {
  ModelConfig dense_cfg = model.config;
  dense_cfg.train_embeddings = false;
  const std::vector<View> w = views(dense_cfg, model.params);
  const std::vector<View> g = views(dense_cfg, gradients.params);
  if (w.size() != g.size()) throw ShapeMismatchError("sgd_step: gradient bundle has the wrong tensor count");
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k].rows != g[k].rows || w[k].cols != g[k].cols) {
      throw ShapeMismatchError("sgd_step: gradient for '" + w[k].name + "' has the wrong shape");
    }
  }
  for (std::size_t k = 0; k < w.size(); ++k) {
    Eigen::Map<Eigen::VectorXd>(w[k].data, w[k].size()) -=
        learning_rate * Eigen::Map<const Eigen::VectorXd>(g[k].data, g[k].size());
  }
  if (!model.config.train_embeddings) {
    if (gradients.has_embedding_entries()) {
      throw ShapeMismatchError("sgd_step: embedding gradients given for frozen embeddings");
    }
    return;
  }
  if (uses_semantic(model.config.channels)) {
    apply_sparse(model.params.semantic_embedding, gradients.semantic_embedding, learning_rate, "semantic.embedding");
  }
  if (uses_sentiment(model.config.channels)) {
    apply_sparse(model.params.sentiment_embedding, gradients.sentiment_embedding, learning_rate, "sentiment.embedding");
  }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::span<const Label> labels, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split_dataset: ratio must lie in (0, 1)");
  if (labels.empty()) throw std::invalid_argument("split_dataset: dataset is empty");
  std::array<std::vector<std::size_t>, kNumClasses> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[index_of(labels[i])].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  for (auto& group : groups) {
    std::shuffle(group.begin(), group.end(), rng);
    // The small slack keeps e.g. 0.9 * 10 from flooring to 8.
    const auto take = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(group.size()) + 1e-9));
    train.insert(train.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(take));
    validation.insert(validation.end(), group.begin() + static_cast<std::ptrdiff_t>(take), group.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(validation.begin(), validation.end());
  return {std::move(train), std::move(validation)};
}

Split split_dataset(std::span<const Example> dataset, double ratio, std::uint64_t seed) {
  std::vector<Label> labels;
  labels.reserve(dataset.size());
  for (const Example& e : dataset) labels.push_back(e.label);
  auto [train_idx, valid_idx] = split_indices(labels, ratio, seed);
  Split s;
  for (std::size_t i : train_idx) s.train.push_back(dataset[i]);
  for (std::size_t i : valid_idx) s.validation.push_back(dataset[i]);
  return s;
}

BatchGradient batch_gradient(const Model& model, std::span<const Example> examples,
                             std::span<const std::size_t> batch, const TrainConfig& config) {
  const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(batch.size(), 1));

  auto run_range = [&](std::size_t begin, std::size_t end) {
    BatchGradient part{Gradients<double>::zeros_like(model), 0.0, 0};
    for (std::size_t k = begin; k < end; ++k) {
      const Example& ex = examples[batch[k]];
      const ForwardCache<double> cache = ss_forward(model, std::span<const Token>(ex.tokens));
      const double weight = config.class_weights ? (*config.class_weights)[index_of(ex.label)] : 1.0;
      const double loss = cross_entropy(cache.probabilities, ex.label);
      if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
      part.loss_sum += loss;
      if (argmax_label(cache.probabilities) == ex.label) ++part.correct;
      part.gradients.add(ss_backward(model, cache, ex.label), weight * scale);
    }
    return part;
  };

  const std::size_t workers = std::clamp<std::size_t>(config.parallel, 1, std::max<std::size_t>(batch.size(), 1));
  BatchGradient total;
  if (workers == 1) {
    total = run_range(0, batch.size());
  } else {
    std::vector<BatchGradient> parts(workers);
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    const std::size_t chunk = (batch.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(batch.size(), w * chunk);
      const std::size_t end = std::min(batch.size(), begin + chunk);
      threads.emplace_back([&, w, begin, end] {
        try {
          parts[w] = run_range(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    total = std::move(parts[0]);
    for (std::size_t w = 1; w < workers; ++w) {
      total.gradients.add(parts[w].gradients, 1.0);
      total.loss_sum += parts[w].loss_sum;
      total.correct += parts[w].correct;
    }
  }
  if (!total.gradients.all_finite()) throw NumericError("non-finite gradient");
  return total;
}

std::vector<Label> predict_all(const Model& model, std::span<const Example> examples) {
  std::vector<Label> out;
  out.reserve(examples.size());
  for (const Example& e : examples) out.push_back(predict(model, std::span<const Token>(e.tokens)));
  return out;
}

TrainHistory train(Model& model, std::span<const Example> train_set,
                   std::span<const Example> validation_set, const TrainConfig& config) {
  if (train_set.empty()) throw std::invalid_argument("train: training set is empty");
  if (validation_set.empty()) throw std::invalid_argument("train: validation set is empty");
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
  if (config.token_budget == 0) throw std::invalid_argument("train: token budget must be positive");
  if (model.config.channels != config.channels) {
    throw std::invalid_argument("train: model channels '" + std::string(to_string(model.config.channels)) +
                                "' differ from training channels '" +
                                std::string(to_string(config.channels)) + "'");
  }

  std::vector<Label> golds;
  golds.reserve(validation_set.size());
  for (const Example& e : validation_set) golds.push_back(e.label);

  TrainHistory history;
  SsLstmParams<double> best = model.params;
  double best_f1 = -std::numeric_limits<double>::infinity();
  std::size_t stale_epochs = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto batches = make_batches(train_set, config.token_budget,
                                      splitmix64(config.seed ^ splitmix64(epoch)),
                                      model.config.max_sequence_length);
    double loss_sum = 0;
    std::size_t correct = 0;
    for (const auto& batch : batches) {
      const BatchGradient bg = batch_gradient(model, train_set, batch, config);
      loss_sum += bg.loss_sum;
      correct += bg.correct;
      sgd_step(model, bg.gradients, config.learning_rate);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    rec.train_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(train_set.size());
    rec.validation_macro_f1 = macro_f1(confusion(predict_all(model, validation_set), golds));
    history.epochs.push_back(rec);
    if (config.on_epoch) config.on_epoch(rec);

    if (rec.validation_macro_f1 > best_f1) {
      best_f1 = rec.validation_macro_f1;
      best = model.params;
      history.best_epoch = epoch;
      stale_epochs = 0;
    } else if (++stale_epochs > config.patience) {
      break;
    }
  }
  model.params = std::move(best);
  return history;
}

GradientCheckResult gradient_check(const Model& model, const Example& example, double epsilon,
                                   std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("gradient_check: epsilon must be positive");
  const std::span<const Token> tokens(example.tokens);
  const Gradients<double> analytic = ss_backward(model, ss_forward(model, tokens), example.label);

  SsLstmParams<double> dense = analytic.params;
  if (model.config.train_embeddings) {
    auto densify = [](const Eigen::MatrixXd& like, const std::map<Eigen::Index, Eigen::VectorXd>& rows) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(like.rows(), like.cols());
      for (const auto& [r, v] : rows) m.row(r) = v.transpose();
      return m;
    };
    dense.semantic_embedding = densify(model.params.semantic_embedding, analytic.semantic_embedding);
    dense.sentiment_embedding = densify(model.params.sentiment_embedding, analytic.sentiment_embedding);
  }

  Model work = model;
  const std::vector<View> params = views(work.config, work.params);
  const std::vector<View> grads = views(work.config, dense);

  std::vector<std::pair<std::size_t, Eigen::Index>> entries;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (Eigen::Index i = 0; i < params[k].size(); ++i) entries.emplace_back(k, i);
  }
  constexpr std::size_t kMaxChecked = 10000;
  if (entries.size() > kMaxChecked) {
    std::mt19937_64 rng(seed);
    std::shuffle(entries.begin(), entries.end(), rng);
    entries.resize(kMaxChecked);
  }

  auto loss = [&] { return cross_entropy(class_probabilities(work, tokens), example.label); };
  GradientCheckResult result;
  for (const auto& [k, i] : entries) {
    double& w = params[k].data[i];
    const double saved = w;
    w = saved + epsilon;
    const double up = loss();
    w = saved - epsilon;
    const double down = loss();
    w = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = grads[k].data[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    if (!std::isfinite(rel)) throw NumericError("gradient check produced a non-finite value");
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_tensor = params[k].name;
    }
    ++result.checked;
  }
  return result;
}

}  // namespace sslstm
