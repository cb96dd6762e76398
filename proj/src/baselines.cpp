#include "sslstm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "sslstm/errors.hpp"

namespace sslstm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<FeatureVector> featurize(std::span<const Example> dataset, const EmoticonLexicon& lex,
                                     std::vector<Label>& labels) {
  std::vector<FeatureVector> out;
  out.reserve(dataset.size());
  labels.clear();
  for (const Example& e : dataset) {
    out.push_back(extract_features(e.tokens, lex));
    labels.push_back(e.label);
  }
  return out;
}

double parse_meta_double(const Checkpoint& ckpt, std::string_view key) {
  const std::string& s = ckpt.meta_value(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw FormatError("checkpoint meta '" + std::string(key) + "' is not a number: '" + s + "'");
  }
}

void expect_model(const Checkpoint& ckpt, std::string_view kind) {
  const std::string& m = ckpt.meta_value("model");
  if (m != kind) {
    throw FormatError("checkpoint holds a '" + m + "' model, not " + std::string(kind));
  }
}

const Checkpoint::Tensor& require_tensor(const Checkpoint& ckpt, std::string_view name,
                                         Eigen::Index rows, Eigen::Index cols) {
  const Checkpoint::Tensor* t = ckpt.find_tensor(name);
  if (t == nullptr) throw FormatError("checkpoint is missing tensor '" + std::string(name) + "'");
  if (t->values.rows() != rows || t->values.cols() != cols) {
    throw ShapeMismatchError("tensor '" + std::string(name) + "' has the wrong shape");
  }
  return *t;
}

}  // namespace

FeatureVector extract_features(std::span<const Token> tokens, const EmoticonLexicon& lex) {
  FeatureVector f;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string gram;
    for (std::size_t n = 0; n < 3 && i + n < tokens.size(); ++n) {
      if (n > 0) gram.push_back(' ');
      gram += tokens[i + n].surface;
      f.ngrams[gram] += 1.0;
    }
    if (auto cls = emoticon_class(tokens[i], lex)) {
      switch (*cls) {
        case EmoticonClass::happy: f.emoticons[0] += 1.0; break;
        case EmoticonClass::sad: f.emoticons[1] += 1.0; break;
        case EmoticonClass::angry: f.emoticons[2] += 1.0; break;
        case EmoticonClass::neutral: break;
      }
    }
  }
  return f;
}

void NaiveBayes::finalize() {
  totals_.fill(0.0);
  for (const auto& [gram, per_class] : counts_) {
    for (std::size_t c = 0; c < kNumClasses; ++c) totals_[c] += per_class[c];
  }
  const double docs = static_cast<double>(std::accumulate(doc_counts_.begin(), doc_counts_.end(), std::int64_t{0}));
  const double vocab = static_cast<double>(counts_.size());
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    log_priors_[c] = doc_counts_[c] > 0 ? std::log(static_cast<double>(doc_counts_[c]) / docs) : kNegInf;
    log_denominators_[c] = std::log(totals_[c] + alpha_ * vocab);
  }
}

std::array<double, kNumClasses> NaiveBayes::joint_log_likelihood(const FeatureVector& f) const {
  std::array<double, kNumClasses> score = log_priors_;
  for (const auto& [gram, count] : f.ngrams) {
    auto it = counts_.find(gram);
    if (it == counts_.end()) continue;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (doc_counts_[c] == 0) continue;
      score[c] += count * (std::log(it->second[c] + alpha_) - log_denominators_[c]);
    }
  }
  return score;
}

NaiveBayes nb_train(std::span<const FeatureVector> features, std::span<const Label> labels,
                    double alpha) {
  if (features.empty()) throw std::invalid_argument("nb_train: dataset is empty");
  if (features.size() != labels.size()) throw std::invalid_argument("nb_train: features and labels differ in length");
  if (!(alpha > 0.0)) throw std::invalid_argument("nb_train: smoothing must be positive");
  NaiveBayes nb;
  nb.alpha_ = alpha;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::size_t c = index_of(labels[i]);
    ++nb.doc_counts_[c];
    for (const auto& [gram, count] : features[i].ngrams) {
      auto [it, inserted] = nb.counts_.try_emplace(gram);
      if (inserted) it->second.fill(0.0);
      it->second[c] += count;
    }
  }
  nb.finalize();
  return nb;
}

NaiveBayes nb_train(std::span<const Example> dataset, double alpha, const EmoticonLexicon& lex) {
  std::vector<Label> labels;
  const auto features = featurize(dataset, lex, labels);
  return nb_train(features, labels, alpha);
}

Label nb_predict(const NaiveBayes& model, const FeatureVector& features) {
  const auto score = model.joint_log_likelihood(features);
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumClasses; ++c) {
    if (score[c] > score[best]) best = c;
  }
  return label_at(best);
}

Eigen::Vector4d LinearSvm::scores(const FeatureVector& f) const {
  Eigen::Vector4d s = bias;
  s += emoticon_weights * Eigen::Vector3d(f.emoticons[0], f.emoticons[1], f.emoticons[2]);
  for (const auto& [gram, count] : f.ngrams) {
    auto it = ngram_index.find(gram);
    if (it != ngram_index.end()) s += count * ngram_weights.col(it->second);
  }
  return s;
}

LinearSvm svm_train(std::span<const FeatureVector> features, std::span<const Label> labels,
                    double lambda, std::size_t epochs, std::uint64_t seed) {
  if (features.empty()) throw std::invalid_argument("svm_train: dataset is empty");
  if (features.size() != labels.size()) throw std::invalid_argument("svm_train: features and labels differ in length");
  if (!(lambda > 0.0)) throw std::invalid_argument("svm_train: regularization must be positive");

  LinearSvm svm;
  svm.lambda = lambda;
  // Column layout of the per-class weight vector: 3 emoticon dims, the
  // n-grams in first-seen order, then a constant bias feature.
  std::vector<std::vector<std::pair<Eigen::Index, double>>> rows(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto& row = rows[i];
    for (Eigen::Index k = 0; k < 3; ++k) {
      if (features[i].emoticons[static_cast<std::size_t>(k)] != 0.0) {
        row.emplace_back(k, features[i].emoticons[static_cast<std::size_t>(k)]);
      }
    }
    for (const auto& [gram, count] : features[i].ngrams) {
      auto [it, inserted] = svm.ngram_index.try_emplace(gram, static_cast<Eigen::Index>(svm.ngram_names.size()));
      if (inserted) svm.ngram_names.push_back(gram);
      row.emplace_back(3 + it->second, count);
    }
  }
  const auto n_grams = static_cast<Eigen::Index>(svm.ngram_names.size());
  const Eigen::Index bias_col = 3 + n_grams;
  for (auto& row : rows) row.emplace_back(bias_col, 1.0);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kNumClasses), bias_col + 1);
  Eigen::Vector4d scale = Eigen::Vector4d::Ones();  // w.row(c) is scale[c] * stored row
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      for (Eigen::Index c = 0; c < w.rows(); ++c) {
        const double y = index_of(labels[i]) == static_cast<std::size_t>(c) ? 1.0 : -1.0;
        double margin = 0;
        for (const auto& [k, v] : rows[i]) margin += w(c, k) * v;
        margin *= y * scale[c];
        scale[c] *= 1.0 - eta * lambda;
        if (scale[c] == 0.0) {
          w.row(c).setZero();
          scale[c] = 1.0;
        }
        if (margin < 1.0) {
          for (const auto& [k, v] : rows[i]) w(c, k) += eta * y * v / scale[c];
        }
      }
    }
  }
  for (Eigen::Index c = 0; c < w.rows(); ++c) w.row(c) *= scale[c];

  svm.emoticon_weights = w.leftCols(3);
  svm.ngram_weights = w.middleCols(3, n_grams);
  svm.bias = w.col(bias_col);
  return svm;
}

LinearSvm svm_train(std::span<const Example> dataset, double lambda, std::size_t epochs,
                    std::uint64_t seed, const EmoticonLexicon& lex) {
  std::vector<Label> labels;
  const auto features = featurize(dataset, lex, labels);
  return svm_train(features, labels, lambda, epochs, seed);
}

Label svm_predict(const LinearSvm& model, const FeatureVector& features) {
  const Eigen::Vector4d s = model.scores(features);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < 4; ++c) {
    if (s[c] > s[best]) best = c;
  }
  return label_at(static_cast<std::size_t>(best));
}

Checkpoint to_checkpoint(const NaiveBayes& model) {
  Checkpoint ckpt;
  ckpt.set_meta("model", "nb");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", model.alpha_);
  ckpt.set_meta("alpha", buf);
  Eigen::MatrixXd docs(static_cast<Eigen::Index>(kNumClasses), 1);
  for (std::size_t c = 0; c < kNumClasses; ++c) docs(static_cast<Eigen::Index>(c), 0) = static_cast<double>(model.doc_counts_[c]);
  ckpt.tensors.push_back({"doc_counts", docs});

  std::vector<std::string> keys;
  keys.reserve(model.counts_.size());
  for (const auto& [gram, per_class] : model.counts_) keys.push_back(gram);
  std::sort(keys.begin(), keys.end());
  Checkpoint::Table table{"ngram_counts", keys,
                          Eigen::MatrixXd(static_cast<Eigen::Index>(keys.size()), static_cast<Eigen::Index>(kNumClasses))};
  for (std::size_t r = 0; r < keys.size(); ++r) {
    const auto& per_class = model.counts_.at(keys[r]);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = per_class[c];
    }
  }
  ckpt.tables.push_back(std::move(table));
  return ckpt;
}

NaiveBayes naive_bayes_from_checkpoint(const Checkpoint& ckpt) {
  expect_model(ckpt, "nb");
  NaiveBayes nb;
  nb.alpha_ = parse_meta_double(ckpt, "alpha");
  if (!(nb.alpha_ > 0.0)) throw FormatError("checkpoint: naive Bayes smoothing must be positive");
  const auto& docs = require_tensor(ckpt, "doc_counts", static_cast<Eigen::Index>(kNumClasses), 1);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    nb.doc_counts_[c] = static_cast<std::int64_t>(std::llround(docs.values(static_cast<Eigen::Index>(c), 0)));
  }
  const Checkpoint::Table* table = ckpt.find_table("ngram_counts");
  if (table == nullptr) throw FormatError("checkpoint is missing table 'ngram_counts'");
  if (table->values.cols() != static_cast<Eigen::Index>(kNumClasses)) {
    throw ShapeMismatchError("table 'ngram_counts' must have 4 columns");
  }
  for (std::size_t r = 0; r < table->keys.size(); ++r) {
    std::array<double, kNumClasses> per_class{};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      per_class[c] = table->values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    if (!nb.counts_.emplace(table->keys[r], per_class).second) {
      throw FormatError("checkpoint: duplicate n-gram '" + table->keys[r] + "'");
    }
  }
  nb.finalize();
  return nb;
}

Checkpoint to_checkpoint(const LinearSvm& model) {
  Checkpoint ckpt;
  ckpt.set_meta("model", "svm");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", model.lambda);
  ckpt.set_meta("lambda", buf);
  ckpt.tensors.push_back({"bias", Eigen::MatrixXd(model.bias)});
  ckpt.tensors.push_back({"emoticon_weights", model.emoticon_weights});
  ckpt.tables.push_back({"ngram_weights", model.ngram_names, model.ngram_weights.transpose()});
  return ckpt;
}

LinearSvm linear_svm_from_checkpoint(const Checkpoint& ckpt) {
  expect_model(ckpt, "svm");
  LinearSvm svm;
  svm.lambda = parse_meta_double(ckpt, "lambda");
  svm.bias = require_tensor(ckpt, "bias", 4, 1).values;
  svm.emoticon_weights = require_tensor(ckpt, "emoticon_weights", 4, 3).values;
  const Checkpoint::Table* table = ckpt.find_table("ngram_weights");
  if (table == nullptr) throw FormatError("checkpoint is missing table 'ngram_weights'");
  if (table->values.cols() != 4) throw ShapeMismatchError("table 'ngram_weights' must have 4 columns");
  svm.ngram_names = table->keys;
  for (std::size_t i = 0; i < svm.ngram_names.size(); ++i) {
    if (!svm.ngram_index.emplace(svm.ngram_names[i], static_cast<Eigen::Index>(i)).second) {
      throw FormatError("checkpoint: duplicate n-gram '" + svm.ngram_names[i] + "'");
    }
  }
  svm.ngram_weights = table->values.transpose();
  return svm;
}

}  // namespace sslstm
