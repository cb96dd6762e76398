#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sslstm/checkpoint.hpp"
#include "sslstm/example.hpp"
#include "sslstm/text_norm.hpp"

namespace sslstm {

/// Sparse 1/2/3-gram counts (surfaces joined by a space) plus counts of
/// happy, sad and angry emoticons.
struct FeatureVector {
  std::map<std::string, double> ngrams;
  std::array<double, 3> emoticons{};
};

FeatureVector extract_features(std::span<const Token> tokens, const EmoticonLexicon& lex);

/// Multinomial naive Bayes over the n-gram block with additive smoothing.
/// N-grams never seen in training are ignored at prediction time.
class NaiveBayes {
 public:
  double alpha() const { return alpha_; }
  const std::array<std::int64_t, kNumClasses>& doc_counts() const { return doc_counts_; }
  std::size_t vocabulary_size() const { return counts_.size(); }

  /// log P(class) + sum count * log P(ngram | class), per class; classes
  /// absent from training score -inf.
  std::array<double, kNumClasses> joint_log_likelihood(const FeatureVector& f) const;

  friend NaiveBayes nb_train(std::span<const FeatureVector> features,
                             std::span<const Label> labels, double alpha);
  friend Checkpoint to_checkpoint(const NaiveBayes& model);
  friend NaiveBayes naive_bayes_from_checkpoint(const Checkpoint& ckpt);

 private:
  void finalize();

  double alpha_ = 1.0;
  std::array<std::int64_t, kNumClasses> doc_counts_{};
  std::unordered_map<std::string, std::array<double, kNumClasses>> counts_;
  std::array<double, kNumClasses> totals_{};
  std::array<double, kNumClasses> log_priors_{};
  std::array<double, kNumClasses> log_denominators_{};
};

NaiveBayes nb_train(std::span<const FeatureVector> features, std::span<const Label> labels,
                    double alpha);
NaiveBayes nb_train(std::span<const Example> dataset, double alpha,
                    const EmoticonLexicon& lex = EmoticonLexicon::builtin());
Label nb_predict(const NaiveBayes& model, const FeatureVector& features);

/// One-vs-rest linear SVMs over [emoticon counts, n-gram counts], each
/// trained by Pegasos subgradient descent on the L2-regularized hinge loss.
struct LinearSvm {
  double lambda = 0.005;
  std::unordered_map<std::string, Eigen::Index> ngram_index;
  std::vector<std::string> ngram_names;
  Eigen::MatrixXd emoticon_weights = Eigen::MatrixXd::Zero(4, 3);  // class x {happy, sad, angry}
  Eigen::MatrixXd ngram_weights = Eigen::MatrixXd::Zero(4, 0);     // class x ngram
  Eigen::Vector4d bias = Eigen::Vector4d::Zero();

  Eigen::Vector4d scores(const FeatureVector& f) const;
};

LinearSvm svm_train(std::span<const FeatureVector> features, std::span<const Label> labels,
                    double lambda, std::size_t epochs, std::uint64_t seed);
LinearSvm svm_train(std::span<const Example> dataset, double lambda, std::size_t epochs,
                    std::uint64_t seed, const EmoticonLexicon& lex = EmoticonLexicon::builtin());
Label svm_predict(const LinearSvm& model, const FeatureVector& features);

Checkpoint to_checkpoint(const NaiveBayes& model);
NaiveBayes naive_bayes_from_checkpoint(const Checkpoint& ckpt);
Checkpoint to_checkpoint(const LinearSvm& model);
LinearSvm linear_svm_from_checkpoint(const Checkpoint& ckpt);

}  // namespace sslstm
