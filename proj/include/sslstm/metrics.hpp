#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>

#include "sslstm/labels.hpp"

namespace sslstm {

/// counts(gold, predicted), classes in Label order.
using ConfusionMatrix = Eigen::Matrix<std::int64_t, 4, 4>;

/// Throws std::invalid_argument on empty or unequal-length input.
ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> golds);

/// Precision, recall and F1 as percentages. 0/0 is 0.
struct ClassScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

ClassScores prf1(const ConfusionMatrix& cm, Label cls);
/// Harmonic mean of two percentages; 0 when both are 0.
double f1_score(double precision, double recall);
/// Mean F1 over happy, sad and angry; Others is excluded.
double macro_f1(const ConfusionMatrix& cm);
double macro_f1(const std::array<double, 3>& emotion_f1s);
double accuracy(const ConfusionMatrix& cm);

struct McNemarResult {
  std::int64_t only_a_correct = 0;  // b
  std::int64_t only_b_correct = 0;  // c
  double statistic = 0;
  bool significant = false;
};

/// Chi-square critical value, 1 degree of freedom, p = 0.005.
inline constexpr double kMcNemarCritical005 = 7.879;

/// Continuity-corrected McNemar test on paired per-example correctness.
McNemarResult mcnemar(std::span<const bool> correct_a, std::span<const bool> correct_b);
McNemarResult mcnemar_from_counts(std::int64_t b, std::int64_t c);

/// Fleiss' kappa over an items x categories count matrix where every row
/// sums to `judges`. Returns 1 when expected agreement is already 1.
double fleiss_kappa(const Eigen::MatrixXi& judgments, int judges);

struct DatasetStats {
  std::array<std::int64_t, kNumClasses> counts{};
  std::int64_t total = 0;
  /// Unrounded percentages; 0 for an empty dataset.
  std::array<double, kNumClasses> percentages{};
};

DatasetStats dataset_stats(std::span<const Label> labels);
DatasetStats dataset_stats_from_counts(const std::array<std::int64_t, kNumClasses>& counts);

/// Half-away-from-zero rounding to two decimals; applied only when reporting.
double round2(double v);

struct EvaluationReport {
  ConfusionMatrix confusion = ConfusionMatrix::Zero();
  std::array<ClassScores, kNumClasses> classes{};
  double macro_f1 = 0;
  double accuracy = 0;
  std::int64_t count = 0;
  std::optional<McNemarResult> comparison;
};

EvaluationReport evaluate(std::span<const Label> predictions, std::span<const Label> golds);

/// Aligned human-readable table.
void write_report_text(const EvaluationReport& report, std::ostream& out);
/// `class<TAB>precision<TAB>recall<TAB>f1` per class, then a `macro` row.
void write_report_tsv(const EvaluationReport& report, std::ostream& out);

}  // namespace sslstm
