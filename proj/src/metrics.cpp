#include "sslstm/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <stdexcept>

namespace sslstm {
namespace {

double ratio_percent(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", round2(v));
  return buf;
}

}  // namespace

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> golds) {
  if (predictions.size() != golds.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(predictions.size()) +
                                " predictions but " + std::to_string(golds.size()) + " gold labels");
  }
  if (golds.empty()) throw std::invalid_argument("confusion: no examples");
  ConfusionMatrix cm = ConfusionMatrix::Zero();
  for (std::size_t i = 0; i < golds.size(); ++i) {
    ++cm(static_cast<Eigen::Index>(index_of(golds[i])),
         static_cast<Eigen::Index>(index_of(predictions[i])));
  }
  return cm;
}

double f1_score(double precision, double recall) {
  const double sum = precision + recall;
  return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

ClassScores prf1(const ConfusionMatrix& cm, Label cls) {
  const auto k = static_cast<Eigen::Index>(index_of(cls));
  const std::int64_t tp = cm(k, k);
  const std::int64_t predicted = cm.col(k).sum();
  const std::int64_t actual = cm.row(k).sum();
  ClassScores s;
  s.precision = ratio_percent(tp, predicted);
  s.recall = ratio_percent(tp, actual);
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

double macro_f1(const std::array<double, 3>& emotion_f1s) {
  return (emotion_f1s[0] + emotion_f1s[1] + emotion_f1s[2]) / 3.0;
}

double macro_f1(const ConfusionMatrix& cm) {
  std::array<double, 3> f1s{};
  for (std::size_t i = 0; i < kEmotionLabels.size(); ++i) f1s[i] = prf1(cm, kEmotionLabels[i]).f1;
  return macro_f1(f1s);
}

double accuracy(const ConfusionMatrix& cm) { return ratio_percent(cm.trace(), cm.sum()); }

McNemarResult mcnemar_from_counts(std::int64_t b, std::int64_t c) {
  McNemarResult r;
  r.only_a_correct = b;
  r.only_b_correct = c;
  if (b + c == 0) return r;
  const double diff = std::max<double>(static_cast<double>(std::llabs(b - c)) - 1.0, 0.0);
  r.statistic = diff * diff / static_cast<double>(b + c);
  r.significant = r.statistic > kMcNemarCritical005;
  return r;
}

McNemarResult mcnemar(std::span<const bool> correct_a, std::span<const bool> correct_b) {
  if (correct_a.size() != correct_b.size()) {
    throw std::invalid_argument("mcnemar: paired sequences differ in length (" +
                                std::to_string(correct_a.size()) + " vs " +
                                std::to_string(correct_b.size()) + ")");
  }
  std::int64_t b = 0;
  std::int64_t c = 0;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    if (correct_a[i] && !correct_b[i]) ++b;
    if (!correct_a[i] && correct_b[i]) ++c;
  }
  return mcnemar_from_counts(b, c);
}

double fleiss_kappa(const Eigen::MatrixXi& judgments, int judges) {
  if (judges < 2) throw std::invalid_argument("fleiss_kappa: need at least 2 judges per item");
  if (judgments.rows() == 0 || judgments.cols() == 0) {
    throw std::invalid_argument("fleiss_kappa: empty judgment matrix");
  }
  if ((judgments.array() < 0).any()) throw std::invalid_argument("fleiss_kappa: negative count");
  for (Eigen::Index i = 0; i < judgments.rows(); ++i) {
    if (judgments.row(i).sum() != judges) {
      throw std::invalid_argument("fleiss_kappa: item " + std::to_string(i + 1) + " has " +
                                  std::to_string(judgments.row(i).sum()) + " judgments, expected " +
                                  std::to_string(judges));
    }
  }
  const Eigen::MatrixXd n = judgments.cast<double>();
  const double items = static_cast<double>(judgments.rows());
  const double raters = judges;
  const Eigen::VectorXd per_item =
      (n.array().square().rowwise().sum() - raters) / (raters * (raters - 1.0));
  const double p_bar = per_item.mean();
  const Eigen::RowVectorXd p_cat = n.colwise().sum() / (items * raters);
  const double p_e = p_cat.squaredNorm();
  if (p_e >= 1.0) return 1.0;
  return (p_bar - p_e) / (1.0 - p_e);
}

DatasetStats dataset_stats_from_counts(const std::array<std::int64_t, kNumClasses>& counts) {
  DatasetStats s;
  s.counts = counts;
  for (auto c : counts) s.total += c;
  for (std::size_t i = 0; i < kNumClasses; ++i) s.percentages[i] = ratio_percent(counts[i], s.total);
  return s;
}

DatasetStats dataset_stats(std::span<const Label> labels) {
  std::array<std::int64_t, kNumClasses> counts{};
  for (Label l : labels) ++counts[index_of(l)];
  return dataset_stats_from_counts(counts);
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

EvaluationReport evaluate(std::span<const Label> predictions, std::span<const Label> golds) {
  EvaluationReport r;
  r.confusion = confusion(predictions, golds);
  for (Label l : kAllLabels) r.classes[index_of(l)] = prf1(r.confusion, l);
  r.macro_f1 = macro_f1(std::array<double, 3>{r.classes[0].f1, r.classes[1].f1, r.classes[2].f1});
  r.accuracy = accuracy(r.confusion);
  r.count = r.confusion.sum();
  return r;
}

void write_report_text(const EvaluationReport& r, std::ostream& out) {
  out << std::left << std::setw(8) << "class" << std::right << std::setw(11) << "precision"
      << std::setw(9) << "recall" << std::setw(9) << "f1" << '\n';
  for (Label l : kAllLabels) {
    const ClassScores& s = r.classes[index_of(l)];
    out << std::left << std::setw(8) << to_string(l) << std::right << std::setw(11)
        << fixed2(s.precision) << std::setw(9) << fixed2(s.recall) << std::setw(9) << fixed2(s.f1)
        << '\n';
  }
  out << "macro-F1 (happy, sad, angry): " << fixed2(r.macro_f1) << '\n';
  out << "accuracy: " << fixed2(r.accuracy) << '\n';
  out << "examples: " << r.count << '\n';
  out << "\nconfusion (rows gold, columns predicted)\n" << std::setw(8) << "";
  for (Label l : kAllLabels) out << std::setw(8) << to_string(l);
  out << '\n';
  for (Label g : kAllLabels) {
    out << std::left << std::setw(8) << to_string(g) << std::right;
    for (Label p : kAllLabels) {
      out << std::setw(8)
          << r.confusion(static_cast<Eigen::Index>(index_of(g)), static_cast<Eigen::Index>(index_of(p)));
    }
    out << '\n';
  }
  if (r.comparison) {
    const McNemarResult& m = *r.comparison;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.4f", m.statistic);
    out << "\nMcNemar vs comparison model: b=" << m.only_a_correct << " c=" << m.only_b_correct
        << " statistic=" << buf << (m.significant ? " significant (p < 0.005)" : " not significant")
        << '\n';
  }
}

void write_report_tsv(const EvaluationReport& r, std::ostream& out) {
  out << "class\tprecision\trecall\tf1\n";
  for (Label l : kAllLabels) {
    const ClassScores& s = r.classes[index_of(l)];
    out << to_string(l) << '\t' << fixed2(s.precision) << '\t' << fixed2(s.recall) << '\t'
        << fixed2(s.f1) << '\n';
  }
  out << "macro\t\t\t" << fixed2(r.macro_f1) << '\n';
  if (r.comparison) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", r.comparison->statistic);
    out << "mcnemar\t" << r.comparison->only_a_correct << '\t' << r.comparison->only_b_correct
        << '\t' << buf << '\t' << (r.comparison->significant ? "significant" : "not-significant")
        << '\n';
  }
}

}  // namespace sslstm
