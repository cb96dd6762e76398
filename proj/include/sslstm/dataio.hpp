#pragma once

#include <Eigen/Core>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sslstm/example.hpp"
#include "sslstm/labels.hpp"
#include "sslstm/text_norm.hpp"

namespace sslstm {

/// Three turns of a conversation; models only read the last one.
struct Conversation {
  std::string id;
  std::string turn1;
  std::string turn2;
  std::string turn3;
  std::optional<Label> label;

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

struct Dataset {
  std::vector<Conversation> conversations;

  bool fully_labeled() const;
  std::vector<Label> labels() const;  // throws FormatError if any is missing
};

/// `id<TAB>turn1<TAB>turn2<TAB>turn3[<TAB>label]`, '#' lines skipped.
/// Throws FormatError naming the line on wrong column counts, unknown
/// labels, duplicate ids or an empty third turn.
Dataset read_dataset(std::istream& in, std::string_view source = "dataset");
Dataset read_dataset_file(const std::string& path);
/// Same as read_dataset, but every row must carry a label.
Dataset read_labeled_dataset_file(const std::string& path);
/// Writes labels in their lowercase spelling; rejects tabs or newlines in fields.
void write_dataset(const Dataset& dataset, std::ostream& out);
void write_dataset_file(const Dataset& dataset, const std::string& path);

/// Normalized third turns paired with labels.
std::vector<Example> to_examples(const Dataset& dataset, const EmoticonLexicon& lex);

/// Per-item judge counts in Label order.
struct Judgments {
  std::vector<std::string> ids;
  Eigen::MatrixXi counts;  // items x 4
  int judges = 0;
};

/// `item_id<TAB>happy<TAB>sad<TAB>angry<TAB>others`; every row must sum to
/// the first row's total.
Judgments read_judgments(std::istream& in, std::string_view source = "judgments");
Judgments read_judgments_file(const std::string& path);

/// Unique argmax of a judgment row; nullopt when the top count is tied.
std::optional<Label> majority_label(const Eigen::Ref<const Eigen::RowVectorXi>& row);

}  // namespace sslstm
