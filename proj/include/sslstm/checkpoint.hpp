#pragma once

#include <Eigen/Core>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "sslstm/neural.hpp"

namespace sslstm {

/// Text checkpoint container shared by every model type:
///
///   SSLSTM-CKPT 1
///   meta key=value          (any number; `tensors=N` counts the blocks)
///   tensor NAME ROWS COLS   followed by ROWS lines of COLS numbers
///   table NAME ROWS COLS    followed by ROWS lines `key<TAB>COLS numbers`
///   end
///
/// Numbers are written with 9 significant digits.
struct Checkpoint {
  static constexpr int kVersion = 1;

  struct Tensor {
    std::string name;
    Eigen::MatrixXd values;
  };
  struct Table {
    std::string name;
    std::vector<std::string> keys;
    Eigen::MatrixXd values;  // one row per key
  };

  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<Tensor> tensors;
  std::vector<Table> tables;

  void set_meta(std::string key, std::string value);
  const std::string* find_meta(std::string_view key) const;
  /// Throws FormatError when absent.
  const std::string& meta_value(std::string_view key) const;
  const Tensor* find_tensor(std::string_view name) const;
  const Table* find_table(std::string_view name) const;
};

/// Throws UnknownVersionError on a bad header, TruncatedFileError when the
/// file ends early or holds fewer blocks than announced, FormatError for
/// anything else malformed.
Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint_file(const std::string& path);
void write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
void write_checkpoint_file(const Checkpoint& ckpt, const std::string& path);

/// Extra provenance stored alongside an SS-LSTM model.
struct ModelProvenance {
  std::optional<std::uint64_t> lexicon_hash;
  std::optional<std::string> semantic_embedding_path;
  std::optional<std::string> sentiment_embedding_path;
};

Checkpoint to_checkpoint(const Model& model, const ModelProvenance& provenance = {});
void save_checkpoint(const Model& model, std::ostream& out, const ModelProvenance& provenance = {});

/// Rebuilds a model; tables must match the dimensions and content hashes
/// recorded at save time. Throws ShapeMismatchError on tensor shapes that do
/// not fit the recorded configuration.
Model model_from_checkpoint(const Checkpoint& ckpt,
                            std::shared_ptr<const EmbeddingTable> semantic_table,
                            std::shared_ptr<const EmbeddingTable> sentiment_table);
Model load_checkpoint(std::istream& in, std::shared_ptr<const EmbeddingTable> semantic_table,
                      std::shared_ptr<const EmbeddingTable> sentiment_table);

std::string hex64(std::uint64_t v);

}  // namespace sslstm
