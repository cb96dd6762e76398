#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sslstm/text_norm.hpp"

namespace sslstm {

/// Word vectors for one embedding channel. Rows of `vectors()` follow file
/// order; out-of-vocabulary lookups return the zero vector.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::string name, Eigen::Index dim);

  const std::string& name() const { return name_; }
  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }

  /// Throws FormatError on duplicates, wrong width or non-finite values.
  void add(std::string word, const Eigen::Ref<const Eigen::VectorXd>& vec);

  bool contains(std::string_view word) const;
  /// Row index, or -1 when out of vocabulary.
  Eigen::Index index_of(std::string_view word) const;
  Eigen::VectorXd lookup(std::string_view word) const;
  Eigen::VectorXd lookup(const Token& token) const { return lookup(token.surface); }

  const std::vector<std::string>& words() const { return words_; }
  Eigen::Map<const Eigen::VectorXd> row(Eigen::Index i) const {
    return Eigen::Map<const Eigen::VectorXd>(data_.data() + i * dim_, dim_);
  }
  /// Mutable row access for embedding fine-tuning.
  Eigen::Map<Eigen::VectorXd> mutable_row(Eigen::Index i) {
    return Eigen::Map<Eigen::VectorXd>(data_.data() + i * dim_, dim_);
  }

  std::uint64_t hash() const;

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.dim_ == b.dim_ && a.words_ == b.words_ && a.data_ == b.data_;
  }

 private:
  std::string name_;
  Eigen::Index dim_ = 0;
  std::vector<std::string> words_;
  std::unordered_map<std::string, Eigen::Index> index_;
  std::vector<double> data_;  // row-major, one row per word
};

/// `token v1 ... vD` per line; an optional leading `COUNT DIM` header is
/// validated. Errors name the offending line.
EmbeddingTable load_embedding_file(std::istream& in, std::string name = {});
EmbeddingTable load_embedding_file(const std::string& path, std::string name);
/// Writes every value with round-trip precision and no header.
void save_embedding_file(const EmbeddingTable& table, std::ostream& out);

/// Cosine similarity; 0 when either vector has zero norm. Throws
/// std::invalid_argument on length mismatch.
template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v);

double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& u,
                         const Eigen::Ref<const Eigen::VectorXd>& v);

/// Mean of in-vocabulary token vectors; zero when none are known.
Eigen::VectorXd sentence_embedding(const EmbeddingTable& table, std::span<const Token> tokens);

template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  return cosine_similarity(u.template cast<double>(), v.template cast<double>());
}

}  // namespace sslstm
