#include "sslstm/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "sslstm/errors.hpp"
#include "sslstm/hash.hpp"

namespace sslstm {
namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_count(std::string_view s, long long& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && out >= 0;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::string name, Eigen::Index dim)
    : name_(std::move(name)), dim_(dim) {
  if (dim <= 0) throw std::invalid_argument("embedding dimension must be positive");
}

void EmbeddingTable::add(std::string word, const Eigen::Ref<const Eigen::VectorXd>& vec) {
  if (vec.size() != dim_) {
    throw FormatError("embedding '" + word + "' has " + std::to_string(vec.size()) +
                      " components, expected " + std::to_string(dim_));
  }
  if (!vec.allFinite()) throw FormatError("embedding '" + word + "' has a non-finite value");
  if (index_.count(word) != 0) throw FormatError("duplicate embedding token '" + word + "'");
  index_.emplace(word, static_cast<Eigen::Index>(words_.size()));
  words_.push_back(std::move(word));
  data_.insert(data_.end(), vec.data(), vec.data() + dim_);
}

bool EmbeddingTable::contains(std::string_view word) const {
  return index_.count(std::string(word)) != 0;
}

Eigen::Index EmbeddingTable::index_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? -1 : it->second;
}

Eigen::VectorXd EmbeddingTable::lookup(std::string_view word) const {
  const Eigen::Index row = index_of(word);
  if (row < 0) return Eigen::VectorXd::Zero(dim_);
  return this->row(row);
}

std::uint64_t EmbeddingTable::hash() const {
  std::ostringstream out;
  save_embedding_file(*this, out);
  return fnv1a64(out.str());
}

EmbeddingTable load_embedding_file(std::istream& in, std::string name) {
  std::string line;
  std::size_t line_no = 0;
  long long declared_count = -1;
  long long declared_dim = -1;
  EmbeddingTable table;
  bool have_table = false;
  Eigen::VectorXd values;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_spaces(line);
    if (fields.empty()) continue;
    const std::string where = "embedding line " + std::to_string(line_no);

    if (!have_table && declared_count < 0 && fields.size() == 2) {
      long long count = 0;
      long long dim = 0;
      if (parse_count(fields[0], count) && parse_count(fields[1], dim)) {
        if (dim <= 0) throw FormatError(where + ": header declares non-positive dimension");
        declared_count = count;
        declared_dim = dim;
        continue;
      }
    }
    if (fields.size() < 2) throw FormatError(where + ": expected a token followed by values");

    const auto dim = static_cast<Eigen::Index>(fields.size() - 1);
    if (!have_table) {
      if (declared_dim >= 0 && declared_dim != dim) {
        throw FormatError(where + ": dimension mismatch, header declares " +
                          std::to_string(declared_dim) + " but line has " + std::to_string(dim));
      }
      table = EmbeddingTable(name, dim);
      values.resize(dim);
      have_table = true;
    } else if (dim != table.dim()) {
      throw FormatError(where + ": dimension mismatch, expected " + std::to_string(table.dim()) +
                        " values but found " + std::to_string(dim));
    }
    for (Eigen::Index k = 0; k < dim; ++k) {
      double v = 0;
      if (!parse_double(fields[k + 1], v)) {
        throw FormatError(where + ": cannot parse value '" + std::string(fields[k + 1]) + "'");
      }
      values[k] = v;
    }
    const std::string word(fields[0]);
    if (table.contains(word)) throw FormatError(where + ": duplicate token '" + word + "'");
    try {
      table.add(word, values);
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  if (!have_table) throw FormatError("embedding file is empty");
  if (declared_count >= 0 && declared_count != static_cast<long long>(table.size())) {
    throw FormatError("embedding header declares " + std::to_string(declared_count) +
                      " entries but file has " + std::to_string(table.size()));
  }
  return table;
}

EmbeddingTable load_embedding_file(const std::string& path, std::string name) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embedding file '" + path + "'");
  try {
    return load_embedding_file(in, std::move(name));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void save_embedding_file(const EmbeddingTable& table, std::ostream& out) {
  char buf[32];
  for (std::size_t r = 0; r < table.size(); ++r) {
    out << table.words()[r];
    for (Eigen::Index k = 0; k < table.dim(); ++k) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, table.row(static_cast<Eigen::Index>(r))[k]);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& u,
                         const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine: length mismatch (" + std::to_string(u.size()) +
                                " vs " + std::to_string(v.size()) + ")");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

Eigen::VectorXd sentence_embedding(const EmbeddingTable& table, std::span<const Token> tokens) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dim());
  std::size_t known = 0;
  for (const Token& t : tokens) {
    const Eigen::Index row = table.index_of(t.surface);
    if (row < 0) continue;
    sum += table.row(row);
    ++known;
  }
  if (known > 0) sum /= static_cast<double>(known);
  return sum;
}

}  // namespace sslstm
