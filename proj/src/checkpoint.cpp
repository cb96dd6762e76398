#include "sslstm/checkpoint.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sslstm/errors.hpp"

namespace sslstm {
namespace {

constexpr std::string_view kMagic = "SSLSTM-CKPT";

std::vector<std::string_view> split_ws(std::string_view line) {
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

long long parse_int(std::string_view s, const std::string& where) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
    throw FormatError(where + ": expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

double parse_value(std::string_view s, const std::string& where) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw FormatError(where + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  bool at_eof() const { return in_.eof(); }
  std::string where() const { return "checkpoint line " + std::to_string(line_no_); }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

void read_row(LineReader& reader, std::string_view line, Eigen::MatrixXd& values, Eigen::Index r,
              const std::string& block) {
  const auto fields = split_ws(line);
  if (static_cast<Eigen::Index>(fields.size()) != values.cols()) {
    if (reader.at_eof()) {
      throw TruncatedFileError(reader.where() + ": block '" + block + "' ends mid-row");
    }
    throw FormatError(reader.where() + ": block '" + block + "' row has " +
                      std::to_string(fields.size()) + " values, expected " +
                      std::to_string(values.cols()));
  }
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    values(r, c) = parse_value(fields[static_cast<std::size_t>(c)], reader.where());
  }
}

}  // namespace

void Checkpoint::set_meta(std::string key, std::string value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  meta.emplace_back(std::move(key), std::move(value));
}

const std::string* Checkpoint::find_meta(std::string_view key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return &v;
  }
  return nullptr;
}

const std::string& Checkpoint::meta_value(std::string_view key) const {
  const std::string* v = find_meta(key);
  if (v == nullptr) throw FormatError("checkpoint is missing meta '" + std::string(key) + "'");
  return *v;
}

const Checkpoint::Tensor* Checkpoint::find_tensor(std::string_view name) const {
  for (const Tensor& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const Checkpoint::Table* Checkpoint::find_table(std::string_view name) const {
  for (const Table& t : tables) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

Checkpoint read_checkpoint(std::istream& in) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw TruncatedFileError("checkpoint is empty");
  {
    const auto fields = split_ws(line);
    if (fields.size() != 2 || fields[0] != kMagic || fields[1] != std::to_string(Checkpoint::kVersion)) {
      throw UnknownVersionError("unrecognised checkpoint header '" + line + "' (expected '" +
                                std::string(kMagic) + " " + std::to_string(Checkpoint::kVersion) + "')");
    }
  }

  Checkpoint ckpt;
  std::optional<long long> declared;
  std::size_t blocks = 0;
  bool ended = false;
  while (reader.next(line)) {
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    const std::string kind(fields[0]);  // owned: `line` is reused for block rows
    if (kind == "end") {
      ended = true;
      break;
    }
    if (kind == "meta") {
      const std::size_t start = line.find("meta") + 4;
      std::string_view rest = std::string_view(line).substr(start);
      while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
      const std::size_t eq = rest.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        throw FormatError(reader.where() + ": meta line must be 'meta key=value'");
      }
      std::string key(rest.substr(0, eq));
      std::string value(rest.substr(eq + 1));
      if (key == "tensors") {
        declared = parse_int(value, reader.where());
      } else {
        ckpt.set_meta(std::move(key), std::move(value));
      }
      continue;
    }
    if (kind != "tensor" && kind != "table") {
      throw FormatError(reader.where() + ": unexpected '" + std::string(kind) + "'");
    }
    if (fields.size() != 4) {
      throw FormatError(reader.where() + ": expected '" + std::string(kind) + " NAME ROWS COLS'");
    }
    const std::string name(fields[1]);
    const auto rows = static_cast<Eigen::Index>(parse_int(fields[2], reader.where()));
    const auto cols = static_cast<Eigen::Index>(parse_int(fields[3], reader.where()));
    Eigen::MatrixXd values(rows, cols);
    std::vector<std::string> keys;
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (!reader.next(line)) {
        throw TruncatedFileError("checkpoint ends inside block '" + name + "' after " +
                                 std::to_string(r) + " of " + std::to_string(rows) + " rows");
      }
      if (kind == "table") {
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
          throw FormatError(reader.where() + ": table row needs 'key<TAB>values'");
        }
        keys.emplace_back(line.substr(0, tab));
        read_row(reader, std::string_view(line).substr(tab + 1), values, r, name);
      } else {
        read_row(reader, line, values, r, name);
      }
    }
    if (kind == "tensor") {
      ckpt.tensors.push_back({name, std::move(values)});
    } else {
      ckpt.tables.push_back({name, std::move(keys), std::move(values)});
    }
    ++blocks;
  }
  if (!ended) {
    throw TruncatedFileError("checkpoint ends without 'end' after " + std::to_string(blocks) +
                             " blocks");
  }
  if (declared) {
    if (static_cast<long long>(blocks) < *declared) {
      throw TruncatedFileError("checkpoint announces " + std::to_string(*declared) +
                               " blocks but holds " + std::to_string(blocks));
    }
    if (static_cast<long long>(blocks) > *declared) {
      throw FormatError("checkpoint announces " + std::to_string(*declared) +
                        " blocks but holds " + std::to_string(blocks));
    }
  }
  return ckpt;
}

Checkpoint read_checkpoint_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  try {
    return read_checkpoint(in);
  } catch (const UnknownVersionError& e) {
    throw UnknownVersionError(path + ": " + e.what());
  } catch (const TruncatedFileError& e) {
    throw TruncatedFileError(path + ": " + e.what());
  } catch (const ShapeMismatchError& e) {
    throw ShapeMismatchError(path + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  out << kMagic << ' ' << Checkpoint::kVersion << '\n';
  for (const auto& [k, v] : ckpt.meta) out << "meta " << k << '=' << v << '\n';
  out << "meta tensors=" << ckpt.tensors.size() + ckpt.tables.size() << '\n';
  for (const auto& t : ckpt.tensors) {
    out << "tensor " << t.name << ' ' << t.values.rows() << ' ' << t.values.cols() << '\n';
    for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
        if (c > 0) out << ' ';
        out << format_value(t.values(r, c));
      }
      out << '\n';
    }
  }
  for (const auto& t : ckpt.tables) {
    out << "table " << t.name << ' ' << t.values.rows() << ' ' << t.values.cols() << '\n';
    for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
      out << t.keys[static_cast<std::size_t>(r)] << '\t';
      for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
        if (c > 0) out << ' ';
        out << format_value(t.values(r, c));
      }
      out << '\n';
    }
  }
  out << "end\n";
}

void write_checkpoint_file(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write checkpoint '" + path + "'");
  write_checkpoint(ckpt, out);
  if (!out) throw FormatError("failed writing checkpoint '" + path + "'");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Checkpoint to_checkpoint(const Model& model, const ModelProvenance& provenance) {
  const ModelConfig& cfg = model.config;
  Checkpoint ckpt;
  ckpt.set_meta("model", "sslstm");
  ckpt.set_meta("channels", std::string(to_string(cfg.channels)));
  ckpt.set_meta("semantic_hidden", std::to_string(cfg.semantic_hidden));
  ckpt.set_meta("sentiment_hidden", std::to_string(cfg.sentiment_hidden));
  ckpt.set_meta("fc_hidden", std::to_string(cfg.fc_hidden));
  ckpt.set_meta("fc_activation", std::string(to_string(cfg.fc_activation)));
  ckpt.set_meta("max_sequence_length", std::to_string(cfg.max_sequence_length));
  ckpt.set_meta("train_embeddings", cfg.train_embeddings ? "1" : "0");
  if (uses_semantic(cfg.channels)) {
    ckpt.set_meta("semantic_dim", std::to_string(model.semantic_table->dim()));
    ckpt.set_meta("semantic_embedding_hash", hex64(model.semantic_table->hash()));
  }
  if (uses_sentiment(cfg.channels)) {
    ckpt.set_meta("sentiment_dim", std::to_string(model.sentiment_table->dim()));
    ckpt.set_meta("sentiment_embedding_hash", hex64(model.sentiment_table->hash()));
  }
  if (provenance.lexicon_hash) ckpt.set_meta("lexicon_hash", hex64(*provenance.lexicon_hash));
  if (provenance.semantic_embedding_path) {
    ckpt.set_meta("semantic_embedding_path", *provenance.semantic_embedding_path);
  }
  if (provenance.sentiment_embedding_path) {
    ckpt.set_meta("sentiment_embedding_path", *provenance.sentiment_embedding_path);
  }
  for_each_tensor(cfg, model.params, [&](const char* name, const auto& t) {
    ckpt.tensors.push_back({name, Eigen::MatrixXd(t)});
  });
  return ckpt;
}

void save_checkpoint(const Model& model, std::ostream& out, const ModelProvenance& provenance) {
  write_checkpoint(to_checkpoint(model, provenance), out);
}

Model model_from_checkpoint(const Checkpoint& ckpt,
                            std::shared_ptr<const EmbeddingTable> semantic_table,
                            std::shared_ptr<const EmbeddingTable> sentiment_table) {
  const std::string& kind = ckpt.meta_value("model");
  if (kind != "sslstm") throw FormatError("checkpoint holds a '" + kind + "' model, not sslstm");

  auto as_int = [&](std::string_view key) {
    return parse_int(ckpt.meta_value(key), "checkpoint meta '" + std::string(key) + "'");
  };
  ModelConfig cfg;
  try {
    cfg.channels = parse_channels(ckpt.meta_value("channels"));
    cfg.fc_activation = parse_activation(ckpt.meta_value("fc_activation"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint meta: ") + e.what());
  }
  cfg.semantic_hidden = static_cast<Eigen::Index>(as_int("semantic_hidden"));
  cfg.sentiment_hidden = static_cast<Eigen::Index>(as_int("sentiment_hidden"));
  cfg.fc_hidden = static_cast<Eigen::Index>(as_int("fc_hidden"));
  cfg.max_sequence_length = static_cast<std::size_t>(as_int("max_sequence_length"));
  cfg.train_embeddings = ckpt.meta_value("train_embeddings") == "1";

  auto check_table = [&](const std::shared_ptr<const EmbeddingTable>& table, const char* channel) {
    const std::string prefix(channel);
    if (!table) throw FormatError("checkpoint needs a " + prefix + " embedding table");
    const long long dim = as_int(prefix + "_dim");
    if (dim != table->dim()) {
      throw ShapeMismatchError(prefix + " embeddings have dimension " + std::to_string(table->dim()) +
                               " but the checkpoint was trained with " + std::to_string(dim));
    }
    if (const std::string* h = ckpt.find_meta(prefix + "_embedding_hash")) {
      if (*h != hex64(table->hash())) {
        throw FormatError(prefix + " embedding table differs from the one the checkpoint was trained with");
      }
    }
  };
  if (uses_semantic(cfg.channels)) check_table(semantic_table, "semantic");
  if (uses_sentiment(cfg.channels)) check_table(sentiment_table, "sentiment");

  Model model;
  try {
    model = init_model<double>(cfg, std::move(semantic_table), std::move(sentiment_table), 0);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint configuration: ") + e.what());
  }
  std::size_t used = 0;
  for_each_tensor(model.config, model.params, [&](const char* name, auto& t) {
    const Checkpoint::Tensor* stored = ckpt.find_tensor(name);
    if (stored == nullptr) throw FormatError(std::string("checkpoint is missing tensor '") + name + "'");
    if (stored->values.rows() != t.rows() || stored->values.cols() != t.cols()) {
      throw ShapeMismatchError(std::string("tensor '") + name + "' is " +
                               std::to_string(stored->values.rows()) + "x" +
                               std::to_string(stored->values.cols()) + ", expected " +
                               std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
    }
    t = stored->values;
    ++used;
  });
  if (used != ckpt.tensors.size()) {
    throw FormatError("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                      " tensors but the configuration uses " + std::to_string(used));
  }
  return model;
}

Model load_checkpoint(std::istream& in, std::shared_ptr<const EmbeddingTable> semantic_table,
                      std::shared_ptr<const EmbeddingTable> sentiment_table) {
  return model_from_checkpoint(read_checkpoint(in), std::move(semantic_table),
                               std::move(sentiment_table));
}

}  // namespace sslstm
