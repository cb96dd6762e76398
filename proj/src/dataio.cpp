#include "sslstm/dataio.hpp"

#include <charconv>
#include <fstream>
#include <unordered_set>

#include "sslstm/errors.hpp"

namespace sslstm {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cols;
}

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

bool Dataset::fully_labeled() const {
  for (const Conversation& c : conversations) {
    if (!c.label) return false;
  }
  return true;
}

std::vector<Label> Dataset::labels() const {
  std::vector<Label> out;
  out.reserve(conversations.size());
  for (const Conversation& c : conversations) {
    if (!c.label) throw FormatError("conversation '" + c.id + "' has no label");
    out.push_back(*c.label);
  }
  return out;
}

Dataset read_dataset(std::istream& in, std::string_view source) {
  Dataset ds;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const std::string where = std::string(source) + " line " + std::to_string(line_no);
    const auto cols = split_tabs(line);
    if (cols.size() != 4 && cols.size() != 5) {
      throw FormatError(where + ": expected 4 or 5 tab-separated columns, got " + std::to_string(cols.size()));
    }
    Conversation c;
    c.id = std::string(cols[0]);
    c.turn1 = std::string(cols[1]);
    c.turn2 = std::string(cols[2]);
    c.turn3 = std::string(cols[3]);
    if (c.id.empty()) throw FormatError(where + ": empty id");
    if (blank(c.turn3)) throw FormatError(where + ": third turn is empty");
    if (cols.size() == 5) {
      c.label = parse_label(cols[4]);
      if (!c.label) throw FormatError(where + ": unknown label '" + std::string(cols[4]) + "'");
    }
    if (!ids.insert(c.id).second) throw FormatError(where + ": duplicate id '" + c.id + "'");
    ds.conversations.push_back(std::move(c));
  }
  return ds;
}

Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset '" + path + "'");
  return read_dataset(in, path);
}

Dataset read_labeled_dataset_file(const std::string& path) {
  Dataset ds = read_dataset_file(path);
  for (const Conversation& c : ds.conversations) {
    if (!c.label) throw FormatError(path + ": conversation '" + c.id + "' has no label");
  }
  return ds;
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  auto check = [](const std::string& field, const std::string& id) {
    if (field.find_first_of("\t\n\r") != std::string::npos) {
      throw FormatError("conversation '" + id + "' has a tab or newline inside a field");
    }
  };
  for (const Conversation& c : dataset.conversations) {
    for (const std::string* f : {&c.id, &c.turn1, &c.turn2, &c.turn3}) check(*f, c.id);
    out << c.id << '\t' << c.turn1 << '\t' << c.turn2 << '\t' << c.turn3;
    if (c.label) out << '\t' << to_string(*c.label);
    out << '\n';
  }
}

void write_dataset_file(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write dataset '" + path + "'");
  write_dataset(dataset, out);
}

std::vector<Example> to_examples(const Dataset& dataset, const EmoticonLexicon& lex) {
  std::vector<Example> out;
  out.reserve(dataset.conversations.size());
  for (const Conversation& c : dataset.conversations) {
    if (!c.label) throw FormatError("conversation '" + c.id + "' has no label");
    out.push_back({normalize_utterance(c.turn3, lex), *c.label});
  }
  return out;
}

Judgments read_judgments(std::istream& in, std::string_view source) {
  Judgments j;
  std::vector<std::array<int, kNumClasses>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const std::string where = std::string(source) + " line " + std::to_string(line_no);
    const auto cols = split_tabs(line);
    if (cols.size() != 1 + kNumClasses) {
      throw FormatError(where + ": expected 5 tab-separated columns, got " + std::to_string(cols.size()));
    }
    std::array<int, kNumClasses> row{};
    int sum = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      const std::string_view s = cols[k + 1];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), row[k]);
      if (ec != std::errc() || ptr != s.data() + s.size() || row[k] < 0) {
        throw FormatError(where + ": bad count '" + std::string(s) + "'");
      }
      sum += row[k];
    }
    if (rows.empty()) {
      if (sum < 2) throw FormatError(where + ": need at least 2 judgments per item");
      j.judges = sum;
    } else if (sum != j.judges) {
      throw FormatError(where + ": row sums to " + std::to_string(sum) + " but earlier rows sum to " +
                        std::to_string(j.judges));
    }
    j.ids.emplace_back(cols[0]);
    rows.push_back(row);
  }
  if (rows.empty()) throw FormatError(std::string(source) + ": no judgment rows");
  j.counts.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kNumClasses));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      j.counts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][k];
    }
  }
  return j;
}

Judgments read_judgments_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open judgments '" + path + "'");
  return read_judgments(in, path);
}

std::optional<Label> majority_label(const Eigen::Ref<const Eigen::RowVectorXi>& row) {
  Eigen::Index best = 0;
  const int top = row.maxCoeff(&best);
  if ((row.array() == top).count() > 1) return std::nullopt;
  return label_at(static_cast<std::size_t>(best));
}

}  // namespace sslstm
