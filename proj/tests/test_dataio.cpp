#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "sslstm/dataio.hpp"
#include "sslstm/errors.hpp"

using namespace sslstm;

namespace {

std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    read_dataset(in, "d.tsv");
  } catch (const FormatError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("reads labeled and unlabeled rows") {
  std::istringstream in(
      "# header comment\n"
      "1\thi\thello\tI am sad :(\tsad\n"
      "2\tyo\tsup\tnothing much\n");
  const Dataset ds = read_dataset(in);
  REQUIRE(ds.conversations.size() == 2);
  CHECK(ds.conversations[0].label == Label::sad);
  CHECK_FALSE(ds.conversations[1].label.has_value());
  CHECK_FALSE(ds.fully_labeled());
  CHECK_THROWS_AS(ds.labels(), FormatError);
  const auto ex = to_examples(Dataset{{ds.conversations[0]}}, EmoticonLexicon::builtin());
  CHECK(serialize(ex[0].tokens) == "i am sad :(");
}

TEST_CASE("labels parse case-insensitively") {
  std::istringstream in("a\tx\ty\tz\tHappy\nb\tx\ty\tz\tOTHERS\n");
  CHECK(read_dataset(in).labels() == std::vector<Label>{Label::happy, Label::others});
}

TEST_CASE("format errors name the line") {
  CHECK(error_of("1\ta\tb\tc\td\te\n").find("line 1") != std::string::npos);
  CHECK(error_of("1\ta\tb\tc\tjoyful\n").find("line 1") != std::string::npos);
  CHECK(error_of("1\ta\tb\tc\n1\ta\tb\tc\n").find("line 2") != std::string::npos);
  CHECK(error_of("1\ta\tb\t\n").find("line 1") != std::string::npos);
  CHECK(error_of("1\ta\n").find("d.tsv") != std::string::npos);
}

TEST_CASE("writing rejects tabs and newlines") {
  Dataset ds{{{"1", "a\tb", "c", "d", Label::sad}}};
  std::ostringstream out;
  CHECK_THROWS_AS(write_dataset(ds, out), FormatError);
  ds.conversations[0].turn1 = "a\nb";
  CHECK_THROWS_AS(write_dataset(ds, out), FormatError);
}

TEST_CASE("write then read is byte identical") {
  std::mt19937_64 rng(8);
  const std::vector<std::string> pieces = {"hi", "😒", ":'(", "don't", "x", " ", "!!", "é", "<3"};
  auto random_text = [&] {
    std::string s = pieces[rng() % pieces.size()];
    for (int i = 0; i < 4; ++i) s += pieces[rng() % pieces.size()];
    return s;
  };
  for (int trial = 0; trial < 50; ++trial) {
    Dataset ds;
    for (int i = 0; i < 10; ++i) {
      std::optional<Label> label;
      if (trial % 2 == 0 || i % 3 != 0) label = label_at(rng() % 4);
      ds.conversations.push_back({"id" + std::to_string(i), random_text(), random_text(), random_text(), label});
    }
    std::ostringstream first;
    write_dataset(ds, first);
    std::istringstream in(first.str());
    const Dataset back = read_dataset(in);
    CHECK(back.conversations == ds.conversations);
    std::ostringstream second;
    write_dataset(back, second);
    CHECK(second.str() == first.str());
  }
}

TEST_CASE("file round trip") {
  const auto path = test::temp_path("data.tsv").string();
  const Dataset ds{{{"7", "a", "b", "c", Label::angry}}};
  write_dataset_file(ds, path);
  CHECK(read_labeled_dataset_file(path).conversations == ds.conversations);
  CHECK_THROWS_AS(read_dataset_file(path + ".missing"), FormatError);
}

TEST_CASE("judgments and majority") {
  std::istringstream in("q1\t3\t0\t0\t0\nq2\t1\t1\t1\t0\nq3\t0\t2\t1\t0\n");
  const Judgments j = read_judgments(in);
  CHECK(j.judges == 3);
  CHECK(j.ids == std::vector<std::string>{"q1", "q2", "q3"});
  CHECK(majority_label(j.counts.row(0)) == Label::happy);
  CHECK_FALSE(majority_label(j.counts.row(1)).has_value());
  CHECK(majority_label(j.counts.row(2)) == Label::sad);

  std::istringstream uneven("q1\t3\t0\t0\t0\nq2\t1\t0\t0\t0\n");
  try {
    read_judgments(uneven, "j.tsv");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}
