#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "sslstm/embeddings.hpp"
#include "sslstm/errors.hpp"

using namespace sslstm;

TEST_CASE("load with and without a header") {
  std::istringstream plain("a 1 0\nb 0 2\n");
  const auto t = load_embedding_file(plain, "t");
  CHECK(t.size() == 2);
  CHECK(t.dim() == 2);
  CHECK(t.lookup("b")[1] == 2.0);

  std::istringstream headed("2 2\na 1 0\nb 0 2\n");
  CHECK(load_embedding_file(headed, "t") == t);
}

TEST_CASE("load errors name the line") {
  auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      load_embedding_file(in, "t");
    } catch (const FormatError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("a 1 2\nb 1\n").find("line 2") != std::string::npos);
  CHECK(message("a 1 2\na 3 4\n").find("duplicate") != std::string::npos);
  CHECK(message("3 2\na 1 2\n").find("declares 3") != std::string::npos);
  CHECK(message("a 1 x\n").find("line 1") != std::string::npos);
  CHECK_FALSE(message("").empty());
}

TEST_CASE("save and reload is exact") {
  const auto t = test::random_table({"x", "y", ":'("}, 5, 3);
  std::stringstream ss;
  save_embedding_file(*t, ss);
  CHECK(load_embedding_file(ss, "t") == *t);
}

TEST_CASE("oov lookups are zero") {
  const auto t = test::random_table({"x"}, 3, 1);
  CHECK(t->index_of("nope") == -1);
  CHECK(t->lookup("nope").isZero());
}

TEST_CASE("cosine matches the term-by-term oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd a(6), b(6);
    for (int k = 0; k < 6; ++k) {
      a[k] = u(rng);
      b[k] = u(rng);
    }
    CHECK(cosine_similarity(a, b) == doctest::Approx(test::brute_cosine(a, b)).epsilon(1e-12));
    CHECK(cosine_similarity(a, b) == doctest::Approx(cosine_similarity(b, a)).epsilon(1e-15));
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, -a) == doctest::Approx(-1.0));
  }
}

TEST_CASE("cosine edge cases") {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd a = Eigen::VectorXd::Ones(3);
  CHECK(cosine_similarity(z, a) == 0.0);
  CHECK_THROWS_AS(cosine_similarity(a, Eigen::VectorXd::Ones(2)), std::invalid_argument);
  Eigen::Vector3f f(1, 2, 3);
  CHECK(cosine(f, f) == doctest::Approx(1.0));
}

TEST_CASE("sentence embedding averages known words only") {
  EmbeddingTable t("t", 2);
  t.add("a", Eigen::Vector2d(2, 0));
  t.add("b", Eigen::Vector2d(0, 4));
  const std::vector<Token> tokens = {{"a", TokenKind::word}, {"zzz", TokenKind::word}, {"b", TokenKind::word}};
  CHECK(sentence_embedding(t, tokens).isApprox(Eigen::Vector2d(1, 2)));
  const std::vector<Token> unknown = {{"zzz", TokenKind::word}};
  CHECK(sentence_embedding(t, unknown).isZero());
}

TEST_CASE("hash tracks content") {
  auto a = test::random_table({"x", "y"}, 3, 5);
  auto b = test::random_table({"x", "y"}, 3, 5);
  auto c = test::random_table({"x", "y"}, 3, 6);
  CHECK(a->hash() == b->hash());
  CHECK(a->hash() != c->hash());
}
