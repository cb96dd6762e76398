#include <doctest.h>

#include <random>
#include <sstream>

#include "sslstm/baselines.hpp"
#include "sslstm/checkpoint.hpp"
#include "sslstm/errors.hpp"

using namespace sslstm;

namespace {

std::vector<Token> toks(const std::string& text) {
  std::vector<Token> out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) out.push_back({w, TokenKind::word});
  return out;
}

Example ex(const std::string& text, Label l) { return {toks(text), l}; }

std::vector<std::string> grams_of(const std::vector<std::string>& words) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::string g = words[i];
    out.push_back(g);
    for (std::size_t n = 1; n < 3 && i + n < words.size(); ++n) {
      g += " " + words[i + n];
      out.push_back(g);
    }
  }
  return out;
}

/// Posterior up to normalization, computed as a plain product.
std::array<long double, 4> brute_posterior(const std::vector<std::vector<std::string>>& docs,
                                           const std::vector<Label>& labels,
                                           const std::vector<std::string>& query, double alpha) {
  std::map<std::string, std::array<long double, 4>> counts;
  std::array<long double, 4> totals{}, prior{};
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const std::size_t c = index_of(labels[d]);
    prior[c] += 1.0L / docs.size();
    for (const auto& g : grams_of(docs[d])) {
      counts[g][c] += 1;
      totals[c] += 1;
    }
  }
  const long double v = counts.size();
  std::array<long double, 4> post = prior;
  for (const auto& g : grams_of(query)) {
    auto it = counts.find(g);
    if (it == counts.end()) continue;
    for (std::size_t c = 0; c < 4; ++c) post[c] *= (it->second[c] + alpha) / (totals[c] + alpha * v);
  }
  return post;
}

}  // namespace

TEST_CASE("feature extraction") {
  const auto empty = extract_features({}, EmoticonLexicon::builtin());
  CHECK(empty.ngrams.empty());
  CHECK(empty.emoticons == std::array<double, 3>{0, 0, 0});

  const std::vector<Token> emo = {{":)", TokenKind::emoticon}, {":)", TokenKind::emoticon},
                                  {":'(", TokenKind::emoticon}, {":|", TokenKind::emoticon}};
  CHECK(extract_features(emo, EmoticonLexicon::builtin()).emoticons == std::array<double, 3>{2, 1, 0});

  const auto ab = extract_features(toks("a b"), EmoticonLexicon::builtin());
  CHECK(ab.ngrams == std::map<std::string, double>{{"a", 1}, {"b", 1}, {"a b", 1}});
  const auto abca = extract_features(toks("a b c a"), EmoticonLexicon::builtin());
  CHECK(abca.ngrams.at("a") == 2);
  CHECK(abca.ngrams.at("a b c") == 1);
  CHECK(abca.ngrams.count("a b c a") == 0);
}

TEST_CASE("emoticon block ignores order") {
  std::vector<Token> t = {{":)", TokenKind::emoticon}, {"x", TokenKind::word}, {":(", TokenKind::emoticon}};
  const auto a = extract_features(t, EmoticonLexicon::builtin());
  std::reverse(t.begin(), t.end());
  const auto b = extract_features(t, EmoticonLexicon::builtin());
  CHECK(a.emoticons == b.emoticons);
  CHECK(a.ngrams != b.ngrams);
}

TEST_CASE("naive bayes hand cases") {
  const std::vector<Example> corpus = {ex("good good", Label::happy), ex("bad", Label::sad)};
  const auto nb = nb_train(corpus, 1.0);
  const auto lex = EmoticonLexicon::builtin();
  CHECK(nb_predict(nb, extract_features(toks("good"), lex)) == Label::happy);
  CHECK(nb_predict(nb, extract_features(toks("bad"), lex)) == Label::sad);
  CHECK(nb_predict(nb, extract_features(toks("unseen"), lex)) == Label::happy);  // equal priors
  const auto jll = nb.joint_log_likelihood(extract_features(toks("good"), lex));
  // V = {good, bad, "good good"}; happy has 3 tokens of n-grams, sad 1.
  CHECK(jll[0] == doctest::Approx(std::log(0.5) + std::log(3.0 / 6.0)));
  CHECK(jll[1] == doctest::Approx(std::log(0.5) + std::log(1.0 / 4.0)));
  CHECK(std::isinf(jll[2]));

  const auto tie = nb_train(std::vector<Example>{ex("x", Label::happy), ex("x", Label::sad)}, 1.0);
  CHECK(nb_predict(tie, extract_features(toks("x"), lex)) == Label::happy);

  const auto single = nb_train(std::vector<Example>{ex("a", Label::angry), ex("b c", Label::angry)}, 1.0);
  CHECK(nb_predict(single, extract_features(toks("b"), lex)) == Label::angry);

  const auto priors =
      nb_train(std::vector<Example>{ex("a", Label::sad), ex("b", Label::others), ex("c", Label::others)}, 1.0);
  CHECK(nb_predict(priors, FeatureVector{}) == Label::others);
  CHECK_THROWS_AS(nb_train(std::vector<Example>{}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(nb_train(corpus, 0.0), std::invalid_argument);
}

TEST_CASE("naive bayes matches brute-force posteriors on small corpora") {
  std::mt19937_64 rng(17);
  const auto& lex = EmoticonLexicon::builtin();
  int compared = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int vocab = std::uniform_int_distribution<int>(1, 10)(rng);
    const int ndocs = std::uniform_int_distribution<int>(1, 6)(rng);
    auto random_doc = [&] {
      std::vector<std::string> d(std::uniform_int_distribution<int>(1, 5)(rng));
      for (auto& w : d) w = "w" + std::to_string(std::uniform_int_distribution<int>(0, vocab - 1)(rng));
      return d;
    };
    std::vector<std::vector<std::string>> docs;
    std::vector<Label> labels;
    std::vector<FeatureVector> feats;
    for (int d = 0; d < ndocs; ++d) {
      docs.push_back(random_doc());
      labels.push_back(label_at(std::uniform_int_distribution<std::size_t>(0, 3)(rng)));
      std::vector<Token> t;
      for (const auto& w : docs.back()) t.push_back({w, TokenKind::word});
      feats.push_back(extract_features(t, lex));
    }
    const double alpha = trial % 2 == 0 ? 1.0 : 0.5;
    const auto nb = nb_train(feats, labels, alpha);
    for (int q = 0; q < 4; ++q) {
      const auto query = q < ndocs ? docs[q] : random_doc();
      std::vector<Token> t;
      for (const auto& w : query) t.push_back({w, TokenKind::word});
      const auto post = brute_posterior(docs, labels, query, alpha);
      const Label got = nb_predict(nb, extract_features(t, lex));
      const long double best = *std::max_element(post.begin(), post.end());
      std::size_t first_best = 0;
      while (post[first_best] < best) ++first_best;
      // Separate the exact answer from rounding-level ties.
      bool near_tie = false;
      for (std::size_t c = 0; c < 4; ++c) {
        if (c != first_best && post[c] > 0 && std::abs(post[c] - best) <= 1e-12L * best) near_tie = true;
      }
      if (near_tie) {
        CHECK(std::abs(post[index_of(got)] - best) <= 1e-12L * best);
      } else {
        CHECK(index_of(got) == first_best);
      }
      ++compared;
    }
  }
  CHECK(compared == 8000);
}

TEST_CASE("naive bayes is unchanged by duplicating the corpus with scaled smoothing") {
  const std::vector<Example> corpus = {ex("good day", Label::happy), ex("bad day", Label::sad),
                                       ex("so angry now", Label::angry), ex("a table", Label::others),
                                       ex("good good", Label::happy)};
  std::vector<Example> doubled = corpus;
  doubled.insert(doubled.end(), corpus.begin(), corpus.end());
  const auto a = nb_train(corpus, 1.0);
  const auto b = nb_train(doubled, 2.0);
  const auto& lex = EmoticonLexicon::builtin();
  for (const char* q : {"good", "day", "angry day", "table bad", "zzz"}) {
    const auto f = extract_features(toks(q), lex);
    CHECK(nb_predict(a, f) == nb_predict(b, f));
    const auto ja = a.joint_log_likelihood(f), jb = b.joint_log_likelihood(f);
    for (std::size_t c = 0; c < 4; ++c) {
      if (std::isfinite(ja[c])) CHECK(jb[c] == doctest::Approx(ja[c]).epsilon(1e-12));
    }
  }
}

TEST_CASE("svm separates a one-feature problem") {
  std::vector<FeatureVector> f(20);
  std::vector<Label> labels;
  for (int i = 0; i < 20; ++i) {
    f[i].ngrams["x"] = i % 2 == 0 ? 1.0 : -1.0;
    labels.push_back(i % 2 == 0 ? Label::happy : Label::sad);
  }
  const auto svm = svm_train(f, labels, 0.005, 50, 1);
  for (int i = 0; i < 20; ++i) CHECK(svm_predict(svm, f[i]) == labels[i]);
}

TEST_CASE("svm reaches full training accuracy on separable keyword data") {
  const char* keys[] = {"yay", "cry", "grr", "desk"};
  std::vector<Example> data;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 40; ++i) {
    const std::size_t c = i % 4;
    std::string text = std::string(keys[c]) + " the w" + std::to_string(rng() % 5);
    data.push_back(ex(text, label_at(c)));
  }
  const auto svm = svm_train(data, 0.005, 30, 2);
  const auto& lex = EmoticonLexicon::builtin();
  for (const auto& e : data) CHECK(svm_predict(svm, extract_features(e.tokens, lex)) == e.label);
  const auto again = svm_train(data, 0.005, 30, 2);
  CHECK(again.ngram_weights == svm.ngram_weights);
  CHECK(again.bias == svm.bias);
}

TEST_CASE("svm emoticon features separate classes") {
  std::vector<Example> data;
  for (int i = 0; i < 10; ++i) {
    data.push_back({{{":)", TokenKind::emoticon}}, Label::happy});
    data.push_back({{{":(", TokenKind::emoticon}}, Label::sad});
    data.push_back({{{">:(", TokenKind::emoticon}}, Label::angry});
  }
  const auto svm = svm_train(data, 0.005, 30, 0);
  CHECK(svm.emoticon_weights(0, 0) > 0);
  for (const auto& e : data) {
    CHECK(svm_predict(svm, extract_features(e.tokens, EmoticonLexicon::builtin())) == e.label);
  }
}

TEST_CASE("svm scoring rules") {
  LinearSvm zero;
  CHECK(svm_predict(zero, FeatureVector{}) == Label::happy);
  LinearSvm hand;
  hand.bias = Eigen::Vector4d(1, 3, 2, 0);
  CHECK(svm_predict(hand, FeatureVector{}) == Label::sad);
  hand.bias.array() += 100;
  CHECK(svm_predict(hand, FeatureVector{}) == Label::sad);

  std::vector<Example> data = {ex("a", Label::happy), ex("b", Label::sad), ex("b", Label::sad)};
  const auto flat = svm_train(data, 1e6, 5, 0);
  CHECK(flat.ngram_weights.cwiseAbs().maxCoeff() < 1e-3);
  CHECK_THROWS_AS(svm_train(std::vector<Example>{}, 0.005, 5, 0), std::invalid_argument);
  CHECK_THROWS_AS(svm_train(data, 0.0, 5, 0), std::invalid_argument);
}

TEST_CASE("baseline checkpoints round trip") {
  const std::vector<Example> data = {ex("good day", Label::happy), ex("bad day", Label::sad),
                                     ex("mad", Label::angry), ex("desk", Label::others)};
  const auto& lex = EmoticonLexicon::builtin();
  const auto nb = nb_train(data, 0.7);
  std::stringstream s1;
  write_checkpoint(to_checkpoint(nb), s1);
  const auto nb2 = naive_bayes_from_checkpoint(read_checkpoint(s1));
  const auto svm = svm_train(data, 0.005, 10, 4);
  std::stringstream s2;
  write_checkpoint(to_checkpoint(svm), s2);
  const auto svm2 = linear_svm_from_checkpoint(read_checkpoint(s2));
  for (const char* q : {"good", "bad day", "mad desk", "zzz"}) {
    const auto f = extract_features(toks(q), lex);
    CHECK(nb_predict(nb2, f) == nb_predict(nb, f));
    CHECK(svm_predict(svm2, f) == svm_predict(svm, f));
    CHECK((svm2.scores(f) - svm.scores(f)).cwiseAbs().maxCoeff() < 1e-6);
  }
  s1.clear();
  s1.seekg(0);
  CHECK_THROWS_AS(linear_svm_from_checkpoint(read_checkpoint(s1)), FormatError);
}
