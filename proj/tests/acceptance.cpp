// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "sslstm/baselines.hpp"
#include "sslstm/checkpoint.hpp"
#include "sslstm/dataio.hpp"
#include "sslstm/datamine.hpp"
#include "sslstm/errors.hpp"
#include "sslstm/metrics.hpp"
#include "sslstm/text_norm.hpp"
#include "sslstm/training.hpp"

using namespace sslstm;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "failed: " + what;
    }
  }
  void note(const std::string& what) {
    if (!pass) return;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<Token> words(const std::vector<std::string>& ws) {
  std::vector<Token> out;
  for (const auto& w : ws) out.push_back({w, TokenKind::word});
  return out;
}

double training_accuracy(const Model& m, const std::vector<Example>& data) {
  const auto pred = predict_all(m, data);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < data.size(); ++i) ok += pred[i] == data[i].label;
  return 100.0 * static_cast<double>(ok) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------

Outcome metric_arithmetic() {
  Outcome o;
  const double f1 = f1_score(41.35, 50.46);
  o.require(std::abs(f1 - 45.45) <= 0.01, "F1(41.35, 50.46) = " + fmt("%.4f", f1));
  const double ss = macro_f1(std::array<double, 3>{59.68, 80.79, 73.55});
  o.require(std::abs(ss - 71.34) <= 0.01, "macro-F1 71.34, got " + fmt("%.4f", ss));
  const double w2v = macro_f1(std::array<double, 3>{64.44, 74.71, 59.28});
  o.require(std::abs(w2v - 66.14) <= 0.01, "macro-F1 66.14, got " + fmt("%.4f", w2v));
  const auto s = dataset_stats_from_counts({109, 107, 90, 1920});
  const double want[] = {4.90, 4.81, 4.04, 86.25};
  for (std::size_t c = 0; c < 4; ++c) {
    o.require(round2(s.percentages[c]) == want[c], "percentage " + fmt("%.2f", want[c]));
  }
  o.note("F1 " + fmt("%.2f", f1) + ", macro " + fmt("%.2f", ss) + " / " + fmt("%.2f", w2v) + ", stats " +
         fmt("%.2f", round2(s.percentages[3])) + "%");
  return o;
}

Outcome gradient_correctness() {
  Outcome o;
  double worst = 0;
  const Activation acts[] = {Activation::tanh, Activation::relu, Activation::identity};
  const Channels chans[] = {Channels::both, Channels::semantic, Channels::sentiment};
  const int trials = 24;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(1000 + t);
    auto dim = [&] { return std::uniform_int_distribution<Eigen::Index>(1, 5)(rng); };
    const std::vector<std::string> vocab = {"a", "b", "c", "d"};
    ModelConfig cfg;
    cfg.channels = chans[t % 3];
    cfg.fc_activation = acts[(t / 3) % 3];
    cfg.semantic_hidden = dim();
    cfg.sentiment_hidden = dim();
    cfg.fc_hidden = dim();
    cfg.train_embeddings = t % 4 == 3;
    const Model m = init_model<double>(cfg, test::random_table(vocab, dim(), rng()),
                                       test::random_table(vocab, dim(), rng()), rng());
    Example ex;
    const int len = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int i = 0; i < len; ++i) ex.tokens.push_back({vocab[rng() % vocab.size()], TokenKind::word});
    ex.label = label_at(rng() % 4);
    const auto r = gradient_check(m, ex, 1e-4, t);
    worst = std::max(worst, r.max_relative_error);
  }
  o.require(worst < 1e-4, "max relative error " + fmt("%.3e", worst));
  o.note(std::to_string(trials) + " triples, max relative error " + fmt("%.2e", worst));
  return o;
}

/// 50 examples: filler words plus one keyword per class.
std::vector<Example> keyword_corpus(std::uint64_t seed) {
  const char* keys[] = {"elated", "grieving", "furious", "furniture"};
  const std::vector<std::string> fillers = {"i", "am", "so", "today", "really", "the"};
  std::mt19937_64 rng(seed);
  std::vector<Example> data;
  for (int i = 0; i < 50; ++i) {
    const std::size_t c = static_cast<std::size_t>(i) % 4;
    std::vector<std::string> ws;
    const int n = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int k = 0; k < n; ++k) ws.push_back(fillers[rng() % fillers.size()]);
    ws.insert(ws.begin() + static_cast<std::ptrdiff_t>(rng() % (ws.size() + 1)), keys[c]);
    data.push_back({words(ws), label_at(c)});
  }
  return data;
}

std::shared_ptr<EmbeddingTable> keyword_table(Eigen::Index dim, std::uint64_t seed) {
  auto t = test::random_table({"i", "am", "so", "today", "really", "the"}, dim, seed);
  const char* keys[] = {"elated", "grieving", "furious", "furniture"};
  for (int c = 0; c < 4; ++c) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    v[c % dim] = 2.0;
    if (c >= dim) v[(c + 1) % dim] = -2.0;
    t->add(keys[c], v);
  }
  return t;
}

Outcome overfit_oracle() {
  Outcome o;
  const auto data = keyword_corpus(5);
  const auto sem = keyword_table(6, 1);
  const auto sen = keyword_table(4, 2);
  for (Channels ch : {Channels::both, Channels::semantic, Channels::sentiment}) {
    ModelConfig cfg;
    cfg.channels = ch;
    cfg.semantic_hidden = 16;
    cfg.sentiment_hidden = 16;
    cfg.fc_hidden = 16;
    Model m = init_model<double>(cfg, sem, sen, 3);
    TrainConfig tc;
    tc.learning_rate = 0.005;
    tc.token_budget = 1;  // one example per step
    tc.max_epochs = 500;
    tc.patience = 500;
    tc.channels = ch;
    tc.seed = 7;
    std::size_t first_perfect = 0;
    tc.on_epoch = [&](const EpochRecord& r) {
      if (first_perfect == 0 && r.validation_macro_f1 >= 100.0) first_perfect = r.epoch;
    };
    const auto h = train(m, data, data, tc);
    const double acc = training_accuracy(m, data);
    o.require(acc == 100.0, std::string(to_string(ch)) + " reached " + fmt("%.1f", acc) + "%");
    o.note(std::string(to_string(ch)) + " 100% at epoch " + std::to_string(first_perfect) + " (best " +
           std::to_string(h.best_epoch) + ")");
  }
  return o;
}

/// Label = 2 * topic + polarity. The semantic table separates topic words and
/// collapses polarity words onto one vector; the sentiment table does the
/// opposite. Either channel alone therefore sees one bit: Bayes accuracy 50%.
struct DualTask {
  std::shared_ptr<EmbeddingTable> semantic;
  std::shared_ptr<EmbeddingTable> sentiment;
  std::vector<Example> train;
  std::vector<Example> validation;
};

DualTask dual_task(std::uint64_t seed) {
  const std::vector<std::string> topics[2] = {{"match", "goal", "team"}, {"exam", "grade", "class"}};
  const std::vector<std::string> polarity[2] = {{"love", "great", "won"}, {"hate", "awful", "lost"}};
  const std::vector<std::string> fillers = {"the", "my", "was", "today"};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  DualTask task;
  const Eigen::Index d = 4;
  task.semantic = std::make_shared<EmbeddingTable>("semantic", d);
  task.sentiment = std::make_shared<EmbeddingTable>("sentiment", d);
  Eigen::VectorXd shared_sem(d), shared_sen(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    shared_sem[k] = 0.5 * noise(rng);
    shared_sen[k] = 0.5 * noise(rng);
  }
  for (int a = 0; a < 2; ++a) {
    Eigen::VectorXd centre(d);
    for (Eigen::Index k = 0; k < d; ++k) centre[k] = noise(rng);
    for (const auto& w : topics[a]) {
      Eigen::VectorXd v = centre;
      for (Eigen::Index k = 0; k < d; ++k) v[k] += 0.2 * noise(rng);
      task.semantic->add(w, v);
      task.sentiment->add(w, shared_sen);
    }
  }
  for (int b = 0; b < 2; ++b) {
    Eigen::VectorXd centre(d);
    for (Eigen::Index k = 0; k < d; ++k) centre[k] = noise(rng);
    for (const auto& w : polarity[b]) {
      Eigen::VectorXd v = centre;
      for (Eigen::Index k = 0; k < d; ++k) v[k] += 0.2 * noise(rng);
      task.sentiment->add(w, v);
      task.semantic->add(w, shared_sem);
    }
  }
  for (const auto& w : fillers) {
    Eigen::VectorXd v(d);
    for (Eigen::Index k = 0; k < d; ++k) v[k] = 0.3 * noise(rng);
    task.semantic->add(w, v);
    task.sentiment->add(w, v);
  }
  auto sample = [&] {
    const int a = static_cast<int>(rng() % 2), b = static_cast<int>(rng() % 2);
    std::vector<std::string> ws = {fillers[rng() % fillers.size()], topics[a][rng() % 3],
                                   fillers[rng() % fillers.size()], polarity[b][rng() % 3]};
    if (rng() % 2) std::swap(ws[1], ws[3]);
    return Example{words(ws), label_at(static_cast<std::size_t>(2 * a + b))};
  };
  for (int i = 0; i < 200; ++i) task.train.push_back(sample());
  for (int i = 0; i < 200; ++i) task.validation.push_back(sample());
  return task;
}

Outcome dual_channel_advantage() {
  Outcome o;
  std::string summary;
  for (std::uint64_t seed : {1, 2, 3}) {
    const DualTask task = dual_task(seed);
    std::map<Channels, double> acc;
    for (Channels ch : {Channels::both, Channels::semantic, Channels::sentiment}) {
      ModelConfig cfg;
      cfg.channels = ch;
      cfg.semantic_hidden = 12;
      cfg.sentiment_hidden = 12;
      cfg.fc_hidden = 16;
      Model m = init_model<double>(cfg, task.semantic, task.sentiment, seed);
      TrainConfig tc;
      tc.learning_rate = 0.1;
      tc.token_budget = 16;
      tc.max_epochs = 60;
      tc.patience = 15;
      tc.channels = ch;
      tc.seed = seed;
      train(m, task.train, task.validation, tc);
      acc[ch] = training_accuracy(m, task.validation);
    }
    const std::string tag = "seed " + std::to_string(seed);
    o.require(acc[Channels::both] >= 90.0, tag + " both " + fmt("%.1f", acc[Channels::both]) + "%");
    o.require(acc[Channels::semantic] <= 80.0, tag + " semantic " + fmt("%.1f", acc[Channels::semantic]) + "%");
    o.require(acc[Channels::sentiment] <= 80.0,
              tag + " sentiment " + fmt("%.1f", acc[Channels::sentiment]) + "%");
    summary += (summary.empty() ? "" : ", ") + tag + ": both/sem/sen " + fmt("%.1f", acc[Channels::both]) + "/" +
               fmt("%.1f", acc[Channels::semantic]) + "/" + fmt("%.1f", acc[Channels::sentiment]);
  }
  o.note(summary);
  return o;
}

Outcome normalization() {
  Outcome o;
  const std::string got = serialize(normalize_utterance("Yeah! :((( My plan is cancelled 😒☹"));
  o.require(got == "yeah ! :( my plan is cancelled :| :(", "worked example gave '" + got + "'");
  const std::vector<std::string> pieces = {"Yeah", "no", "DON'T", " ", " ", "!", "?", ".", ":(((", ":-)", ":D", "xD",
                                           ":'(", ">:(", "<3", "😒", "☹", "❤️", "👍🏽", "🎉", "@user",
                                           "http://t.co/x", "'", "sooo", "é", ":p", "=)", "-", "(", ")"};
  std::mt19937_64 rng(99);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string raw;
    const int n = std::uniform_int_distribution<int>(0, 12)(rng);
    for (int k = 0; k < n; ++k) raw += pieces[rng() % pieces.size()];
    const auto once = normalize_utterance(raw);
    if (normalize_utterance(serialize(once)) != once) ++failures;
  }
  o.require(failures == 0, std::to_string(failures) + " fuzz cases not idempotent");
  o.note("worked example ok, 1000 fuzz cases idempotent");
  return o;
}

Outcome statistics() {
  Outcome o;
  const auto a = mcnemar_from_counts(10, 2);
  o.require(std::abs(a.statistic - 4.0833) <= 1e-4 && !a.significant, "McNemar(10, 2)");
  const auto b = mcnemar_from_counts(20, 0);
  o.require(std::abs(b.statistic - 18.05) <= 1e-4 && b.significant, "McNemar(20, 0)");
  Eigen::MatrixXi perfect(3, 2);
  perfect << 3, 0, 0, 3, 3, 0;
  o.require(fleiss_kappa(perfect, 3) == 1.0, "kappa on perfect agreement");
  // Definition by hand for rows (3,0), (0,3), (2,1) with 3 judges:
  // P_i = 1, 1, 1/3 -> P = 7/9; p_j = 5/9, 4/9 -> Pe = 41/81.
  const double by_hand = (7.0 / 9.0 - 41.0 / 81.0) / (1.0 - 41.0 / 81.0);
  Eigen::MatrixXi fixture(3, 2);
  fixture << 3, 0, 0, 3, 2, 1;
  const double k = fleiss_kappa(fixture, 3);
  o.require(std::abs(k - by_hand) < 1e-9, "kappa fixture " + fmt("%.12f", k));
  o.note("McNemar " + fmt("%.4f", a.statistic) + " / " + fmt("%.2f", b.statistic) + ", kappa " + fmt("%.4f", k));
  return o;
}

std::vector<std::string> grams(const std::vector<std::string>& ws) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    std::string g = ws[i];
    out.push_back(g);
    for (std::size_t n = 1; n < 3 && i + n < ws.size(); ++n) out.push_back(g += " " + ws[i + n]);
  }
  return out;
}

Outcome baseline_oracle() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::size_t compared = 0, mismatches = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const int vocab = 1 + trial % 10;
    const int ndocs = std::uniform_int_distribution<int>(1, 6)(rng);
    auto doc = [&] {
      std::vector<std::string> d(std::uniform_int_distribution<int>(1, 5)(rng));
      for (auto& w : d) w = "v" + std::to_string(rng() % vocab);
      return d;
    };
    std::vector<std::vector<std::string>> docs;
    std::vector<Example> corpus;
    for (int i = 0; i < ndocs; ++i) {
      docs.push_back(doc());
      corpus.push_back({words(docs.back()), label_at(rng() % 4)});
    }
    const NaiveBayes nb = nb_train(corpus, 1.0);
    // Brute-force posterior: prior times product of smoothed likelihoods.
    std::map<std::string, std::array<long double, 4>> counts;
    std::array<long double, 4> totals{}, prior{};
    for (int i = 0; i < ndocs; ++i) {
      const std::size_t c = index_of(corpus[i].label);
      prior[c] += 1.0L / ndocs;
      for (const auto& g : grams(docs[i])) {
        counts[g][c] += 1;
        totals[c] += 1;
      }
    }
    for (int q = 0; q < 3; ++q) {
      const auto query = q < ndocs ? docs[q] : doc();
      std::array<long double, 4> post = prior;
      for (const auto& g : grams(query)) {
        auto it = counts.find(g);
        if (it == counts.end()) continue;
        for (std::size_t c = 0; c < 4; ++c) {
          post[c] *= (it->second[c] + 1.0L) / (totals[c] + static_cast<long double>(counts.size()));
        }
      }
      const long double best = *std::max_element(post.begin(), post.end());
      const Label got = nb_predict(nb, extract_features(words(query), EmoticonLexicon::builtin()));
      const long double mine = post[index_of(got)];
      std::size_t first = 0;
      while (post[first] < best) ++first;
      const bool exact = index_of(got) == first;
      const bool rounding_tie = std::abs(mine - best) <= 1e-12L * best;
      if (!exact && !rounding_tie) ++mismatches;
      ++compared;
    }
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " NB mismatches");

  const char* keys[] = {"yay", "sob", "grr", "desk"};
  std::vector<Example> sep;
  for (int i = 0; i < 40; ++i) {
    sep.push_back({words({keys[i % 4], "the", "w" + std::to_string(i % 5)}), label_at(static_cast<std::size_t>(i % 4))});
  }
  const LinearSvm svm = svm_train(sep, 0.005, 30, 1);
  std::size_t ok = 0;
  for (const auto& e : sep) ok += svm_predict(svm, extract_features(e.tokens, EmoticonLexicon::builtin())) == e.label;
  o.require(ok == sep.size(), "SVM training accuracy " + std::to_string(ok) + "/" + std::to_string(sep.size()));

  std::vector<FeatureVector> one(20);
  std::vector<Label> one_labels;
  for (int i = 0; i < 20; ++i) {
    one[i].ngrams["x"] = i % 2 ? -1.0 : 1.0;
    one_labels.push_back(i % 2 ? Label::sad : Label::happy);
  }
  const LinearSvm tiny = svm_train(one, one_labels, 0.005, 50, 2);
  std::size_t ok1 = 0;
  for (int i = 0; i < 20; ++i) ok1 += svm_predict(tiny, one[i]) == one_labels[i];
  o.require(ok1 == 20, "one-feature SVM");
  o.note(std::to_string(compared) + " NB posteriors matched, SVM separable fixtures at 100%");
  return o;
}

Outcome mining_oracles() {
  Outcome o;
  const auto& lex = EmoticonLexicon::builtin();
  const std::vector<std::string> vocab = {"w0", "w1", "w2", "w3", "w4", "w5", "w6"};
  auto random_utts = [&](std::mt19937_64& rng, std::size_t n) {
    std::vector<Utterance> out;
    for (std::size_t i = 0; i < n; ++i) {
      std::string s;
      const int len = std::uniform_int_distribution<int>(1, 3)(rng);
      for (int k = 0; k < len; ++k) s += (k ? " " : "") + vocab[rng() % vocab.size()];
      out.push_back(Utterance::from_text(s, lex));
    }
    return out;
  };
  auto mean = [](const EmbeddingTable& t, const Utterance& u) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(t.dim());
    int n = 0;
    for (const auto& tok : u.tokens) {
      if (t.index_of(tok.surface) >= 0) {
        s += t.lookup(tok.surface);
        ++n;
      }
    }
    return n ? Eigen::VectorXd(s / n) : s;
  };
  std::size_t pools = 0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    std::mt19937_64 rng(trial);
    const auto table = test::random_table(vocab, 3, trial + 500);
    const auto seeds = random_utts(rng, 3);
    const auto pool = random_utts(rng, 20 + trial % 11);
    const MiningConfig cfg;
    std::map<std::size_t, double> expected;
    for (std::size_t p = 0; p < pool.size(); ++p) {
      double best = -2;
      for (const auto& s : seeds) best = std::max(best, test::brute_cosine(mean(*table, s), mean(*table, pool[p])));
      if (best >= cfg.cosine_threshold) expected[p] = best;
    }
    const auto got = mine_candidates(seeds, pool, *table, cfg);
    bool same = got.size() == expected.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = expected.count(got[i].pool_index) && std::abs(expected[got[i].pool_index] - got[i].score) < 1e-12 &&
             (i == 0 || got[i - 1].score >= got[i].score);
    }
    o.require(same, "mine_candidates trial " + std::to_string(trial));

    const std::vector<std::vector<Utterance>> positives = {random_utts(rng, 2)};
    std::vector<std::size_t> eligible;
    for (std::size_t p = 0; p < pool.size(); ++p) {
      bool reject = false;
      for (const auto& u : positives[0]) {
        reject |= u.key() == pool[p].key();
        reject |= test::brute_cosine(mean(*table, u), mean(*table, pool[p])) >= cfg.negative_rejection_threshold;
      }
      if (!reject) eligible.push_back(p);
    }
    const std::size_t n = eligible.size() / 2;
    std::vector<std::size_t> want;
    for (std::size_t k : sample_without_replacement(eligible.size(), n, trial)) want.push_back(eligible[k]);
    std::sort(want.begin(), want.end());
    o.require(sample_negatives(pool, positives, *table, cfg, n, trial) == want,
              "sample_negatives trial " + std::to_string(trial));
    ++pools;
  }
  const std::vector<Utterance> pool = {Utterance::from_text("best day ever :)", lex),
                                       Utterance::from_text("happy for you :'(", lex)};
  const std::vector<Candidate> cands = {{0, 0, 0.9}, {1, 0, 0.85}};
  const auto pr = prune_heuristics(cands, pool, Label::happy, lex, MiningConfig{});
  o.require(pr.kept.size() == 1 && pr.removed.size() == 1 && pr.removed[0].candidate.pool_index == 1 &&
                pr.removed[0].reason == "opposite-emoticon",
            "\":'(\" in a Happy candidate set was not pruned as opposite-emoticon");
  o.note(std::to_string(pools) + " pools matched brute-force scans, \":'(\" pruned as opposite-emoticon");
  return o;
}

Outcome round_trips() {
  Outcome o;
  const std::vector<std::string> vocab = {"i", "feel", "great", "bad", ":)", ":("};
  ModelConfig cfg;
  cfg.semantic_hidden = 6;
  cfg.sentiment_hidden = 5;
  cfg.fc_hidden = 7;
  const auto sem = test::random_table(vocab, 5, 1);
  const auto sen = test::random_table(vocab, 3, 2);
  const Model m = init_model<double>(cfg, sem, sen, 4);
  std::stringstream ss;
  save_checkpoint(m, ss);
  const Model back = load_checkpoint(ss, sem, sen);
  std::mt19937_64 rng(6);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<Token> t(1 + rng() % 6);
    for (auto& tok : t) tok = {vocab[rng() % vocab.size()], TokenKind::word};
    worst = std::max(worst, (class_probabilities(m, std::span<const Token>(t)) -
                             class_probabilities(back, std::span<const Token>(t)))
                                .cwiseAbs()
                                .maxCoeff());
  }
  o.require(worst < 1e-6, "checkpoint drift " + fmt("%.2e", worst));

  std::ostringstream first;
  Dataset ds;
  for (int i = 0; i < 30; ++i) {
    ds.conversations.push_back({"id" + std::to_string(i), "hey", "what's up 😒", "I'm so sad :'(",
                                i % 5 ? std::optional<Label>(label_at(i % 4)) : std::nullopt});
  }
  write_dataset(ds, first);
  std::istringstream in(first.str());
  std::ostringstream second;
  write_dataset(read_dataset(in), second);
  o.require(first.str() == second.str(), "dataset bytes differ after read/write");

  const auto data = keyword_corpus(8);
  TrainConfig tc;
  tc.learning_rate = 0.05;
  tc.token_budget = 20;
  tc.max_epochs = 8;
  tc.seed = 12;
  Model a = init_model<double>(cfg, keyword_table(5, 1), keyword_table(3, 2), 9);
  Model b = a;
  const auto ha = train(a, data, data, tc);
  const auto hb = train(b, data, data, tc);
  o.require(ha == hb, "TrainHistory differs between identical runs");
  o.note("max probability drift " + fmt("%.1e", worst) + ", dataset bytes identical, " +
         std::to_string(ha.epochs.size()) + "-epoch histories identical");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric arithmetic matches reference values", metric_arithmetic},
      {"analytic gradients match finite differences", gradient_correctness},
      {"overfits a separable keyword dataset", overfit_oracle},
      {"dual channel beats either single channel", dual_channel_advantage},
      {"normalization example and idempotence", normalization},
      {"McNemar and Fleiss' kappa", statistics},
      {"NB posterior oracle and separable SVM", baseline_oracle},
      {"mining matches brute-force scans", mining_oracles},
      {"checkpoint, dataset and history round trips", round_trips},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu: %s (%s) [%.1fs]\n", out.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), out.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !out.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
