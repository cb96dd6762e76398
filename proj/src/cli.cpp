#include "sslstm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "sslstm/baselines.hpp"
#include "sslstm/checkpoint.hpp"
#include "sslstm/dataio.hpp"
#include "sslstm/datamine.hpp"
#include "sslstm/embeddings.hpp"
#include "sslstm/errors.hpp"
#include "sslstm/metrics.hpp"
#include "sslstm/neural.hpp"
#include "sslstm/text_norm.hpp"
#include "sslstm/training.hpp"

namespace sslstm::cli {
namespace {

/// Bad flag combinations found after CLI11 accepted the command line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Options {
  // shared
  std::string output;
  std::string lexicon;
  std::uint64_t seed = 0;

  // normalize
  std::string input;
  std::string format = "text";

  // data paths
  std::string data;
  std::string train_path;
  std::string validation_path;
  std::string model_path;
  std::string compare_path;
  std::string semantic_emb;
  std::string sentiment_emb;

  // split
  double ratio = 0.9;
  std::string train_out;
  std::string validation_out;

  // train
  std::string type = "sslstm";
  std::string channels = "both";
  long semantic_hidden = 128;
  long sentiment_hidden = 128;
  long fc_hidden = 128;
  std::string fc_activation = "relu";
  std::size_t max_length = 50;
  bool train_embeddings = false;
  double learning_rate = 0.005;
  std::size_t token_budget = 4000;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::size_t parallel = 1;
  std::vector<double> class_weights;
  double alpha = 1.0;
  double lambda = 0.005;
  std::size_t svm_epochs = 20;

  // eval
  std::string report_format = "text";

  // embcos
  std::string pairs_path;

  // mine
  std::string mode;
  std::string seeds_path;
  std::string pool_path;
  std::string emb_path;
  std::vector<std::string> positives;
  std::string target;
  double threshold = 0.8;
  double reject_threshold = 0.8;
  std::size_t mine_max_length = 30;
  std::size_t top_k = 100;
  std::size_t min_frequency = 2;
  std::size_t count = 0;

  // stats / kappa
  std::vector<std::int64_t> counts;
  std::string judgments;

  // gradcheck
  std::size_t trials = 20;
  long dim = 4;
  long hidden = 3;
  std::size_t length = 4;
  double epsilon = 1e-4;
  double tolerance = 1e-4;
  std::string gc_activation = "tanh";
};

// ---------------------------------------------------------------------------
// shared helpers

const EmoticonLexicon& lexicon_for(const Options& o, std::optional<EmoticonLexicon>& storage) {
  if (o.lexicon.empty()) return EmoticonLexicon::builtin();
  storage = EmoticonLexicon::load_file(o.lexicon);
  return *storage;
}

std::shared_ptr<const EmbeddingTable> load_table(const std::string& path, const char* name) {
  return std::make_shared<const EmbeddingTable>(load_embedding_file(path, name));
}

std::vector<std::string> read_lines(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw FormatError(std::string("cannot open ") + what + " '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<Utterance> load_utterances(const std::string& path, const EmoticonLexicon& lex,
                                       const char* what) {
  std::ifstream in(path);
  if (!in) throw FormatError(std::string("cannot open ") + what + " '" + path + "'");
  return read_utterances(in, lex);
}

/// Any of the three model kinds, loaded from a checkpoint.
struct LoadedModel {
  std::string kind;
  std::optional<Model> sslstm;
  std::optional<NaiveBayes> nb;
  std::optional<LinearSvm> svm;

  std::vector<Label> predict(std::span<const Example> examples, const EmoticonLexicon& lex) const {
    if (sslstm) return predict_all(*sslstm, examples);
    std::vector<Label> out;
    out.reserve(examples.size());
    for (const Example& e : examples) {
      const FeatureVector f = extract_features(e.tokens, lex);
      out.push_back(nb ? nb_predict(*nb, f) : svm_predict(*svm, f));
    }
    return out;
  }
};

LoadedModel load_model(const std::string& path, const Options& o, const EmoticonLexicon& lex) {
  const Checkpoint ckpt = read_checkpoint_file(path);
  if (const std::string* h = ckpt.find_meta("lexicon_hash"); h && *h != hex64(lex.hash())) {
    throw FormatError("checkpoint '" + path + "' was built with emoticon lexicon " + *h +
                      " but the loaded lexicon is " + hex64(lex.hash()));
  }
  LoadedModel m;
  m.kind = ckpt.meta_value("model");
  if (m.kind == "nb") {
    m.nb = naive_bayes_from_checkpoint(ckpt);
  } else if (m.kind == "svm") {
    m.svm = linear_svm_from_checkpoint(ckpt);
  } else if (m.kind == "sslstm") {
    const Channels ch = parse_channels(ckpt.meta_value("channels"));
    auto table_for = [&](bool used, const std::string& flag_value, const char* meta_key,
                         const char* flag, const char* name) -> std::shared_ptr<const EmbeddingTable> {
      if (!used) return nullptr;
      std::string p = flag_value;
      if (p.empty()) {
        const std::string* recorded = ckpt.find_meta(meta_key);
        if (!recorded) {
          throw UsageError(std::string(flag) + " is required: checkpoint '" + path +
                           "' records no embedding path");
        }
        p = *recorded;
      }
      return load_table(p, name);
    };
    auto sem = table_for(uses_semantic(ch), o.semantic_emb, "semantic_embedding_path", "--semantic-emb",
                         "semantic");
    auto sen = table_for(uses_sentiment(ch), o.sentiment_emb, "sentiment_embedding_path",
                         "--sentiment-emb", "sentiment");
    m.sslstm = model_from_checkpoint(ckpt, std::move(sem), std::move(sen));
  } else {
    throw FormatError("checkpoint '" + path + "': unknown model kind '" + m.kind + "'");
  }
  return m;
}

void reject_flags(const std::vector<const CLI::Option*>& opts, const std::string& context) {
  for (const CLI::Option* opt : opts) {
    if (opt->count() > 0) throw UsageError(opt->get_name() + " cannot be used " + context);
  }
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_normalize(const Options& o, std::ostream& out) {
  std::optional<EmoticonLexicon> lex_storage;
  const EmoticonLexicon& lex = lexicon_for(o, lex_storage);
  if (o.format == "dataset") {
    const Dataset ds = read_dataset_file(o.input);
    for (const Conversation& c : ds.conversations) {
      out << c.id << '\t' << serialize(normalize_utterance(c.turn3, lex)) << '\n';
    }
  } else {
    for (const std::string& line : read_lines(o.input, "input")) {
      out << serialize(normalize_utterance(line, lex)) << '\n';
    }
  }
  return kSuccess;
}

int cmd_split(const Options& o, std::ostream& out) {
  const Dataset ds = read_labeled_dataset_file(o.data);
  const std::vector<Label> labels = ds.labels();
  const auto [train_idx, val_idx] = split_indices(labels, o.ratio, o.seed);
  Dataset train_ds;
  Dataset val_ds;
  for (std::size_t i : train_idx) train_ds.conversations.push_back(ds.conversations[i]);
  for (std::size_t i : val_idx) val_ds.conversations.push_back(ds.conversations[i]);
  write_dataset_file(train_ds, o.train_out);
  write_dataset_file(val_ds, o.validation_out);
  out << "train\t" << train_idx.size() << "\nvalidation\t" << val_idx.size() << '\n';
  return kSuccess;
}

int cmd_train(const Options& o, const std::vector<const CLI::Option*>& sslstm_only,
              const std::vector<const CLI::Option*>& nb_only,
              const std::vector<const CLI::Option*>& svm_only, std::ostream& out) {
  if (o.type != "sslstm") reject_flags(sslstm_only, "with --type " + o.type);
  if (o.type != "nb") reject_flags(nb_only, "with --type " + o.type);
  if (o.type != "svm") reject_flags(svm_only, "with --type " + o.type);

  std::optional<EmoticonLexicon> lex_storage;
  const EmoticonLexicon& lex = lexicon_for(o, lex_storage);
  const std::vector<Example> all = to_examples(read_labeled_dataset_file(o.train_path), lex);

  std::vector<Example> train_set;
  std::vector<Example> validation_set;
  if (!o.validation_path.empty()) {
    train_set = all;
    validation_set = to_examples(read_labeled_dataset_file(o.validation_path), lex);
  } else if (o.type == "sslstm") {
    Split s = split_dataset(all, o.ratio, o.seed);
    train_set = std::move(s.train);
    validation_set = std::move(s.validation);
  } else {
    train_set = all;
  }
  if (train_set.empty()) throw InsufficientDataError("train: no training examples in '" + o.train_path + "'");

  if (o.type == "nb" || o.type == "svm") {
    Checkpoint ckpt;
    std::function<Label(const FeatureVector&)> predict;
    if (o.type == "nb") {
      auto model = std::make_shared<NaiveBayes>(nb_train(train_set, o.alpha, lex));
      ckpt = to_checkpoint(*model);
      predict = [model](const FeatureVector& f) { return nb_predict(*model, f); };
    } else {
      auto model = std::make_shared<LinearSvm>(svm_train(train_set, o.lambda, o.svm_epochs, o.seed, lex));
      ckpt = to_checkpoint(*model);
      predict = [model](const FeatureVector& f) { return svm_predict(*model, f); };
    }
    ckpt.set_meta("lexicon_hash", hex64(lex.hash()));
    write_checkpoint_file(ckpt, o.model_path);
    out << "model\t" << o.type << "\ntrain_examples\t" << train_set.size() << '\n';
    if (!validation_set.empty()) {
      std::vector<Label> pred;
      std::vector<Label> gold;
      for (const Example& e : validation_set) {
        pred.push_back(predict(extract_features(e.tokens, lex)));
        gold.push_back(e.label);
      }
      out << "validation_macro_f1\t" << fixed(evaluate(pred, gold).macro_f1, 2) << '\n';
    }
    return kSuccess;
  }

  ModelConfig cfg;
  cfg.channels = parse_channels(o.channels);
  cfg.semantic_hidden = o.semantic_hidden;
  cfg.sentiment_hidden = o.sentiment_hidden;
  cfg.fc_hidden = o.fc_hidden;
  cfg.fc_activation = parse_activation(o.fc_activation);
  cfg.max_sequence_length = o.max_length;
  cfg.train_embeddings = o.train_embeddings;

  std::shared_ptr<const EmbeddingTable> sem;
  std::shared_ptr<const EmbeddingTable> sen;
  if (uses_semantic(cfg.channels)) {
    if (o.semantic_emb.empty()) throw UsageError("--semantic-emb is required for --channels " + o.channels);
    sem = load_table(o.semantic_emb, "semantic");
  } else if (!o.semantic_emb.empty()) {
    throw UsageError("--semantic-emb cannot be used with --channels " + o.channels);
  }
  if (uses_sentiment(cfg.channels)) {
    if (o.sentiment_emb.empty()) throw UsageError("--sentiment-emb is required for --channels " + o.channels);
    sen = load_table(o.sentiment_emb, "sentiment");
  } else if (!o.sentiment_emb.empty()) {
    throw UsageError("--sentiment-emb cannot be used with --channels " + o.channels);
  }
  if (validation_set.empty()) {
    throw InsufficientDataError("train: validation set is empty; supply --validation or more data");
  }

  Model model = init_model<double>(cfg, sem, sen, o.seed);
  TrainConfig tc;
  tc.learning_rate = o.learning_rate;
  tc.token_budget = o.token_budget;
  tc.max_epochs = o.max_epochs;
  tc.patience = o.patience;
  tc.seed = o.seed;
  tc.channels = cfg.channels;
  tc.parallel = o.parallel;
  if (!o.class_weights.empty()) {
    if (o.class_weights.size() != kNumClasses) {
      throw UsageError("--class-weights expects 4 values (happy sad angry others)");
    }
    std::array<double, kNumClasses> w{};
    std::copy(o.class_weights.begin(), o.class_weights.end(), w.begin());
    tc.class_weights = w;
  }
  out << "epoch\ttrain_loss\ttrain_accuracy\tvalidation_macro_f1\n";
  tc.on_epoch = [&out](const EpochRecord& r) {
    out << r.epoch << '\t' << fixed(r.train_loss, 6) << '\t' << fixed(r.train_accuracy, 2) << '\t'
        << fixed(r.validation_macro_f1, 2) << '\n'
        << std::flush;
  };
  const TrainHistory history = train(model, train_set, validation_set, tc);
  out << "best_epoch\t" << history.best_epoch << '\n';

  ModelProvenance prov;
  prov.lexicon_hash = lex.hash();
  if (sem) prov.semantic_embedding_path = o.semantic_emb;
  if (sen) prov.sentiment_embedding_path = o.sentiment_emb;
  std::ofstream f(o.model_path);
  if (!f) throw FormatError("cannot write model '" + o.model_path + "'");
  save_checkpoint(model, f, prov);
  return kSuccess;
}

int cmd_eval(const Options& o, std::ostream& out) {
  std::optional<EmoticonLexicon> lex_storage;
  const EmoticonLexicon& lex = lexicon_for(o, lex_storage);
  const Dataset ds = read_labeled_dataset_file(o.data);
  const std::vector<Example> examples = to_examples(ds, lex);
  const std::vector<Label> gold = ds.labels();

  const std::vector<Label> pred = load_model(o.model_path, o, lex).predict(examples, lex);
  EvaluationReport report = evaluate(pred, gold);
  if (!o.compare_path.empty()) {
    const std::vector<Label> other = load_model(o.compare_path, o, lex).predict(examples, lex);
    // std::vector<bool> cannot back a span, hence plain arrays.
    std::unique_ptr<bool[]> fa(new bool[gold.size()]);
    std::unique_ptr<bool[]> fb(new bool[gold.size()]);
    for (std::size_t i = 0; i < gold.size(); ++i) {
      fa[i] = pred[i] == gold[i];
      fb[i] = other[i] == gold[i];
    }
    report.comparison = mcnemar(std::span<const bool>(fa.get(), gold.size()),
                                std::span<const bool>(fb.get(), gold.size()));
  }
  if (o.report_format == "tsv") {
    write_report_tsv(report, out);
  } else {
    write_report_text(report, out);
  }
  return kSuccess;
}

int cmd_predict(const Options& o, std::ostream& out) {
  std::optional<EmoticonLexicon> lex_storage;
  const EmoticonLexicon& lex = lexicon_for(o, lex_storage);
  const Dataset ds = read_dataset_file(o.data);
  std::vector<Example> examples;
  for (const Conversation& c : ds.conversations) {
    examples.push_back({normalize_utterance(c.turn3, lex), Label::others});
  }
  const std::vector<Label> pred = load_model(o.model_path, o, lex).predict(examples, lex);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    out << ds.conversations[i].id << '\t' << to_string(pred[i]) << '\n';
  }
  return kSuccess;
}

int cmd_embcos(const Options& o, std::ostream& out) {
  if (o.semantic_emb.empty() && o.sentiment_emb.empty()) {
    throw UsageError("embcos needs --semantic-emb and/or --sentiment-emb");
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  if (o.pairs_path.empty()) {
    pairs = {{"depression", ":'("}, {"happy", "sad"}, {"best", "great"}};
  } else {
    std::size_t line_no = 0;
    for (const std::string& line : read_lines(o.pairs_path, "word pairs")) {
      ++line_no;
      if (line.empty() || line.front() == '#') continue;
      const std::size_t tab = line.find('\t');
      if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
        throw FormatError(o.pairs_path + " line " + std::to_string(line_no) + ": expected 'word<TAB>word'");
      }
      pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
  }
  std::vector<std::pair<std::string, std::shared_ptr<const EmbeddingTable>>> tables;
  if (!o.semantic_emb.empty()) tables.emplace_back("semantic", load_table(o.semantic_emb, "semantic"));
  if (!o.sentiment_emb.empty()) tables.emplace_back("sentiment", load_table(o.sentiment_emb, "sentiment"));

  out << "word_a\tword_b";
  for (const auto& t : tables) out << '\t' << t.first;
  out << '\n';
  for (const auto& [a, b] : pairs) {
    out << a << '\t' << b;
    for (const auto& t : tables) {
      if (!t.second->contains(a) || !t.second->contains(b)) {
        out << "\toov";
      } else {
        out << '\t' << fixed(cosine_similarity(t.second->lookup(a), t.second->lookup(b)), 2);
      }
    }
    out << '\n';
  }
  return kSuccess;
}

int cmd_mine(const Options& o, const std::map<std::string, const CLI::Option*>& opts, std::ostream& out) {
  auto need = [&](std::initializer_list<const char*> names) {
    for (const char* n : names) {
      if (opts.at(n)->count() == 0) throw UsageError(std::string(n) + " is required with --mode " + o.mode);
    }
  };
  auto forbid = [&](std::initializer_list<const char*> names) {
    for (const char* n : names) {
      if (opts.at(n)->count() > 0) throw UsageError(std::string(n) + " cannot be used with --mode " + o.mode);
    }
  };

  std::optional<EmoticonLexicon> lex_storage;
  const EmoticonLexicon& lex = lexicon_for(o, lex_storage);
  MiningConfig cfg;
  cfg.cosine_threshold = o.threshold;
  cfg.negative_rejection_threshold = o.reject_threshold;
  cfg.max_utterance_length = o.mine_max_length;
  cfg.top_k_responses = o.top_k;
  cfg.min_response_frequency = o.min_frequency;
  cfg.validate();

  std::vector<JudgeQueueRow> rows;
  if (o.mode == "t1") {
    need({"--seeds", "--pool", "--emb", "--target"});
    forbid({"--pairs", "--positives", "--count", "--reject-threshold", "--top-k", "--min-frequency"});
    const auto target = parse_label(o.target);
    if (!target || *target == Label::others) throw UsageError("--target must be happy, sad or angry");
    const auto seeds = load_utterances(o.seeds_path, lex, "seed utterances");
    const auto pool = load_utterances(o.pool_path, lex, "utterance pool");
    const auto table = load_table(o.emb_path, "mining");
    const auto candidates = mine_candidates(seeds, pool, *table, cfg);
    const PruneResult pruned = prune_heuristics(candidates, pool, *target, lex, cfg);
    for (const Candidate& c : pruned.kept) {
      rows.push_back({pool[c.pool_index].text, c.score, seeds[c.seed_index].text, ""});
    }
    for (const PruneDecision& d : pruned.removed) {
      const Candidate& c = d.candidate;
      rows.push_back({pool[c.pool_index].text, c.score, seeds[c.seed_index].text, d.reason});
    }
  } else if (o.mode == "t2") {
    need({"--pairs", "--seeds"});
    forbid({"--pool", "--emb", "--target", "--positives", "--count", "--threshold", "--reject-threshold",
            "--max-length"});
    std::ifstream in(o.pairs_path);
    if (!in) throw FormatError("cannot open question-answer pairs '" + o.pairs_path + "'");
    const auto pairs = read_qa_pairs(in, lex, o.pairs_path);
    std::set<std::string> keys;
    for (const Utterance& u : load_utterances(o.seeds_path, lex, "seed utterances")) keys.insert(u.key());
    for (const ResponseCandidate& r : mine_by_response(pairs, keys, cfg)) {
      rows.push_back({pairs[r.pair_index].q.text, static_cast<double>(r.frequency), r.response, ""});
    }
  } else {
    need({"--pool", "--positives", "--emb", "--count"});
    forbid({"--seeds", "--pairs", "--target", "--threshold", "--max-length", "--top-k", "--min-frequency"});
    const auto pool = load_utterances(o.pool_path, lex, "utterance pool");
    std::vector<std::vector<Utterance>> positive_sets;
    for (const std::string& p : o.positives) positive_sets.push_back(load_utterances(p, lex, "positive utterances"));
    const auto table = load_table(o.emb_path, "mining");
    const auto chosen = sample_negatives(pool, positive_sets, *table, cfg, o.count, o.seed);
    std::vector<Eigen::VectorXd> pos_vecs;
    for (const auto& set : positive_sets) {
      for (const Utterance& u : set) pos_vecs.push_back(sentence_embedding(*table, u.tokens));
    }
    for (std::size_t i : chosen) {
      const Eigen::VectorXd v = sentence_embedding(*table, pool[i].tokens);
      double best = 0;
      for (const auto& q : pos_vecs) best = std::max(best, cosine_similarity(q, v));
      rows.push_back({pool[i].text, best, "others", ""});
    }
  }
  write_judge_queue(rows, out);
  return kSuccess;
}

int cmd_stats(const Options& o, std::ostream& out) {
  DatasetStats s;
  if (!o.data.empty()) {
    const std::vector<Label> labels = read_labeled_dataset_file(o.data).labels();
    s = dataset_stats(labels);
  } else {
    if (o.counts.empty()) throw UsageError("stats needs --data or --counts");
    if (o.counts.size() != kNumClasses) throw UsageError("--counts expects 4 values (happy sad angry others)");
    std::array<std::int64_t, kNumClasses> c{};
    std::copy(o.counts.begin(), o.counts.end(), c.begin());
    s = dataset_stats_from_counts(c);
  }
  out << "label\tcount\tpercent\n";
  for (Label l : kAllLabels) {
    const std::size_t i = index_of(l);
    out << to_string(l) << '\t' << s.counts[i] << '\t' << fixed(round2(s.percentages[i]), 2) << '\n';
  }
  out << "total\t" << s.total << "\t100.00\n";
  return kSuccess;
}

int cmd_kappa(const Options& o, std::ostream& out) {
  const Judgments j = read_judgments_file(o.judgments);
  std::array<std::int64_t, kNumClasses> majority{};
  std::int64_t ties = 0;
  for (Eigen::Index r = 0; r < j.counts.rows(); ++r) {
    if (const auto l = majority_label(j.counts.row(r))) {
      ++majority[index_of(*l)];
    } else {
      ++ties;
    }
  }
  out << "items\t" << j.counts.rows() << "\njudges\t" << j.judges << "\nkappa\t"
      << fixed(fleiss_kappa(j.counts, j.judges), 4) << '\n';
  for (Label l : kAllLabels) out << "majority_" << to_string(l) << '\t' << majority[index_of(l)] << '\n';
  out << "no_majority\t" << ties << '\n';
  return kSuccess;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  if (o.dim <= 0 || o.hidden <= 0 || o.length == 0 || o.trials == 0) {
    throw UsageError("--dim, --hidden, --length and --trials must be positive");
  }
  const Channels ch = parse_channels(o.channels);
  constexpr int kVocab = 6;
  double worst = 0;
  out << "trial\tmax_relative_error\tchecked\tworst_tensor\n";
  for (std::size_t t = 0; t < o.trials; ++t) {
    const std::uint64_t trial_seed = o.seed * 1000003ULL + t;
    std::mt19937_64 rng(trial_seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto random_table = [&](const char* name) {
      auto table = std::make_shared<EmbeddingTable>(name, o.dim);
      for (int w = 0; w < kVocab; ++w) {
        Eigen::VectorXd v(o.dim);
        for (Eigen::Index k = 0; k < o.dim; ++k) v[k] = u(rng);
        table->add("w" + std::to_string(w), v);
      }
      return std::shared_ptr<const EmbeddingTable>(table);
    };
    auto sem = random_table("semantic");
    auto sen = random_table("sentiment");
    ModelConfig cfg;
    cfg.channels = ch;
    cfg.semantic_hidden = o.hidden;
    cfg.sentiment_hidden = o.hidden;
    cfg.fc_hidden = o.hidden;
    cfg.fc_activation = parse_activation(o.gc_activation);
    cfg.train_embeddings = o.train_embeddings;
    Model model = init_model<double>(cfg, sem, sen, trial_seed);

    std::uniform_int_distribution<int> word(0, kVocab - 1);
    std::uniform_int_distribution<std::size_t> len(1, o.length);
    std::uniform_int_distribution<std::size_t> cls(0, kNumClasses - 1);
    Example ex;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) ex.tokens.push_back({"w" + std::to_string(word(rng)), TokenKind::word});
    ex.label = label_at(cls(rng));

    const GradientCheckResult r = gradient_check(model, ex, o.epsilon, trial_seed);
    worst = std::max(worst, r.max_relative_error);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", r.max_relative_error);
    out << t + 1 << '\t' << buf << '\t' << r.checked << '\t' << r.worst_tensor << '\n';
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", worst);
  const bool ok = worst < o.tolerance;
  out << "max\t" << buf << '\n' << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kSuccess : kNumericFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Emotion classification for conversational text", "sslstm"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", "1.0.0");

  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--output", o.output, "Write the report here instead of stdout");
  };
  auto add_lexicon = [&](CLI::App* sub) {
    sub->add_option("--lexicon", o.lexicon, "Emoticon lexicon TSV (default: built-in)")->check(CLI::ExistingFile);
  };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "Random seed"); };
  const auto channel_names = CLI::IsMember({"both", "semantic", "sentiment"});
  const auto activation_names = CLI::IsMember({"relu", "tanh", "identity"});

  auto* normalize = app.add_subcommand("normalize", "Tokenize and normalize utterances");
  normalize->add_option("--input", o.input, "Text file (one utterance per line) or dataset TSV")->required();
  normalize->add_option("--format", o.format, "Input format")->check(CLI::IsMember({"text", "dataset"}));
  add_lexicon(normalize);
  add_output(normalize);

  auto* split = app.add_subcommand("split", "Stratified train/validation split of a labeled dataset");
  split->add_option("--data", o.data, "Labeled dataset TSV")->required();
  split->add_option("--ratio", o.ratio, "Fraction of each label sent to train")
      ->check(CLI::Range(0.0, 1.0));
  split->add_option("--train-out", o.train_out, "Output path for the train part")->required();
  split->add_option("--validation-out", o.validation_out, "Output path for the validation part")->required();
  add_seed(split);
  add_output(split);

  auto* train_cmd = app.add_subcommand("train", "Train an SS-LSTM, naive Bayes or linear SVM model");
  train_cmd->add_option("--type", o.type, "Model type")->check(CLI::IsMember({"sslstm", "nb", "svm"}));
  train_cmd->add_option("--train", o.train_path, "Labeled training dataset TSV")->required();
  train_cmd->add_option("--validation", o.validation_path,
                        "Labeled validation dataset TSV (default: split off --train for sslstm)");
  train_cmd->add_option("--model", o.model_path, "Output checkpoint path")->required();
  train_cmd->add_option("--ratio", o.ratio, "Train fraction when splitting off validation")
      ->check(CLI::Range(0.0, 1.0));
  std::vector<const CLI::Option*> sslstm_only{
      train_cmd->add_option("--semantic-emb", o.semantic_emb, "Embedding file for the semantic channel"),
      train_cmd->add_option("--sentiment-emb", o.sentiment_emb, "Embedding file for the sentiment channel"),
      train_cmd->add_option("--channels", o.channels, "Active channels")->check(channel_names),
      train_cmd->add_option("--semantic-hidden", o.semantic_hidden, "Semantic LSTM hidden size")
          ->check(CLI::PositiveNumber),
      train_cmd->add_option("--sentiment-hidden", o.sentiment_hidden, "Sentiment LSTM hidden size")
          ->check(CLI::PositiveNumber),
      train_cmd->add_option("--fc-hidden", o.fc_hidden, "Fully connected layer width")->check(CLI::PositiveNumber),
      train_cmd->add_option("--fc-activation", o.fc_activation, "Fully connected activation")
          ->check(activation_names),
      train_cmd->add_option("--max-length", o.max_length, "Tokens kept per utterance")->check(CLI::PositiveNumber),
      train_cmd->add_flag("--train-embeddings", o.train_embeddings, "Fine-tune the word vectors"),
      train_cmd->add_option("--lr", o.learning_rate, "SGD learning rate")->check(CLI::PositiveNumber),
      train_cmd->add_option("--token-budget", o.token_budget, "Tokens per batch")->check(CLI::PositiveNumber),
      train_cmd->add_option("--max-epochs", o.max_epochs, "Epoch limit")->check(CLI::PositiveNumber),
      train_cmd->add_option("--patience", o.patience, "Epochs without validation improvement tolerated"),
      train_cmd->add_option("--parallel", o.parallel, "Gradient worker threads")->check(CLI::PositiveNumber),
      train_cmd->add_option("--class-weights", o.class_weights, "Loss weights: happy sad angry others")
          ->expected(4),
  };
  std::vector<const CLI::Option*> nb_only{
      train_cmd->add_option("--alpha", o.alpha, "Naive Bayes smoothing")->check(CLI::PositiveNumber),
  };
  std::vector<const CLI::Option*> svm_only{
      train_cmd->add_option("--lambda", o.lambda, "SVM regularization")->check(CLI::PositiveNumber),
      train_cmd->add_option("--svm-epochs", o.svm_epochs, "SVM passes over the data")->check(CLI::PositiveNumber),
  };
  add_seed(train_cmd);
  add_lexicon(train_cmd);
  add_output(train_cmd);

  auto* eval = app.add_subcommand("eval", "Score a model on a labeled dataset");
  eval->add_option("--model", o.model_path, "Checkpoint to evaluate")->required();
  eval->add_option("--data", o.data, "Labeled dataset TSV")->required();
  eval->add_option("--compare-model", o.compare_path, "Second checkpoint; adds a McNemar test");
  eval->add_option("--semantic-emb", o.semantic_emb, "Override the recorded semantic embedding path");
  eval->add_option("--sentiment-emb", o.sentiment_emb, "Override the recorded sentiment embedding path");
  eval->add_option("--format", o.report_format, "Report format")->check(CLI::IsMember({"text", "tsv"}));
  add_lexicon(eval);
  add_output(eval);

  auto* predict = app.add_subcommand("predict", "Label every conversation of a dataset");
  predict->add_option("--model", o.model_path, "Checkpoint")->required();
  predict->add_option("--data", o.data, "Dataset TSV; the label column is optional")->required();
  predict->add_option("--semantic-emb", o.semantic_emb, "Override the recorded semantic embedding path");
  predict->add_option("--sentiment-emb", o.sentiment_emb, "Override the recorded sentiment embedding path");
  add_lexicon(predict);
  add_output(predict);

  auto* embcos = app.add_subcommand("embcos", "Cosine similarity of word pairs under each embedding");
  embcos->add_option("--semantic-emb", o.semantic_emb, "Semantic embedding file");
  embcos->add_option("--sentiment-emb", o.sentiment_emb, "Sentiment embedding file");
  embcos->add_option("--pairs", o.pairs_path,
                     "word<TAB>word file (default: depression/:'(, happy/sad, best/great)");
  add_output(embcos);

  auto* mine = app.add_subcommand("mine", "Build judging queues from unlabeled utterances");
  std::map<std::string, const CLI::Option*> mine_opts;
  mine->add_option("--mode", o.mode, "t1: cosine to seeds, t2: shared responses, neg: negative sampling")
      ->required()
      ->check(CLI::IsMember({"t1", "t2", "neg"}));
  mine_opts["--seeds"] = mine->add_option("--seeds", o.seeds_path, "Seed utterances, one per line");
  mine_opts["--pool"] = mine->add_option("--pool", o.pool_path, "Unlabeled utterances, one per line");
  mine_opts["--pairs"] = mine->add_option("--pairs", o.pairs_path, "question<TAB>answer pairs");
  mine_opts["--emb"] = mine->add_option("--emb", o.emb_path, "Embedding file for sentence vectors");
  mine_opts["--positives"] =
      mine->add_option("--positives", o.positives, "Emotion-class utterance files (neg mode)");
  mine_opts["--target"] = mine->add_option("--target", o.target, "Emotion class of the seeds (t1 mode)");
  mine_opts["--threshold"] = mine->add_option("--threshold", o.threshold, "Cosine threshold for candidates");
  mine_opts["--reject-threshold"] =
      mine->add_option("--reject-threshold", o.reject_threshold, "Cosine above which a negative is rejected");
  mine_opts["--max-length"] =
      mine->add_option("--max-length", o.mine_max_length, "Longest candidate kept, in tokens");
  mine_opts["--top-k"] = mine->add_option("--top-k", o.top_k, "Responses kept by frequency (t2 mode)");
  mine_opts["--min-frequency"] =
      mine->add_option("--min-frequency", o.min_frequency, "Minimum response frequency (t2 mode)");
  mine_opts["--count"] = mine->add_option("--count", o.count, "Negatives to sample (neg mode)");
  add_seed(mine);
  add_lexicon(mine);
  add_output(mine);

  auto* stats = app.add_subcommand("stats", "Label distribution of a dataset");
  auto* stats_data = stats->add_option("--data", o.data, "Labeled dataset TSV");
  auto* stats_counts = stats->add_option("--counts", o.counts, "Raw counts: happy sad angry others")->expected(4);
  stats_data->excludes(stats_counts);
  add_output(stats);

  auto* kappa = app.add_subcommand("kappa", "Fleiss' kappa and majority labels of judge counts");
  kappa->add_option("--judgments", o.judgments, "item<TAB>happy<TAB>sad<TAB>angry<TAB>others counts")
      ->required();
  add_output(kappa);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the backward pass");
  gradcheck->add_option("--trials", o.trials, "Random models to check");
  gradcheck->add_option("--dim", o.dim, "Embedding width");
  gradcheck->add_option("--hidden", o.hidden, "LSTM and FC width");
  gradcheck->add_option("--length", o.length, "Longest random input");
  gradcheck->add_option("--epsilon", o.epsilon, "Finite-difference step")->check(CLI::PositiveNumber);
  gradcheck->add_option("--tolerance", o.tolerance, "Largest accepted relative error");
  gradcheck->add_option("--channels", o.channels, "Active channels")->check(channel_names);
  gradcheck->add_option("--fc-activation", o.gc_activation, "Fully connected activation")
      ->check(activation_names);
  gradcheck->add_flag("--train-embeddings", o.train_embeddings, "Also check embedding gradients");
  add_seed(gradcheck);
  add_output(gradcheck);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    std::ofstream file;
    std::ostream* report = &out;
    if (!o.output.empty()) {
      file.open(o.output);
      if (!file) throw FormatError("cannot write --output '" + o.output + "'");
      report = &file;
    }
    int code = kSuccess;
    if (normalize->parsed()) code = cmd_normalize(o, *report);
    else if (split->parsed()) code = cmd_split(o, *report);
    else if (train_cmd->parsed()) code = cmd_train(o, sslstm_only, nb_only, svm_only, *report);
    else if (eval->parsed()) code = cmd_eval(o, *report);
    else if (predict->parsed()) code = cmd_predict(o, *report);
    else if (embcos->parsed()) code = cmd_embcos(o, *report);
    else if (mine->parsed()) code = cmd_mine(o, mine_opts, *report);
    else if (stats->parsed()) code = cmd_stats(o, *report);
    else if (kappa->parsed()) code = cmd_kappa(o, *report);
    else if (gradcheck->parsed()) code = cmd_gradcheck(o, *report);
    report->flush();
    return code;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace sslstm::cli
