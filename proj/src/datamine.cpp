#include "sslstm/datamine.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "sslstm/errors.hpp"

namespace sslstm {
namespace {

std::vector<Eigen::VectorXd> embed_all(std::span<const Utterance> utterances, const EmbeddingTable& table) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(utterances.size());
  for (const Utterance& u : utterances) out.push_back(sentence_embedding(table, u.tokens));
  return out;
}

}  // namespace

Utterance Utterance::from_text(std::string text, const EmoticonLexicon& lex) {
  Utterance u;
  u.tokens = normalize_utterance(text, lex);
  u.text = std::move(text);
  return u;
}

void MiningConfig::validate() const {
  if (!(cosine_threshold > 0.0 && cosine_threshold <= 1.0)) {
    throw std::invalid_argument("mining: cosine threshold must lie in (0, 1]");
  }
  if (!(negative_rejection_threshold > 0.0 && negative_rejection_threshold <= 1.0)) {
    throw std::invalid_argument("mining: negative rejection threshold must lie in (0, 1]");
  }
  if (max_utterance_length == 0) throw std::invalid_argument("mining: max utterance length must be positive");
}

std::vector<Candidate> mine_candidates(std::span<const Utterance> seeds,
                                       std::span<const Utterance> pool,
                                       const EmbeddingTable& table, const MiningConfig& cfg) {
  cfg.validate();
  if (seeds.empty()) throw std::invalid_argument("mine_candidates: no seed utterances");
  const auto seed_vecs = embed_all(seeds, table);
  std::vector<Candidate> out;
  for (std::size_t p = 0; p < pool.size(); ++p) {
    const Eigen::VectorXd v = sentence_embedding(table, pool[p].tokens);
    Candidate best{p, 0, cosine_similarity(seed_vecs[0], v)};
    for (std::size_t s = 1; s < seed_vecs.size(); ++s) {
      const double score = cosine_similarity(seed_vecs[s], v);
      if (score > best.score) {
        best.score = score;
        best.seed_index = s;
      }
    }
    if (best.score >= cfg.cosine_threshold) out.push_back(best);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  return out;
}

PruneResult prune_heuristics(std::span<const Candidate> candidates, std::span<const Utterance> pool,
                             Label target, const EmoticonLexicon& lex, const MiningConfig& cfg) {
  EmoticonClass wanted = EmoticonClass::neutral;
  switch (target) {
    case Label::happy: wanted = EmoticonClass::happy; break;
    case Label::sad: wanted = EmoticonClass::sad; break;
    case Label::angry: wanted = EmoticonClass::angry; break;
    case Label::others:
      throw std::invalid_argument("prune_heuristics: target must be happy, sad or angry");
  }
  PruneResult result;
  for (const Candidate& c : candidates) {
    if (c.pool_index >= pool.size()) throw std::out_of_range("prune_heuristics: candidate outside the pool");
    const auto& tokens = pool[c.pool_index].tokens;
    const bool opposite = std::any_of(tokens.begin(), tokens.end(), [&](const Token& t) {
      const auto cls = emoticon_class(t, lex);
      return cls && *cls != EmoticonClass::neutral && *cls != wanted;
    });
    if (opposite) {
      result.removed.push_back({c, std::string(kReasonOppositeEmoticon)});
    } else if (tokens.size() > cfg.max_utterance_length) {
      result.removed.push_back({c, std::string(kReasonLength)});
    } else {
      result.kept.push_back(c);
    }
  }
  return result;
}

std::vector<ResponseCandidate> mine_by_response(std::span<const QAPair> pairs,
                                                const std::set<std::string>& class_utterances,
                                                const MiningConfig& cfg) {
  std::vector<std::string> q_keys;
  std::vector<std::string> a_keys;
  q_keys.reserve(pairs.size());
  a_keys.reserve(pairs.size());
  for (const QAPair& p : pairs) {
    q_keys.push_back(p.q.key());
    a_keys.push_back(p.a.key());
  }

  std::vector<std::string> responses;  // first-seen order
  std::unordered_map<std::string, std::size_t> frequency;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (class_utterances.count(q_keys[i]) == 0) continue;
    auto [it, inserted] = frequency.try_emplace(a_keys[i], 0);
    if (inserted) responses.push_back(a_keys[i]);
    ++it->second;
  }
  std::stable_sort(responses.begin(), responses.end(), [&](const std::string& a, const std::string& b) {
    return frequency[a] > frequency[b];
  });
  std::vector<std::string> kept;
  for (const std::string& r : responses) {
    if (kept.size() >= cfg.top_k_responses) break;
    if (frequency[r] >= cfg.min_response_frequency) kept.push_back(r);
  }

  std::vector<ResponseCandidate> out;
  std::unordered_set<std::string> emitted;
  for (const std::string& r : kept) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (a_keys[i] != r || class_utterances.count(q_keys[i]) != 0) continue;
      if (!emitted.insert(q_keys[i]).second) continue;
      out.push_back({i, r, frequency[r]});
    }
  }
  return out;
}

std::vector<std::size_t> sample_without_replacement(std::size_t count, std::size_t n, std::uint64_t seed) {
  if (n > count) throw std::invalid_argument("sample_without_replacement: n exceeds population");
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> sample_negatives(std::span<const Utterance> pool,
                                          std::span<const std::vector<Utterance>> positive_sets,
                                          const EmbeddingTable& table, const MiningConfig& cfg,
                                          std::size_t n, std::uint64_t seed) {
  cfg.validate();
  std::vector<Eigen::VectorXd> positives;
  std::unordered_set<std::string> positive_keys;
  for (const auto& set : positive_sets) {
    for (const Utterance& u : set) {
      positives.push_back(sentence_embedding(table, u.tokens));
      positive_keys.insert(u.key());
    }
  }
  std::vector<std::size_t> eligible;
  for (std::size_t p = 0; p < pool.size(); ++p) {
    if (positive_keys.count(pool[p].key()) != 0) continue;
    const Eigen::VectorXd v = sentence_embedding(table, pool[p].tokens);
    const bool close = std::any_of(positives.begin(), positives.end(), [&](const Eigen::VectorXd& q) {
      return cosine_similarity(q, v) >= cfg.negative_rejection_threshold;
    });
    if (!close) eligible.push_back(p);
  }
  if (eligible.size() < n) {
    throw InsufficientDataError("sample_negatives: requested " + std::to_string(n) + " negatives but only " +
                                std::to_string(eligible.size()) + " pool items are eligible (short by " +
                                std::to_string(n - eligible.size()) + ")");
  }
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t k : sample_without_replacement(eligible.size(), n, seed)) out.push_back(eligible[k]);
  return out;
}

std::vector<QAPair> read_qa_pairs(std::istream& in, const EmoticonLexicon& lex, std::string_view source) {
  std::vector<QAPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw FormatError(std::string(source) + " line " + std::to_string(line_no) +
                        ": expected 'question<TAB>answer'");
    }
    QAPair p{Utterance::from_text(line.substr(0, tab), lex), Utterance::from_text(line.substr(tab + 1), lex)};
    if (p.q.tokens.empty() || p.a.tokens.empty()) continue;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Utterance> read_utterances(std::istream& in, const EmoticonLexicon& lex) {
  std::vector<Utterance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    Utterance u = Utterance::from_text(line, lex);
    if (u.tokens.empty()) continue;
    out.push_back(std::move(u));
  }
  return out;
}

void write_judge_queue(std::span<const JudgeQueueRow> rows, std::ostream& out) {
  char buf[32];
  for (const JudgeQueueRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f", r.score);
    out << r.utterance << '\t' << buf << '\t' << r.matched << '\t' << r.reason << '\n';
  }
}

}  // namespace sslstm
