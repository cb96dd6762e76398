#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sslstm/embeddings.hpp"
#include "sslstm/labels.hpp"
#include "sslstm/text_norm.hpp"

namespace sslstm {

/// Raw text plus its normalized tokens. `key()` (the space-joined tokens)
/// identifies equal utterances.
struct Utterance {
  std::string text;
  std::vector<Token> tokens;

  static Utterance from_text(std::string text, const EmoticonLexicon& lex);
  std::string key() const { return serialize(tokens); }
};

struct QAPair {
  Utterance q;
  Utterance a;
};

struct MiningConfig {
  double cosine_threshold = 0.8;
  std::size_t max_utterance_length = 30;
  std::size_t top_k_responses = 100;
  std::size_t min_response_frequency = 2;
  double negative_rejection_threshold = 0.8;

  void validate() const;
};

struct Candidate {
  std::size_t pool_index = 0;
  std::size_t seed_index = 0;  // best-matching seed
  double score = 0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Pool utterances whose best cosine against any seed (mean-pooled sentence
/// embeddings) reaches the threshold, sorted by score descending and then
/// by pool order.
std::vector<Candidate> mine_candidates(std::span<const Utterance> seeds,
                                       std::span<const Utterance> pool,
                                       const EmbeddingTable& table, const MiningConfig& cfg);

struct PruneDecision {
  Candidate candidate;
  std::string reason;  // empty when kept
};

struct PruneResult {
  std::vector<Candidate> kept;
  std::vector<PruneDecision> removed;
};

inline constexpr std::string_view kReasonOppositeEmoticon = "opposite-emoticon";
inline constexpr std::string_view kReasonLength = "length";

/// Drops candidates carrying an emoticon of another emotion class (neutral
/// ones are fine) or longer than the configured maximum. `target` must be
/// happy, sad or angry.
PruneResult prune_heuristics(std::span<const Candidate> candidates, std::span<const Utterance> pool,
                             Label target, const EmoticonLexicon& lex, const MiningConfig& cfg);

struct ResponseCandidate {
  std::size_t pair_index = 0;
  std::string response;  // normalized key of the shared answer
  std::size_t frequency = 0;

  friend bool operator==(const ResponseCandidate&, const ResponseCandidate&) = default;
};

/// Answers given to known class utterances are counted; the top-k with at
/// least the minimum frequency select every other question that drew one
/// of them. `class_utterances` holds normalized keys. Results follow
/// response rank, then pair order; each question key appears once.
std::vector<ResponseCandidate> mine_by_response(std::span<const QAPair> pairs,
                                                const std::set<std::string>& class_utterances,
                                                const MiningConfig& cfg);

/// Seeded uniform sample without replacement of `n` pool items whose best
/// cosine against every positive stays below the rejection threshold and
/// which are not token-identical to a positive. Returns sorted pool indices.
/// Throws InsufficientDataError naming the shortfall.
std::vector<std::size_t> sample_negatives(std::span<const Utterance> pool,
                                          std::span<const std::vector<Utterance>> positive_sets,
                                          const EmbeddingTable& table, const MiningConfig& cfg,
                                          std::size_t n, std::uint64_t seed);

/// The sampling primitive behind sample_negatives: `n` distinct positions
/// of `0..count-1`, sorted.
std::vector<std::size_t> sample_without_replacement(std::size_t count, std::size_t n,
                                                    std::uint64_t seed);

/// Reads `q<TAB>a` lines, dropping pairs that normalize to nothing.
std::vector<QAPair> read_qa_pairs(std::istream& in, const EmoticonLexicon& lex,
                                  std::string_view source = "pairs");
/// One utterance per line; blank lines and lines normalizing to nothing are skipped.
std::vector<Utterance> read_utterances(std::istream& in, const EmoticonLexicon& lex);

/// `utterance<TAB>score<TAB>matched_seed_or_response<TAB>reason_or_empty`.
struct JudgeQueueRow {
  std::string utterance;
  double score = 0;
  std::string matched;
  std::string reason;
};
void write_judge_queue(std::span<const JudgeQueueRow> rows, std::ostream& out);

}  // namespace sslstm
