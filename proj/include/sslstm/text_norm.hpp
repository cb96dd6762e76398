#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sslstm {

enum class TokenKind { word, emoticon, punctuation };

struct Token {
  std::string surface;
  TokenKind kind = TokenKind::word;

  friend bool operator==(const Token&, const Token&) = default;
};

enum class EmoticonClass { happy, sad, angry, neutral };

std::string_view to_string(EmoticonClass c);
std::optional<EmoticonClass> parse_emoticon_class(std::string_view s);

/// Raw emoticon spellings (ASCII and emoji) mapped onto a small set of
/// canonical forms. Immutable once built; share freely across threads.
class EmoticonLexicon {
 public:
  struct Entry {
    std::string raw;
    std::string canonical;
    EmoticonClass cls;
  };

  EmoticonLexicon() = default;

  /// Validates that raw forms are unique and every canonical form maps to
  /// itself with a consistent class. Throws FormatError otherwise.
  static EmoticonLexicon from_entries(std::vector<Entry> entries);
  /// `raw<TAB>canonical<TAB>class` lines; '#' starts a comment line.
  static EmoticonLexicon load(std::istream& in);
  static EmoticonLexicon load_file(const std::string& path);
  /// The lexicon shipped in data/emoticons.tsv, compiled in.
  static const EmoticonLexicon& builtin();

  const std::vector<Entry>& entries() const { return entries_; }
  const Entry* find_raw(std::string_view raw) const;
  bool is_canonical(std::string_view surface) const;
  std::optional<EmoticonClass> class_of_canonical(std::string_view surface) const;

  /// Canonical form for a raw token, allowing a repeated final character
  /// (":(((" resolves like ":("). Empty when not an emoticon.
  std::optional<std::string> canonicalize(std::string_view surface) const;

  /// Longest raw form that is a prefix of `text`, in bytes; 0 when none.
  std::size_t longest_prefix_match(std::string_view text) const;

  std::uint64_t hash() const;
  void save(std::ostream& out) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> by_raw_;
  std::size_t max_raw_len_ = 0;
};

/// Splits raw text into tokens. Drops @-handles and URLs, lowercases ASCII
/// letters in word tokens, keeps apostrophes inside words, emits every other
/// punctuation character as its own token and keeps emoticons recognised by
/// `lex` (including repeated-mouth runs) as single tokens.
std::vector<Token> tokenize(std::string_view raw, const EmoticonLexicon& lex);
std::vector<Token> tokenize(std::string_view raw);

std::vector<Token> normalize_emoticons(std::span<const Token> tokens,
                                       const EmoticonLexicon& lex);

std::vector<Token> normalize_utterance(std::string_view raw, const EmoticonLexicon& lex);
std::vector<Token> normalize_utterance(std::string_view raw);

/// Space-joined surfaces.
std::string serialize(std::span<const Token> tokens);

std::optional<EmoticonClass> emoticon_class(const Token& token, const EmoticonLexicon& lex);

}  // namespace sslstm
