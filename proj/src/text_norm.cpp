#include "sslstm/text_norm.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sslstm/errors.hpp"
#include "sslstm/hash.hpp"

namespace sslstm {
namespace {

// Kept byte-identical to data/emoticons.tsv (a unit test checks this).
constexpr std::string_view kBuiltinLexicon = R"lex(# Emoticon lexicon: raw<TAB>canonical<TAB>class
# class is one of happy, sad, angry, neutral
:)	:)	happy
:-)	:)	happy
=)	:)	happy
:]	:)	happy
🙂	:)	happy
😊	:)	happy
☺	:)	happy
😀	:)	happy
:D	:D	happy
:-D	:D	happy
=D	:D	happy
xD	:D	happy
XD	:D	happy
😃	:D	happy
😄	:D	happy
😁	:D	happy
😂	:D	happy
😆	:D	happy
;)	;)	happy
;-)	;)	happy
😉	;)	happy
:P	:P	happy
:p	:P	happy
:-P	:P	happy
:-p	:P	happy
😛	:P	happy
😜	:P	happy
<3	<3	happy
❤	<3	happy
😍	<3	happy
😘	<3	happy
:(	:(	sad
:-(	:(	sad
=(	:(	sad
:[	:(	sad
☹	:(	sad
🙁	:(	sad
😞	:(	sad
😔	:(	sad
:'(	:'(	sad
:'-(	:'(	sad
😢	:'(	sad
😭	:'(	sad
>:(	>:(	angry
>:-(	>:(	angry
😠	>:(	angry
😡	>:(	angry
🤬	>:(	angry
:@	:@	angry
:-@	:@	angry
:|	:|	neutral
:-|	:|	neutral
😐	:|	neutral
😑	:|	neutral
😒	:|	neutral
:/	:/	neutral
:-/	:/	neutral
:\	:/	neutral
😕	:/	neutral
:o	:o	neutral
:O	:o	neutral
:-o	:o	neutral
:-O	:o	neutral
😮	:o	neutral
😲	:o	neutral
)lex";

bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    if (c != static_cast<unsigned char>(prefix[i])) return false;
  }
  return true;
}

bool is_ascii(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

// Decodes one UTF-8 sequence. Malformed input decodes as a single byte with
// codepoint 0xFFFD so the tokenizer always advances.
struct Decoded {
  char32_t cp;
  std::size_t len;
};

Decoded decode_utf8(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 0;
  char32_t cp = 0;
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {0xFFFD, 1};
  }
  if (i + len > s.size()) return {0xFFFD, 1};
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return {0xFFFD, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len};
}

// Joiners, variation selectors and skin-tone modifiers carry no meaning of
// their own here.
bool is_ignorable(char32_t cp) {
  return cp == 0x200D || cp == 0xFE0E || cp == 0xFE0F || (cp >= 0x1F3FB && cp <= 0x1F3FF);
}

bool is_emoji(char32_t cp) {
  return (cp >= 0x1F000 && cp <= 0x1FAFF) || (cp >= 0x2600 && cp <= 0x27BF) ||
         (cp >= 0x2B00 && cp <= 0x2BFF) || (cp >= 0x2190 && cp <= 0x21FF);
}

bool is_word_start(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) return is_ascii_alnum(c);
  const Decoded d = decode_utf8(s, i);
  return !is_emoji(d.cp) && !is_ignorable(d.cp);
}

std::string ascii_lower(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

TokenKind kind_for(const std::string& surface, bool from_word, const EmoticonLexicon& lex) {
  if (lex.is_canonical(surface)) return TokenKind::emoticon;
  return from_word ? TokenKind::word : TokenKind::punctuation;
}

}  // namespace

std::string_view to_string(EmoticonClass c) {
  switch (c) {
    case EmoticonClass::happy: return "happy";
    case EmoticonClass::sad: return "sad";
    case EmoticonClass::angry: return "angry";
    case EmoticonClass::neutral: return "neutral";
  }
  return "?";
}

std::optional<EmoticonClass> parse_emoticon_class(std::string_view s) {
  for (auto c : {EmoticonClass::happy, EmoticonClass::sad, EmoticonClass::angry,
                 EmoticonClass::neutral}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

EmoticonLexicon EmoticonLexicon::from_entries(std::vector<Entry> entries) {
  EmoticonLexicon lex;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Entry& e = entries[i];
    if (e.raw.empty() || e.canonical.empty()) {
      throw FormatError("emoticon lexicon: empty form in entry " + std::to_string(i + 1));
    }
    if (std::any_of(e.raw.begin(), e.raw.end(),
                    [](char c) { return is_ascii_space(static_cast<unsigned char>(c)); })) {
      throw FormatError("emoticon lexicon: whitespace in raw form '" + e.raw + "'");
    }
    if (!lex.by_raw_.emplace(e.raw, i).second) {
      throw FormatError("emoticon lexicon: duplicate raw form '" + e.raw + "'");
    }
    lex.max_raw_len_ = std::max(lex.max_raw_len_, e.raw.size());
  }
  for (const Entry& e : entries) {
    auto it = lex.by_raw_.find(e.canonical);
    if (it == lex.by_raw_.end()) {
      throw FormatError("emoticon lexicon: canonical form '" + e.canonical +
                        "' is not listed as a raw form");
    }
    const Entry& self = entries[it->second];
    if (self.canonical != e.canonical || self.cls != e.cls) {
      throw FormatError("emoticon lexicon: canonical form '" + e.canonical +
                        "' does not map to itself with a consistent class");
    }
  }
  lex.entries_ = std::move(entries);
  return lex;
}

EmoticonLexicon EmoticonLexicon::load(std::istream& in) {
  std::vector<Entry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      cols.emplace_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 3) {
      throw FormatError("emoticon lexicon line " + std::to_string(line_no) +
                        ": expected 3 tab-separated columns, got " +
                        std::to_string(cols.size()));
    }
    auto cls = parse_emoticon_class(cols[2]);
    if (!cls) {
      throw FormatError("emoticon lexicon line " + std::to_string(line_no) +
                        ": unknown class '" + cols[2] + "'");
    }
    entries.push_back({cols[0], cols[1], *cls});
  }
  return from_entries(std::move(entries));
}

EmoticonLexicon EmoticonLexicon::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open emoticon lexicon '" + path + "'");
  return load(in);
}

const EmoticonLexicon& EmoticonLexicon::builtin() {
  static const EmoticonLexicon lex = [] {
    std::istringstream in{std::string(kBuiltinLexicon)};
    return load(in);
  }();
  return lex;
}

const EmoticonLexicon::Entry* EmoticonLexicon::find_raw(std::string_view raw) const {
  auto it = by_raw_.find(std::string(raw));
  return it == by_raw_.end() ? nullptr : &entries_[it->second];
}

bool EmoticonLexicon::is_canonical(std::string_view surface) const {
  const Entry* e = find_raw(surface);
  return e != nullptr && e->canonical == surface;
}

std::optional<EmoticonClass> EmoticonLexicon::class_of_canonical(std::string_view surface) const {
  const Entry* e = find_raw(surface);
  if (e == nullptr || e->canonical != surface) return std::nullopt;
  return e->cls;
}

std::optional<std::string> EmoticonLexicon::canonicalize(std::string_view surface) const {
  if (const Entry* e = find_raw(surface)) return e->canonical;
  if (surface.size() < 2 || !is_ascii(surface)) return std::nullopt;
  std::size_t end = surface.size();
  while (end > 1 && surface[end - 2] == surface.back()) --end;
  if (end == surface.size()) return std::nullopt;
  if (const Entry* e = find_raw(surface.substr(0, end))) return e->canonical;
  return std::nullopt;
}

std::size_t EmoticonLexicon::longest_prefix_match(std::string_view text) const {
  for (std::size_t len = std::min(max_raw_len_, text.size()); len > 0; --len) {
    if (by_raw_.count(std::string(text.substr(0, len))) != 0) return len;
  }
  return 0;
}

std::uint64_t EmoticonLexicon::hash() const {
  std::ostringstream out;
  save(out);
  return fnv1a64(out.str());
}

void EmoticonLexicon::save(std::ostream& out) const {
  for (const Entry& e : entries_) {
    out << e.raw << '\t' << e.canonical << '\t' << to_string(e.cls) << '\n';
  }
}

std::vector<Token> tokenize(std::string_view raw, const EmoticonLexicon& lex) {
  std::vector<Token> tokens;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    std::string surface = ascii_lower(std::move(word));
    word.clear();
    TokenKind kind = kind_for(surface, true, lex);
    tokens.push_back({std::move(surface), kind});
  };
  auto emit = [&](std::string surface) {
    flush();
    TokenKind kind = kind_for(surface, false, lex);
    tokens.push_back({std::move(surface), kind});
  };
  auto skip_to_space = [&](std::size_t i) {
    while (i < raw.size() && !is_ascii_space(static_cast<unsigned char>(raw[i]))) ++i;
    return i;
  };

  std::size_t i = 0;
  const std::size_t n = raw.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(raw[i]);
    if (is_ascii_space(c)) {
      flush();
      ++i;
      continue;
    }
    const bool at_boundary = word.empty();
    const std::string_view rest = raw.substr(i);

    if (at_boundary && (starts_with_ci(rest, "http") || starts_with_ci(rest, "www."))) {
      i = skip_to_space(i);
      continue;
    }

    if (const std::size_t m = lex.longest_prefix_match(rest); m > 0) {
      const std::string_view form = rest.substr(0, m);
      std::size_t end = i + m;
      if (is_ascii(form)) {
        while (end < n && raw[end] == form.back()) ++end;
      }
      const bool led_by_letter = is_ascii_alnum(static_cast<unsigned char>(form.front()));
      const bool ends_in_letter = is_ascii_alnum(static_cast<unsigned char>(form.back()));
      const bool glued_after = ends_in_letter && end < n && is_word_start(raw, end);
      if (!(led_by_letter && !at_boundary) && !glued_after) {
        emit(std::string(raw.substr(i, end - i)));
        i = end;
        continue;
      }
    }

    if (c == '@') {
      flush();
      ++i;
      while (i < n && (is_ascii_alnum(static_cast<unsigned char>(raw[i])) || raw[i] == '_')) ++i;
      continue;
    }

    if (c >= 0x80) {
      const Decoded d = decode_utf8(raw, i);
      if (is_ignorable(d.cp)) {
        // dropped
      } else if (is_emoji(d.cp)) {
        emit(std::string(raw.substr(i, d.len)));
      } else {
        word.append(raw.substr(i, d.len));
      }
      i += d.len;
      continue;
    }

    if (is_ascii_alnum(c)) {
      word.push_back(static_cast<char>(c));
    } else if (c == '\'' && !word.empty() && i + 1 < n && is_word_start(raw, i + 1)) {
      word.push_back('\'');
    } else if (c >= 0x20 && c != 0x7F) {
      emit(std::string(1, static_cast<char>(c)));
    }
    ++i;
  }
  flush();
  return tokens;
}

std::vector<Token> tokenize(std::string_view raw) {
  return tokenize(raw, EmoticonLexicon::builtin());
}

std::vector<Token> normalize_emoticons(std::span<const Token> tokens,
                                       const EmoticonLexicon& lex) {
  std::vector<Token> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) {
    if (auto canonical = lex.canonicalize(t.surface)) {
      out.push_back({std::move(*canonical), TokenKind::emoticon});
    } else {
      out.push_back(t);
    }
  }
  return out;
}

std::vector<Token> normalize_utterance(std::string_view raw, const EmoticonLexicon& lex) {
  return normalize_emoticons(tokenize(raw, lex), lex);
}

std::vector<Token> normalize_utterance(std::string_view raw) {
  return normalize_utterance(raw, EmoticonLexicon::builtin());
}

std::string serialize(std::span<const Token> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i].surface;
  }
  return out;
}

std::optional<EmoticonClass> emoticon_class(const Token& token, const EmoticonLexicon& lex) {
  return lex.class_of_canonical(token.surface);
}

}  // namespace sslstm
