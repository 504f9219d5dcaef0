#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "reclab/events.hpp"

namespace reclab {

namespace detail {

// Decodes one UTF-8 codepoint starting at pos; advances pos. Malformed
// sequences decode as 0xFFFD and consume one byte.
inline std::uint32_t decode_utf8(std::string_view s, std::size_t& pos) {
  const unsigned char c0 = static_cast<unsigned char>(s[pos]);
  std::size_t len = 1;
  std::uint32_t cp = 0xFFFD;
  if (c0 < 0x80) {
    cp = c0;
  } else if ((c0 >> 5) == 0x6) {
    len = 2;
    cp = c0 & 0x1F;
  } else if ((c0 >> 4) == 0xE) {
    len = 3;
    cp = c0 & 0x0F;
  } else if ((c0 >> 3) == 0x1E) {
    len = 4;
    cp = c0 & 0x07;
  } else {
    ++pos;
    return 0xFFFD;
  }
  if (pos + len > s.size()) {
    ++pos;
    return 0xFFFD;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const unsigned char c = static_cast<unsigned char>(s[pos + i]);
    if ((c >> 6) != 0x2) {
      ++pos;
      return 0xFFFD;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  pos += len;
  return cp;
}

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Word characters: ASCII alphanumerics plus non-ASCII codepoints outside the
// common punctuation, symbol and format ranges. Intentionally generic; no
// language-specific normalization.
inline bool is_word_codepoint(std::uint32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  if (cp == 0xFFFD) return false;
  if (cp >= 0x80 && cp <= 0xBF) return false;       // Latin-1 punctuation/symbols
  if (cp == 0xD7 || cp == 0xF7) return false;       // multiply / divide signs
  if (cp >= 0x2000 && cp <= 0x206F) return false;   // general punctuation (incl. ZWNJ/ZWJ)
  if (cp >= 0x2E00 && cp <= 0x2E7F) return false;   // supplemental punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return false;   // CJK symbols and punctuation
  if (cp == 0x060C || cp == 0x061B || cp == 0x061F) return false;  // Arabic-script punctuation
  if (cp == 0x066A || cp == 0x066B || cp == 0x066C || cp == 0x066D) return false;
  if (cp == 0x06D4) return false;                   // Arabic full stop
  if (cp >= 0xFE50 && cp <= 0xFE6F) return false;   // small form variants
  if (cp >= 0xFF01 && cp <= 0xFF0F) return false;   // fullwidth punctuation
  return true;
}

// Case folding for ASCII and Latin-1 letters; other scripts pass through.
inline std::uint32_t fold_case(std::uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  return cp;
}

}  // namespace detail

// Unicode-aware word segmentation: maximal runs of word codepoints, case
// folded where the script has case, punctuation stripped.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::uint32_t cp = detail::decode_utf8(text, pos);
    if (detail::is_word_codepoint(cp)) {
      detail::append_utf8(current, detail::fold_case(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// Title tokens followed by the first body_limit body tokens.
struct Snippet {
  std::string item_id;
  std::vector<std::string> tokens;
  int body_limit = 0;
  bool empty_source = false;
};

inline Snippet extract_snippet(const ItemDocument& doc, int body_limit = 100) {
  if (body_limit < 0) throw std::invalid_argument("extract_snippet: body_limit must be >= 0");
  Snippet s;
  s.item_id = doc.item;
  s.body_limit = body_limit;
  s.tokens = tokenize(doc.title);
  std::vector<std::string> body = tokenize(doc.body);
  const std::size_t take = std::min<std::size_t>(body.size(), static_cast<std::size_t>(body_limit));
  s.tokens.insert(s.tokens.end(), body.begin(), body.begin() + take);
  s.empty_source = s.tokens.empty();
  return s;
}

}  // namespace reclab
