#include "cosum/tokenize.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace cosum {
namespace {

enum class CharClass { word, apostrophe, joiner, separator };

bool is_apostrophe(UChar32 c) {
  return c == 0x27 || c == 0x2019 || c == 0x2018 || c == 0x02BC || c == 0x0060 || c == 0x00B4;
}

bool is_joiner(UChar32 c) {
  return c == '-' || c == '/' || c == 0x2010 || c == 0x2011;
}

CharClass classify(UChar32 c) {
  if (c < 0) return CharClass::separator;
  if (c < 0x80) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) {
      return CharClass::word;
    }
  } else if (u_isalnum(c)) {
    return CharClass::word;
  } else {
    const auto type = u_charType(c);
    if (type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK) return CharClass::word;
  }
  if (is_apostrophe(c)) return CharClass::apostrophe;
  if (is_joiner(c)) return CharClass::joiner;
  return CharClass::separator;
}

struct CodePoint {
  UChar32 value;
  std::size_t begin;
  std::size_t end;
};

std::vector<CodePoint> decode(std::string_view text) {
  std::vector<CodePoint> out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t start = i;
    UChar32 c = 0;
    U8_NEXT(s, i, length, c);
    out.push_back({c, static_cast<std::size_t>(start), static_cast<std::size_t>(i)});
  }
  return out;
}

void append_utf8(std::string& out, UChar32 c) {
  uint8_t buf[U8_MAX_LENGTH];
  int32_t len = 0;
  U8_APPEND_UNSAFE(buf, len, c);
  out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(len));
}

}  // namespace

std::vector<Token> tokenize_with_offsets(std::string_view text) {
  const auto cps = decode(text);
  std::vector<Token> tokens;
  Token current{{}, 0, 0};
  bool open = false;

  auto close = [&]() {
    if (open && !current.text.empty()) tokens.push_back(std::move(current));
    current = Token{{}, 0, 0};
    open = false;
  };

  for (std::size_t k = 0; k < cps.size(); ++k) {
    const CodePoint& cp = cps[k];
    switch (classify(cp.value)) {
      case CharClass::word:
        if (!open) {
          open = true;
          current.begin = cp.begin;
        }
        append_utf8(current.text, u_tolower(cp.value));
        current.end = cp.end;
        break;
      case CharClass::apostrophe:
        // Dropped without splitting; extends an open span.
        if (open) current.end = cp.end;
        break;
      case CharClass::joiner: {
        const bool next_is_word =
            k + 1 < cps.size() && classify(cps[k + 1].value) == CharClass::word;
        if (open && next_is_word) {
          current.end = cp.end;
        } else {
          close();
        }
        break;
      }
      case CharClass::separator:
        close();
        break;
    }
  }
  close();
  return tokens;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (Token& t : tokenize_with_offsets(text)) out.push_back(std::move(t.text));
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t first,
                        std::size_t count) {
  std::string out;
  for (std::size_t i = first; i < first + count; ++i) {
    if (i > first) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string normalize_phrase(std::string_view text) {
  const auto tokens = tokenize(text);
  return join_tokens(tokens, 0, tokens.size());
}

std::string to_upper(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const CodePoint& cp : decode(text)) {
    if (cp.value < 0) {
      out.append(text.substr(cp.begin, cp.end - cp.begin));
    } else {
      append_utf8(out, u_toupper(cp.value));
    }
  }
  return out;
}

}  // namespace cosum
