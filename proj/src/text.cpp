#include "featflow/text.hpp"

#include <algorithm>

namespace featflow::text {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Returns the scalar and advances `i`, or nullopt when malformed.
std::optional<char32_t> next_scalar(std::string_view s, std::size_t& i) {
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char b0 = byte(i);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
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
    return std::nullopt;
  }
  if (i + len > s.size()) return std::nullopt;
  for (int k = 1; k < len; ++k) {
    unsigned char b = byte(i + k);
    if ((b & 0xC0) != 0x80) return std::nullopt;
    cp = (cp << 6) | (b & 0x3F);
  }
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    return std::nullopt;
  }
  i += len;
  return cp;
}

}  // namespace

std::optional<std::u32string> decode_utf8(std::string_view bytes) {
  std::u32string out;
  std::size_t i = 0;
  while (i < bytes.size()) {
    auto cp = next_scalar(bytes, i);
    if (!cp) return std::nullopt;
    out.push_back(*cp);
  }
  return out;
}

std::u32string decode_utf8_lossy(std::string_view bytes) {
  std::u32string out;
  std::size_t i = 0;
  while (i < bytes.size()) {
    auto cp = next_scalar(bytes, i);
    if (cp) {
      out.push_back(*cp);
    } else {
      out.push_back(kReplacement);
      ++i;
    }
  }
  return out;
}

std::string encode_utf8(std::u32string_view scalars) {
  std::string out;
  for (char32_t c : scalars) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

bool is_whitespace(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 ||
         c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 ||
         c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

bool is_punctuation(char32_t c) {
  if (c < 0x80) {
    switch (c) {
      case '!': case '"': case '#': case '%': case '&': case '\'': case '(':
      case ')': case '*': case ',': case '-': case '.': case '/': case ':':
      case ';': case '?': case '@': case '[': case '\\': case ']': case '_':
      case '{': case '}':
        return true;
      default:
        return false;
    }
  }
  switch (c) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
      return true;
    default:
      break;
  }
  if (c >= 0x2010 && c <= 0x2027) return true;
  if (c >= 0x2030 && c <= 0x2043) return true;
  if (c >= 0x2045 && c <= 0x2051) return true;
  if (c >= 0x2053 && c <= 0x205E) return true;
  if (c >= 0x3001 && c <= 0x3003) return true;
  if (c >= 0x3008 && c <= 0x3011) return true;
  return false;
}

std::string strip_whitespace(std::string_view s) {
  std::u32string cps = decode_utf8_lossy(s);
  auto first = std::find_if_not(cps.begin(), cps.end(), is_whitespace);
  auto last = std::find_if_not(cps.rbegin(), cps.rend(), is_whitespace).base();
  if (first >= last) return {};
  return encode_utf8(std::u32string_view(&*first, static_cast<std::size_t>(last - first)));
}

std::size_t count_scalars(std::string_view s) {
  return decode_utf8_lossy(s).size();
}

std::vector<std::string> tokenize_words(std::string_view s) {
  std::vector<std::string> tokens;
  std::u32string cps = decode_utf8_lossy(s);
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && is_whitespace(cps[i])) ++i;
    std::size_t start = i;
    while (i < cps.size() && !is_whitespace(cps[i])) ++i;
    std::size_t end = i;
    while (start < end && is_punctuation(cps[start])) ++start;
    while (end > start && is_punctuation(cps[end - 1])) --end;
    if (end > start) {
      tokens.push_back(encode_utf8(std::u32string_view(cps).substr(start, end - start)));
    }
  }
  return tokens;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace featflow::text
