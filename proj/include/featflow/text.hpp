#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace featflow::text {

// Strict decoder; nullopt on malformed input or surrogates.
std::optional<std::u32string> decode_utf8(std::string_view bytes);
// Malformed sequences become U+FFFD.
std::u32string decode_utf8_lossy(std::string_view bytes);
std::string encode_utf8(std::u32string_view scalars);

// Unicode White_Space property.
bool is_whitespace(char32_t c);
// General category P* over ASCII, Latin-1, General Punctuation and CJK
// punctuation blocks.
bool is_punctuation(char32_t c);

std::string strip_whitespace(std::string_view s);
std::size_t count_scalars(std::string_view s);

// Split on whitespace, strip leading/trailing punctuation per token, drop
// empties. Internal punctuation ("don't") survives.
std::vector<std::string> tokenize_words(std::string_view s);

// ASCII case folding; other scalars pass through.
std::string to_lower(std::string_view s);

}  // namespace featflow::text
