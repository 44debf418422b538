#ifndef ABSA_TEXT_HPP_
#define ABSA_TEXT_HPP_

// UTF-8 helpers. Offsets everywhere in the library count Unicode scalar values.

#include <cstddef>
#include <string>
#include <string_view>

namespace absa::text {

/// Throws ParseError on malformed UTF-8.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view codepoints);
std::string encode_utf8(char32_t codepoint);

std::size_t codepoint_length(std::string_view bytes);
/// Substring between scalar-value offsets [start, end).
std::string slice(std::string_view bytes, std::size_t start, std::size_t end);

bool is_space(char32_t c);
bool is_punctuation(char32_t c);

}  // namespace absa::text

#endif  // ABSA_TEXT_HPP_
