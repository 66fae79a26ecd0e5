#pragma once

#include <string>
#include <string_view>

namespace rag {

// True if `data` is well-formed UTF-8.
bool is_valid_utf8(std::string_view data);

// Canonicalizes line endings (CRLF and CR become LF) and applies Unicode NFKC.
// Internal whitespace is preserved so byte offsets into the result stay
// meaningful. Throws ParseError on invalid UTF-8.
std::string normalize_text(std::string_view raw);

// ceil(bytes / 4), minimum 1. The token-size convention used by every module.
int token_estimate(std::string_view text);

inline bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f';
}

}  // namespace rag
