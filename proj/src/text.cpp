#include "rag/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "rag/errors.hpp"

namespace rag {

bool is_valid_utf8(std::string_view data) {
    std::size_t i = 0;
    const std::size_t n = data.size();
    while (i < n) {
        const unsigned char b0 = data[i];
        if (b0 < 0x80) {
            ++i;
            continue;
        }
        int len;
        unsigned char lo = 0x80, hi = 0xBF;
        if (b0 >= 0xC2 && b0 <= 0xDF) {
            len = 2;
        } else if (b0 == 0xE0) {
            len = 3;
            lo = 0xA0;
        } else if (b0 >= 0xE1 && b0 <= 0xEC) {
            len = 3;
        } else if (b0 == 0xED) {
            len = 3;
            hi = 0x9F;  // excludes surrogates
        } else if (b0 == 0xEE || b0 == 0xEF) {
            len = 3;
        } else if (b0 == 0xF0) {
            len = 4;
            lo = 0x90;
        } else if (b0 >= 0xF1 && b0 <= 0xF3) {
            len = 4;
        } else if (b0 == 0xF4) {
            len = 4;
            hi = 0x8F;
        } else {
            return false;
        }
        if (i + len > n) return false;
        const unsigned char b1 = data[i + 1];
        if (b1 < lo || b1 > hi) return false;
        for (int k = 2; k < len; ++k) {
            const unsigned char bk = data[i + k];
            if (bk < 0x80 || bk > 0xBF) return false;
        }
        i += len;
    }
    return true;
}

std::string normalize_text(std::string_view raw) {
    if (!is_valid_utf8(raw)) {
        throw ParseError("normalize_text: input is not valid UTF-8");
    }
    std::string noeol;
    noeol.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r') {
            noeol.push_back('\n');
            if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
        } else {
            noeol.push_back(raw[i]);
        }
    }

    UErrorCode ec = U_ZERO_ERROR;
    const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(ec);
    if (U_FAILURE(ec) || nfkc == nullptr) {
        throw Error("normalize_text: NFKC normalizer unavailable");
    }
    icu::UnicodeString decoded = icu::UnicodeString::fromUTF8(noeol);
    icu::UnicodeString normalized = nfkc->normalize(decoded, ec);
    if (U_FAILURE(ec)) {
        throw Error("normalize_text: normalization failed");
    }
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

int token_estimate(std::string_view text) {
    const std::size_t tokens = (text.size() + 3) / 4;
    return tokens == 0 ? 1 : static_cast<int>(tokens);
}

}  // namespace rag
