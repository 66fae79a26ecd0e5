#include "rag/corpus.hpp"

#include <fstream>
#include <unordered_set>

#include "json.hpp"
#include "rag/errors.hpp"
#include "rag/text.hpp"

namespace rag {

namespace {

struct DecodedChar {
    char32_t cp;
    int len;
};

// Decodes one code point from valid UTF-8.
DecodedChar decode_utf8(std::string_view s, std::size_t i) {
    const unsigned char b0 = s[i];
    if (b0 < 0x80) return {b0, 1};
    if (b0 < 0xE0) return {static_cast<char32_t>(((b0 & 0x1Fu) << 6) | (s[i + 1] & 0x3Fu)), 2};
    if (b0 < 0xF0) {
        return {static_cast<char32_t>(((b0 & 0x0Fu) << 12) | ((s[i + 1] & 0x3Fu) << 6) |
                                      (s[i + 2] & 0x3Fu)),
                3};
    }
    return {static_cast<char32_t>(((b0 & 0x07u) << 18) | ((s[i + 1] & 0x3Fu) << 12) |
                                  ((s[i + 2] & 0x3Fu) << 6) | (s[i + 3] & 0x3Fu)),
            4};
}

bool is_terminator(char32_t c) {
    return c == U'.' || c == U'!' || c == U'?' || c == U'．' || c == U'！' ||
           c == U'？';
}

bool is_closer(char32_t c) {
    switch (c) {
        case U'"':
        case U'\'':
        case U')':
        case U']':
        case U'}':
        case U'’':
        case U'”':
        case U'»':
        case U'）':
        case U'」':
        case U'』':
            return true;
        default:
            return false;
    }
}

bool trimmed_empty(std::string_view text) {
    for (unsigned char c : text) {
        if (!is_ascii_space(c)) return false;
    }
    return true;
}

}  // namespace

Document make_document(std::string doc_id, std::string title, std::string_view raw_text,
                       std::optional<std::string> source_uri,
                       std::map<std::string, std::string> metadata) {
    if (doc_id.empty()) {
        throw ValidationError("document doc_id must be non-empty");
    }
    std::string normalized = normalize_text(raw_text);
    if (trimmed_empty(normalized)) {
        throw ValidationError("document \"" + doc_id + "\": text is empty after normalization");
    }
    return Document{std::move(doc_id), std::move(title), std::move(normalized),
                    std::move(source_uri), std::move(metadata)};
}

std::vector<Sentence> split_sentences(const Document& doc) {
    std::string_view text = doc.text;
    std::vector<ByteSpan> spans;
    std::size_t sent_start = 0;
    std::size_t i = 0;
    bool after_terminator = false;
    bool has_content = false;

    while (i < text.size()) {
        const unsigned char b = text[i];
        if (b < 0x80 && is_ascii_space(b)) {
            bool paragraph_break = false;
            while (i < text.size() && static_cast<unsigned char>(text[i]) < 0x80 &&
                   is_ascii_space(text[i])) {
                if (text[i] == '\n' && i + 1 < text.size() && text[i + 1] == '\n') {
                    paragraph_break = true;
                }
                ++i;
            }
            const bool boundary =
                (after_terminator || (paragraph_break && has_content)) && i < text.size();
            if (boundary) {
                spans.push_back({sent_start, i});
                sent_start = i;
                after_terminator = false;
                has_content = false;
            }
        } else {
            const DecodedChar dc = decode_utf8(text, i);
            if (is_terminator(dc.cp)) {
                after_terminator = true;
            } else if (!(after_terminator && is_closer(dc.cp))) {
                after_terminator = false;
            }
            has_content = true;
            i += dc.len;
        }
    }
    if (text.size() > sent_start) {
        spans.push_back({sent_start, text.size()});
    }

    std::vector<Sentence> out;
    out.reserve(spans.size());
    for (std::size_t k = 0; k < spans.size(); ++k) {
        out.push_back(Sentence{doc.doc_id, k, spans[k],
                               std::string(text.substr(spans[k].start,
                                                       spans[k].end - spans[k].start))});
    }
    return out;
}

Corpus load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open corpus file: " + path);
    }
    Corpus corpus;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("corpus line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("doc_id") || !j["doc_id"].is_string() ||
            !j.contains("title") || !j["title"].is_string() || !j.contains("text") ||
            !j["text"].is_string()) {
            throw ParseError("corpus line " + std::to_string(line_no) +
                             ": expected an object with string doc_id, title, text");
        }
        std::optional<std::string> source_uri;
        if (j.contains("source_uri") && !j["source_uri"].is_null()) {
            if (!j["source_uri"].is_string()) {
                throw ParseError("corpus line " + std::to_string(line_no) +
                                 ": source_uri must be a string");
            }
            source_uri = j["source_uri"].get<std::string>();
        }
        std::map<std::string, std::string> metadata;
        if (j.contains("metadata") && !j["metadata"].is_null()) {
            if (!j["metadata"].is_object()) {
                throw ParseError("corpus line " + std::to_string(line_no) +
                                 ": metadata must be an object");
            }
            for (const auto& [k, v] : j["metadata"].items()) {
                if (!v.is_string()) {
                    throw ParseError("corpus line " + std::to_string(line_no) +
                                     ": metadata values must be strings");
                }
                metadata[k] = v.get<std::string>();
            }
        }
        const std::string doc_id = j["doc_id"].get<std::string>();
        if (!seen.insert(doc_id).second) {
            throw ValidationError("duplicate doc_id \"" + doc_id + "\" at corpus line " +
                                  std::to_string(line_no));
        }
        corpus.push_back(make_document(doc_id, j["title"].get<std::string>(),
                                       j["text"].get<std::string>(), std::move(source_uri),
                                       std::move(metadata)));
    }
    return corpus;
}

std::unordered_map<std::string, const Document*> index_by_id(const Corpus& corpus) {
    std::unordered_map<std::string, const Document*> out;
    out.reserve(corpus.size());
    for (const Document& doc : corpus) {
        out.emplace(doc.doc_id, &doc);
    }
    return out;
}

}  // namespace rag
