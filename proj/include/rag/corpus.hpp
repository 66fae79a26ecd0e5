#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rag {

// Half-open [start, end) byte range into a document's normalized text.
struct ByteSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    bool operator==(const ByteSpan&) const = default;
};

// One source text; the unit of ingestion. `text` holds the NFKC-normalized,
// LF-only form; every byte span downstream refers to it.
struct Document {
    std::string doc_id;
    std::string title;
    std::string text;
    std::optional<std::string> source_uri;
    std::map<std::string, std::string> metadata;
};

// Normalizes `raw_text` and validates the Document invariants. Throws
// ValidationError when doc_id is empty or the text is empty once normalized
// and trimmed.
Document make_document(std::string doc_id, std::string title, std::string_view raw_text,
                       std::optional<std::string> source_uri = std::nullopt,
                       std::map<std::string, std::string> metadata = {});

struct Sentence {
    std::string doc_id;
    std::size_t ordinal = 0;
    ByteSpan span;
    std::string text;
};

// Rule-based sentence splitter. A boundary is placed after terminal
// punctuation (. ! ? and full-width forms, plus any closing quotes/brackets
// immediately following) when whitespace follows, and after any whitespace run
// containing a paragraph break (two consecutive LF). The whitespace run
// belongs to the preceding sentence, so concatenating the sentences in ordinal
// order reproduces doc.text byte-exactly. Text without terminators comes back
// as a single sentence.
std::vector<Sentence> split_sentences(const Document& doc);

using Corpus = std::vector<Document>;

// Loads a JSONL corpus, one {"doc_id","title","text",...} object per line.
// Documents come back in file order. Throws ParseError with the line number
// for malformed lines, ValidationError for duplicate doc_ids.
Corpus load_corpus(const std::string& path);

// doc_id -> document lookup over a loaded corpus.
std::unordered_map<std::string, const Document*> index_by_id(const Corpus& corpus);

}  // namespace rag
