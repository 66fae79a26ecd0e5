#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rag/corpus.hpp"
#include "rag/embedder.hpp"

namespace rag {

enum class Strategy { fixed, recursive, semantic };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

// One retrieval unit: a byte span of the normalized document text.
struct Chunk {
    std::string chunk_id;  // "{doc_id}#{index}"
    std::string doc_id;
    ByteSpan span;
    std::string text;
    Strategy strategy = Strategy::fixed;
    int token_estimate = 1;
};

struct ChunkingConfig {
    Strategy strategy = Strategy::semantic;
    int target_size = 128;  // tokens, fixed and recursive strategies
    std::vector<std::string> delimiter_hierarchy = {"\n\n", "\n", ". ", " "};
    int window = 1;  // sentences per embedding unit, semantic strategy
    double breakpoint_percentile = 95.0;
    int min_chunk_tokens = 16;
    int max_chunk_tokens = 512;

    // Throws ValidationError when a field is out of range.
    void validate() const;
};

// Linear-interpolated percentile: with sorted v[0..n-1] and rank
// r = (p/100)*(n-1), returns v[floor(r)] + frac(r) * (v[floor(r)+1] - v[floor(r)]).
// Throws std::domain_error on an empty input or p outside (0, 100).
double percentile(std::vector<double> values, double p);

// Uniform-size splitting. Every chunk except possibly the last lands within
// one token of target_size; cuts prefer the nearest preceding whitespace
// within 16 bytes of the size boundary and otherwise back off to the nearest
// UTF-8 sequence start.
std::vector<Chunk> chunk_fixed(const Document& doc, const ChunkingConfig& cfg);

// Delimiter-hierarchy splitting: split on the highest-level delimiter first,
// re-split oversized segments with the next level, greedily merge adjacent
// small segments up to target_size. Delimiters stay attached to the
// preceding segment. Segments with no delimiters left fall back to
// fixed-size splitting.
std::vector<Chunk> chunk_recursive(const Document& doc, const ChunkingConfig& cfg);

// Intermediate values of a chunk_semantic call, for diagnostics.
struct SemanticTrace {
    std::vector<ByteSpan> unit_spans;
    std::vector<double> distances;
    std::optional<double> tau;
    std::vector<std::size_t> breakpoints;  // breakpoint after unit i
};

// Embedding-breakpoint splitting: sentences are grouped into units of
// `window`, consecutive units are embedded and compared, and a chunk
// boundary is placed wherever the cosine distance exceeds the configured
// percentile of all distances (strictly). A post-pass merges chunks under
// min_chunk_tokens into their successor (the last merges backward) and
// re-splits chunks over max_chunk_tokens with chunk_recursive.
//
// Embedding calls are issued one unit at a time; a failure is rethrown as
// ChunkingError naming the unit.
std::vector<Chunk> chunk_semantic(const Document& doc, const ChunkingConfig& cfg,
                                  Embedder& embedder, SemanticTrace* trace = nullptr);

// Dispatches on cfg.strategy. The embedder may be null for the fixed and
// recursive strategies.
std::vector<Chunk> chunk_document(const Document& doc, const ChunkingConfig& cfg,
                                  Embedder* embedder);

// Chunk dump persistence (JSONL, one object per chunk, no text). Writing is
// atomic: a temp file in the same directory is renamed over the target.
void write_chunks(const std::string& path, const std::vector<Chunk>& chunks);

// Reloads a chunk dump, reconstructing text by slicing the corpus documents.
// Throws ParseError on malformed lines, IntegrityError when a chunk names an
// unknown document or its span falls outside the document text.
std::vector<Chunk> read_chunks(const std::string& path, const Corpus& corpus);

}  // namespace rag
