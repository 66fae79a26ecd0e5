#include "rag/chunker.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "rag/errors.hpp"
#include "rag/text.hpp"

namespace rag {

namespace {

int span_tokens(std::size_t start, std::size_t end) {
    const std::size_t len = end - start;
    return static_cast<int>(std::max<std::size_t>(1, (len + 3) / 4));
}

std::vector<ByteSpan> fixed_spans(std::string_view raw, std::size_t s, std::size_t e,
                                  int target) {
    const std::size_t target_bytes = 4 * static_cast<std::size_t>(target);
    std::vector<ByteSpan> out;
    std::size_t start = s;
    while (e - start > target_bytes) {
        const std::size_t nominal = start + target_bytes;
        std::size_t end = nominal;
        const std::size_t lo = std::max(nominal - 16, start);
        bool found_ws = false;
        for (std::size_t cand = nominal; cand-- > lo;) {
            if (is_ascii_space(static_cast<unsigned char>(raw[cand]))) {
                end = cand + 1;
                found_ws = true;
                break;
            }
        }
        if (!found_ws) {
            // no whitespace nearby: back off to the nearest UTF-8 sequence start
            while (end > start + 1 &&
                   (static_cast<unsigned char>(raw[end]) & 0xC0) == 0x80) {
                --end;
            }
        }
        out.push_back({start, end});
        start = end;
    }
    out.push_back({start, e});
    return out;
}

// Splits [s, e) at every occurrence of delim, keeping the delimiter attached
// to the preceding piece. A trailing delimiter does not open an empty piece.
std::vector<ByteSpan> split_on(std::string_view raw, std::size_t s, std::size_t e,
                               std::string_view delim) {
    std::vector<ByteSpan> out;
    std::size_t start = s;
    std::size_t from = s;
    for (;;) {
        const std::size_t pos = raw.find(delim, from);
        if (pos == std::string_view::npos || pos + delim.size() > e) break;
        const std::size_t cut = pos + delim.size();
        if (cut < e) {
            out.push_back({start, cut});
            start = cut;
        }
        from = cut;
    }
    out.push_back({start, e});
    return out;
}

std::vector<ByteSpan> merge_greedy(const std::vector<ByteSpan>& spans, int target) {
    std::vector<ByteSpan> out;
    for (const ByteSpan& sp : spans) {
        if (!out.empty() && span_tokens(out.back().start, sp.end) <= target) {
            out.back().end = sp.end;
        } else {
            out.push_back(sp);
        }
    }
    return out;
}

std::vector<ByteSpan> recursive_spans(std::string_view raw, std::size_t s, std::size_t e,
                                      int target, const std::vector<std::string>& delims,
                                      std::size_t level) {
    if (span_tokens(s, e) <= target) return {{s, e}};
    if (level >= delims.size()) return fixed_spans(raw, s, e, target);
    const std::vector<ByteSpan> parts = split_on(raw, s, e, delims[level]);
    if (parts.size() == 1) return recursive_spans(raw, s, e, target, delims, level + 1);

    std::vector<ByteSpan> out;
    std::vector<ByteSpan> pending;
    const auto flush_pending = [&out, &pending, target] {
        std::vector<ByteSpan> merged = merge_greedy(pending, target);
        out.insert(out.end(), merged.begin(), merged.end());
        pending.clear();
    };
    for (const ByteSpan& part : parts) {
        if (span_tokens(part.start, part.end) <= target) {
            pending.push_back(part);
        } else {
            flush_pending();
            std::vector<ByteSpan> sub =
                recursive_spans(raw, part.start, part.end, target, delims, level + 1);
            out.insert(out.end(), sub.begin(), sub.end());
        }
    }
    flush_pending();
    return out;
}

// Recursion plus a final greedy pass that absorbs stray delimiter-only
// leftovers produced at recursion boundaries.
std::vector<ByteSpan> recursive_split(std::string_view raw, std::size_t s, std::size_t e,
                                      int target, const std::vector<std::string>& delims) {
    return merge_greedy(recursive_spans(raw, s, e, target, delims, 0), target);
}

std::vector<Chunk> build_chunks(const Document& doc, const std::vector<ByteSpan>& spans,
                                Strategy strategy) {
    std::vector<Chunk> out;
    out.reserve(spans.size());
    for (std::size_t k = 0; k < spans.size(); ++k) {
        const ByteSpan sp = spans[k];
        Chunk c;
        c.chunk_id = doc.doc_id + "#" + std::to_string(k);
        c.doc_id = doc.doc_id;
        c.span = sp;
        c.text = doc.text.substr(sp.start, sp.end - sp.start);
        c.strategy = strategy;
        c.token_estimate = span_tokens(sp.start, sp.end);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::fixed:
            return "fixed";
        case Strategy::recursive:
            return "recursive";
        case Strategy::semantic:
            return "semantic";
    }
    return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "fixed") return Strategy::fixed;
    if (name == "recursive") return Strategy::recursive;
    if (name == "semantic") return Strategy::semantic;
    throw ValidationError("unknown chunking strategy: " + name);
}

void ChunkingConfig::validate() const {
    if (target_size < 1) {
        throw ValidationError("chunking config: target_size must be >= 1");
    }
    if (window < 1) {
        throw ValidationError("chunking config: window must be >= 1");
    }
    if (!(breakpoint_percentile > 0.0 && breakpoint_percentile < 100.0)) {
        throw ValidationError("chunking config: breakpoint_percentile must be in (0, 100)");
    }
    if (min_chunk_tokens < 1) {
        throw ValidationError("chunking config: min_chunk_tokens must be >= 1");
    }
    if (min_chunk_tokens >= max_chunk_tokens) {
        throw ValidationError("chunking config: min_chunk_tokens must be < max_chunk_tokens");
    }
    for (const std::string& d : delimiter_hierarchy) {
        if (d.empty()) {
            throw ValidationError("chunking config: delimiters must be non-empty");
        }
    }
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) {
        throw std::domain_error("percentile: empty input");
    }
    if (!(p > 0.0 && p < 100.0)) {
        throw std::domain_error("percentile: p must be in (0, 100)");
    }
    std::sort(values.begin(), values.end());
    const double r = (p / 100.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(r));
    const double frac = r - static_cast<double>(lo);
    if (lo + 1 >= values.size() || frac == 0.0) return values[lo];
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::vector<Chunk> chunk_fixed(const Document& doc, const ChunkingConfig& cfg) {
    cfg.validate();
    return build_chunks(doc, fixed_spans(doc.text, 0, doc.text.size(), cfg.target_size),
                        Strategy::fixed);
}

std::vector<Chunk> chunk_recursive(const Document& doc, const ChunkingConfig& cfg) {
    cfg.validate();
    return build_chunks(
        doc,
        recursive_split(doc.text, 0, doc.text.size(), cfg.target_size, cfg.delimiter_hierarchy),
        Strategy::recursive);
}

std::vector<Chunk> chunk_semantic(const Document& doc, const ChunkingConfig& cfg,
                                  Embedder& embedder, SemanticTrace* trace) {
    cfg.validate();
    const std::string_view raw = doc.text;
    const std::vector<Sentence> sentences = split_sentences(doc);
    if (sentences.empty()) {
        throw ValidationError("chunk_semantic: document " + doc.doc_id + " has no sentences");
    }

    std::vector<ByteSpan> units;
    const auto window = static_cast<std::size_t>(cfg.window);
    for (std::size_t u = 0; u < sentences.size(); u += window) {
        const std::size_t last = std::min(u + window, sentences.size()) - 1;
        units.push_back({sentences[u].span.start, sentences[last].span.end});
    }

    std::vector<EmbeddingVector> vecs;
    vecs.reserve(units.size());
    for (std::size_t k = 0; k < units.size(); ++k) {
        const std::string unit_text(raw.substr(units[k].start, units[k].end - units[k].start));
        try {
            vecs.push_back(embedder.embed_batch({unit_text}).at(0));
        } catch (const Error& err) {
            throw ChunkingError("chunk_semantic: embedding unit " + std::to_string(k) +
                                " of document " + doc.doc_id + " failed: " + err.what());
        }
    }

    std::vector<double> dists;
    for (std::size_t k = 0; k + 1 < vecs.size(); ++k) {
        dists.push_back(cosine_distance(vecs[k], vecs[k + 1]));
    }

    std::optional<double> tau;
    std::vector<std::size_t> breakpoints;
    if (!dists.empty()) {
        tau = percentile(dists, cfg.breakpoint_percentile);
        for (std::size_t k = 0; k < dists.size(); ++k) {
            if (dists[k] > *tau) breakpoints.push_back(k);
        }
    }

    std::vector<ByteSpan> spans;
    std::size_t start = 0;
    for (const std::size_t bp : breakpoints) {
        spans.push_back({start, units[bp].end});
        start = units[bp].end;
    }
    spans.push_back({start, raw.size()});

    // undersized chunks merge forward; an undersized last chunk merges backward
    std::size_t i = 0;
    while (i < spans.size()) {
        if (span_tokens(spans[i].start, spans[i].end) < cfg.min_chunk_tokens &&
            spans.size() > 1) {
            if (i + 1 < spans.size()) {
                spans[i].end = spans[i + 1].end;
                spans.erase(spans.begin() + static_cast<std::ptrdiff_t>(i + 1));
            } else {
                spans[i - 1].end = spans[i].end;
                spans.erase(spans.begin() + static_cast<std::ptrdiff_t>(i));
                break;
            }
        } else {
            ++i;
        }
    }

    // oversized chunks are re-split with the recursive strategy
    std::vector<ByteSpan> final_spans;
    for (const ByteSpan& sp : spans) {
        if (span_tokens(sp.start, sp.end) > cfg.max_chunk_tokens) {
            std::vector<ByteSpan> sub = recursive_split(raw, sp.start, sp.end,
                                                        cfg.max_chunk_tokens,
                                                        cfg.delimiter_hierarchy);
            final_spans.insert(final_spans.end(), sub.begin(), sub.end());
        } else {
            final_spans.push_back(sp);
        }
    }

    if (trace != nullptr) {
        trace->unit_spans = units;
        trace->distances = dists;
        trace->tau = tau;
        trace->breakpoints = breakpoints;
    }
    return build_chunks(doc, final_spans, Strategy::semantic);
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkingConfig& cfg,
                                  Embedder* embedder) {
    switch (cfg.strategy) {
        case Strategy::fixed:
            return chunk_fixed(doc, cfg);
        case Strategy::recursive:
            return chunk_recursive(doc, cfg);
        case Strategy::semantic:
            if (embedder == nullptr) {
                throw ValidationError("chunk_document: semantic strategy requires an embedder");
            }
            return chunk_semantic(doc, cfg, *embedder);
    }
    throw ValidationError("chunk_document: unknown strategy");
}

void write_chunks(const std::string& path, const std::vector<Chunk>& chunks) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ValidationError("cannot open " + tmp + " for writing");
        }
        for (const Chunk& c : chunks) {
            const nlohmann::json j{{"chunk_id", c.chunk_id},
                                   {"doc_id", c.doc_id},
                                   {"start", c.span.start},
                                   {"end", c.span.end},
                                   {"strategy", to_string(c.strategy)}};
            out << j.dump() << "\n";
        }
        out.flush();
        if (!out) {
            throw ValidationError("failed writing chunk file: " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw ValidationError("cannot move " + tmp + " to " + path + ": " + ec.message());
    }
}

std::vector<Chunk> read_chunks(const std::string& path, const Corpus& corpus) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open chunk file: " + path);
    }
    const auto by_id = index_by_id(corpus);
    std::vector<Chunk> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = "chunk file line " + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + std::string(e.what()));
        }
        if (!j.is_object() || !j.contains("chunk_id") || !j["chunk_id"].is_string() ||
            !j.contains("doc_id") || !j["doc_id"].is_string() || !j.contains("start") ||
            !j["start"].is_number_unsigned() || !j.contains("end") ||
            !j["end"].is_number_unsigned() || !j.contains("strategy") ||
            !j["strategy"].is_string()) {
            throw ParseError(where +
                             ": expected chunk_id, doc_id, start, end, strategy fields");
        }
        Chunk c;
        c.chunk_id = j["chunk_id"].get<std::string>();
        c.doc_id = j["doc_id"].get<std::string>();
        c.span.start = j["start"].get<std::size_t>();
        c.span.end = j["end"].get<std::size_t>();
        try {
            c.strategy = strategy_from_string(j["strategy"].get<std::string>());
        } catch (const ValidationError& e) {
            throw ParseError(where + ": " + std::string(e.what()));
        }
        const auto it = by_id.find(c.doc_id);
        if (it == by_id.end()) {
            throw IntegrityError("chunk " + c.chunk_id + " references unknown document " +
                                 c.doc_id);
        }
        const Document& doc = *it->second;
        if (c.span.start >= c.span.end || c.span.end > doc.text.size()) {
            throw IntegrityError("chunk " + c.chunk_id + " span [" +
                                 std::to_string(c.span.start) + ", " +
                                 std::to_string(c.span.end) + ") is outside document " +
                                 c.doc_id);
        }
        c.text = doc.text.substr(c.span.start, c.span.end - c.span.start);
        c.token_estimate = span_tokens(c.span.start, c.span.end);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace rag
