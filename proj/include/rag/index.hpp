#pragma once

#include <cstddef>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "rag/embedding.hpp"

namespace rag {

struct IndexEntry {
    std::string chunk_id;
    std::string doc_id;
    EmbeddingVector vector;
};

struct SearchHit {
    std::string chunk_id;
    double score = 0.0;
    int rank = 0;

    bool operator==(const SearchHit&) const = default;
};

// Exact top-k cosine retrieval over L2-normalized vectors (scores are dot
// products), with binary persistence. Thread contract: search takes a shared
// lock, upsert and save take an exclusive lock, so any number of concurrent
// searches may run but writers are alone.
class VectorIndex {
public:
    explicit VectorIndex(int dimension);

    int dimension() const { return dimension_; }
    std::size_t size() const;

    // Inserts or replaces entries by chunk_id; returns the number applied.
    // Throws ValidationError naming the chunk on a dimension mismatch.
    std::size_t upsert(std::vector<IndexEntry> entries);

    // Exact top-min(k, size) by score descending, ties broken by chunk_id
    // ascending, ranks 1-based. Throws ValidationError on an empty index, a
    // dimension mismatch, or k < 1.
    std::vector<SearchHit> search(const EmbeddingVector& query, int k) const;

    // Binary format: "PBIX1" magic, u32 dimension, u64 entry count, then per
    // entry a length-prefixed chunk_id, length-prefixed doc_id, and the raw
    // float32 vector, all little-endian, ending with a CRC32 of every
    // preceding byte. Writes go to a temp file renamed into place.
    void save(const std::string& path) const;

    // Throws CorruptionError on bad magic, checksum mismatch, or truncation;
    // never returns a partial index.
    static VectorIndex load(const std::string& path);

    // Snapshot of all entries in insertion order.
    std::vector<IndexEntry> entries() const;

private:
    VectorIndex(int dimension, std::vector<IndexEntry> entries,
                std::unordered_map<std::string, std::size_t> by_id);

    mutable std::shared_mutex mutex_;
    int dimension_;
    std::vector<IndexEntry> entries_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace rag
