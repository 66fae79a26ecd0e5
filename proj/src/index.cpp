#include "rag/index.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>

#include "rag/errors.hpp"

namespace rag {

namespace {

constexpr char kMagic[5] = {'P', 'B', 'I', 'X', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

void put_string(std::string& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

std::uint32_t crc_of(const char* data, std::size_t len) {
    uLong crc = crc32(0L, Z_NULL, 0);
    return static_cast<std::uint32_t>(
        crc32(crc, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(len)));
}

// Bounds-checked little-endian reader over a loaded file.
class Reader {
public:
    Reader(const std::string& data, std::size_t limit) : data_(data), limit_(limit) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) {
            v = (v << 8) | static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) {
            v = (v << 8) | static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]);
        }
        pos_ += 8;
        return v;
    }

    std::string str(std::size_t len) {
        need(len);
        std::string s = data_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    float f32() {
        need(4);
        std::uint32_t bits = 0;
        for (int i = 3; i >= 0; --i) {
            bits = (bits << 8) |
                   static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]);
        }
        pos_ += 4;
        return std::bit_cast<float>(bits);
    }

    std::size_t remaining() const { return limit_ - pos_; }

private:
    void need(std::size_t n) {
        if (limit_ - pos_ < n) {
            throw CorruptionError("index file truncated");
        }
    }
    const std::string& data_;
    std::size_t limit_;
    std::size_t pos_ = 0;
};

}  // namespace

VectorIndex::VectorIndex(int dimension) : dimension_(dimension) {
    if (dimension < 1) {
        throw ValidationError("index dimension must be >= 1");
    }
}

VectorIndex::VectorIndex(int dimension, std::vector<IndexEntry> entries,
                         std::unordered_map<std::string, std::size_t> by_id)
    : dimension_(dimension), entries_(std::move(entries)), by_id_(std::move(by_id)) {}

std::size_t VectorIndex::size() const {
    const std::shared_lock lock(mutex_);
    return entries_.size();
}

std::size_t VectorIndex::upsert(std::vector<IndexEntry> entries) {
    for (const IndexEntry& e : entries) {
        if (e.chunk_id.empty()) {
            throw ValidationError("upsert: empty chunk_id");
        }
        if (e.vector.size() != dimension_) {
            throw ValidationError("upsert: chunk " + e.chunk_id + " has dimension " +
                                  std::to_string(e.vector.size()) + ", index expects " +
                                  std::to_string(dimension_));
        }
    }
    const std::unique_lock lock(mutex_);
    for (IndexEntry& e : entries) {
        const auto it = by_id_.find(e.chunk_id);
        if (it == by_id_.end()) {
            by_id_.emplace(e.chunk_id, entries_.size());
            entries_.push_back(std::move(e));
        } else {
            entries_[it->second] = std::move(e);
        }
    }
    return entries.size();
}

std::vector<SearchHit> VectorIndex::search(const EmbeddingVector& query, int k) const {
    if (k < 1) {
        throw ValidationError("search: k must be >= 1");
    }
    if (query.size() != dimension_) {
        throw ValidationError("search: query dimension " + std::to_string(query.size()) +
                              ", index expects " + std::to_string(dimension_));
    }
    const std::shared_lock lock(mutex_);
    if (entries_.empty()) {
        throw ValidationError("search: index is empty");
    }

    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        scored.emplace_back(dot(query, entries_[i].vector), i);
    }
    const auto better = [this](const std::pair<double, std::size_t>& a,
                               const std::pair<double, std::size_t>& b) {
        if (a.first != b.first) return a.first > b.first;
        return entries_[a.second].chunk_id < entries_[b.second].chunk_id;
    };
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n),
                      scored.end(), better);

    std::vector<SearchHit> hits;
    hits.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        hits.push_back(SearchHit{entries_[scored[i].second].chunk_id, scored[i].first,
                                 static_cast<int>(i + 1)});
    }
    return hits;
}

void VectorIndex::save(const std::string& path) const {
    std::string buf;
    {
        const std::unique_lock lock(mutex_);
        buf.append(kMagic, sizeof(kMagic));
        put_u32(buf, static_cast<std::uint32_t>(dimension_));
        put_u64(buf, entries_.size());
        for (const IndexEntry& e : entries_) {
            put_string(buf, e.chunk_id);
            put_string(buf, e.doc_id);
            for (int i = 0; i < dimension_; ++i) {
                put_u32(buf, std::bit_cast<std::uint32_t>(e.vector[i]));
            }
        }
    }
    put_u32(buf, crc_of(buf.data(), buf.size()));

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ValidationError("cannot open " + tmp + " for writing");
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        out.flush();
        if (!out) {
            throw ValidationError("failed writing index file: " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw ValidationError("cannot move " + tmp + " to " + path + ": " + ec.message());
    }
}

VectorIndex VectorIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open index file: " + path);
    }
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (data.size() < sizeof(kMagic) + 4 + 8 + 4) {
        throw CorruptionError("index file too small: " + path);
    }
    const std::size_t body_len = data.size() - 4;
    const std::uint32_t stored_crc =
        static_cast<std::uint32_t>(static_cast<unsigned char>(data[body_len])) |
        (static_cast<std::uint32_t>(static_cast<unsigned char>(data[body_len + 1])) << 8) |
        (static_cast<std::uint32_t>(static_cast<unsigned char>(data[body_len + 2])) << 16) |
        (static_cast<std::uint32_t>(static_cast<unsigned char>(data[body_len + 3])) << 24);
    if (crc_of(data.data(), body_len) != stored_crc) {
        throw CorruptionError("index file checksum mismatch: " + path);
    }

    Reader r(data, body_len);
    if (r.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
        throw CorruptionError("index file has wrong magic: " + path);
    }
    const std::uint32_t dim = r.u32();
    if (dim < 1) {
        throw CorruptionError("index file declares dimension 0: " + path);
    }
    const std::uint64_t count = r.u64();

    std::vector<IndexEntry> entries;
    entries.reserve(count);
    for (std::uint64_t n = 0; n < count; ++n) {
        IndexEntry e;
        e.chunk_id = r.str(r.u32());
        e.doc_id = r.str(r.u32());
        e.vector.resize(static_cast<Eigen::Index>(dim));
        for (std::uint32_t i = 0; i < dim; ++i) {
            e.vector[static_cast<Eigen::Index>(i)] = r.f32();
        }
        if (e.chunk_id.empty()) {
            throw CorruptionError("index file contains an empty chunk_id: " + path);
        }
        entries.push_back(std::move(e));
    }
    if (r.remaining() != 0) {
        throw CorruptionError("index file has trailing bytes: " + path);
    }
    std::unordered_map<std::string, std::size_t> by_id;
    by_id.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!by_id.emplace(entries[i].chunk_id, i).second) {
            throw CorruptionError("index file contains duplicate chunk_id " +
                                  entries[i].chunk_id);
        }
    }
    return VectorIndex(static_cast<int>(dim), std::move(entries), std::move(by_id));
}

std::vector<IndexEntry> VectorIndex::entries() const {
    const std::shared_lock lock(mutex_);
    return entries_;
}

}  // namespace rag
