#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "rag/embedding.hpp"

namespace rag {

// Text-to-vector interface. Implementations return one L2-normalized vector
// per input text, order preserved, all of dimension().
class Embedder {
public:
    virtual ~Embedder() = default;

    virtual int dimension() const = 0;

    // Embeds a non-empty batch of non-empty texts. Throws ValidationError on
    // precondition violations; remote implementations additionally throw
    // TransportError / ProtocolError.
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) = 0;
};

// FNV-1a over the bytes of `data`, 64-bit variant.
std::uint64_t fnv1a64(std::string_view data);

// Deterministic local embedding, dimension 256. The text is NFKC-normalized
// and ASCII-lowercased, split into byte trigrams (texts shorter than three
// bytes form a single gram), and each gram is feature-hashed: FNV-1a 64-bit,
// bucket = hash mod 256, sign taken from hash bit 63. The accumulated vector
// is L2-normalized; an all-zero accumulation maps to the unit vector e_0.
EmbeddingVector hash_embed(std::string_view text);

// Embedder wrapper around hash_embed.
class HashEmbedder final : public Embedder {
public:
    static constexpr int kDimension = 256;

    int dimension() const override { return kDimension; }
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;
};

struct RemoteEmbedderConfig {
    std::string base_url;
    std::string model;
    double timeout_seconds = 30.0;
    int max_in_flight = 4;
    int max_retries = 3;
    int backoff_base_ms = 200;
};

class JsonHttpClient;

// Client for an embeddings endpoint: POST {base_url}/embeddings with
// {"model", "input"}, response data rows re-ordered by their "index" field.
// The server declares the dimension implicitly with its first response; later
// responses must agree. Vectors are L2-normalized on receipt. The bearer
// token, when needed, comes from the PB_EMBED_TOKEN environment variable.
class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig cfg);
    ~RemoteEmbedder() override;

    // 0 until the first successful embed_batch call.
    int dimension() const override;
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

private:
    RemoteEmbedderConfig cfg_;
    std::unique_ptr<JsonHttpClient> http_;
    mutable std::mutex mutex_;
    int dimension_ = 0;
};

}  // namespace rag
