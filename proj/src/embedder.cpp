#include "rag/embedder.hpp"

#include <array>
#include <cmath>

#include "rag/errors.hpp"
#include "rag/text.hpp"

namespace rag {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const char c : data) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

EmbeddingVector hash_embed(std::string_view text) {
    if (text.empty()) {
        throw ValidationError("hash_embed: empty text");
    }
    std::string data = normalize_text(text);
    for (char& c : data) {
        const auto u = static_cast<unsigned char>(c);
        if (u >= 'A' && u <= 'Z') {
            c = static_cast<char>(u + 32);
        }
    }

    std::array<double, HashEmbedder::kDimension> acc{};
    const auto add_gram = [&acc](std::string_view gram) {
        const std::uint64_t h = fnv1a64(gram);
        acc[h % HashEmbedder::kDimension] += (h >> 63) == 0 ? 1.0 : -1.0;
    };
    const std::string_view view = data;
    if (view.size() < 3) {
        add_gram(view);
    } else {
        for (std::size_t i = 0; i + 3 <= view.size(); ++i) {
            add_gram(view.substr(i, 3));
        }
    }

    double sum_sq = 0.0;
    for (const double v : acc) {
        sum_sq += v * v;
    }
    const double norm = std::sqrt(sum_sq);

    EmbeddingVector out(HashEmbedder::kDimension);
    if (norm == 0.0) {
        out.setZero();
        out[0] = 1.0f;
        return out;
    }
    for (int i = 0; i < HashEmbedder::kDimension; ++i) {
        out[i] = static_cast<float>(acc[static_cast<std::size_t>(i)] / norm);
    }
    return out;
}

std::vector<EmbeddingVector> HashEmbedder::embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        throw ValidationError("embed_batch: empty batch");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) {
        out.push_back(hash_embed(t));
    }
    return out;
}

}  // namespace rag
