#include "rag/embedder.hpp"
#include "rag/errors.hpp"
#include "rag/http.hpp"

namespace rag {

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.model.empty()) {
        throw ValidationError("remote embedder: model must be set");
    }
    HttpClientConfig http;
    http.base_url = cfg_.base_url;
    http.bearer_env = "PB_EMBED_TOKEN";
    http.timeout_seconds = cfg_.timeout_seconds;
    http.max_in_flight = cfg_.max_in_flight;
    http.max_retries = cfg_.max_retries;
    http.backoff_base_ms = cfg_.backoff_base_ms;
    http_ = std::make_unique<JsonHttpClient>(std::move(http));
}

RemoteEmbedder::~RemoteEmbedder() = default;

int RemoteEmbedder::dimension() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    return dimension_;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        throw ValidationError("embed_batch: empty batch");
    }
    for (const std::string& t : texts) {
        if (t.empty()) {
            throw ValidationError("embed_batch: empty text in batch");
        }
    }

    const nlohmann::json body{{"model", cfg_.model}, {"input", texts}};
    const nlohmann::json resp = http_->post_json("/embeddings", body);

    if (!resp.is_object() || !resp.contains("data") || !resp["data"].is_array()) {
        throw ProtocolError("embeddings response: missing data array");
    }
    const auto& data = resp["data"];
    if (data.size() != texts.size()) {
        throw ProtocolError("embeddings response: expected " + std::to_string(texts.size()) +
                            " rows, got " + std::to_string(data.size()));
    }

    std::vector<EmbeddingVector> out(texts.size());
    std::vector<bool> filled(texts.size(), false);
    int dim = 0;
    for (const auto& row : data) {
        if (!row.is_object() || !row.contains("index") || !row["index"].is_number_integer() ||
            !row.contains("embedding") || !row["embedding"].is_array()) {
            throw ProtocolError("embeddings response: malformed data row");
        }
        const auto idx = row["index"].get<long long>();
        if (idx < 0 || static_cast<std::size_t>(idx) >= texts.size() ||
            filled[static_cast<std::size_t>(idx)]) {
            throw ProtocolError("embeddings response: bad or duplicate row index " +
                                std::to_string(idx));
        }
        const auto& values = row["embedding"];
        if (dim == 0) {
            dim = static_cast<int>(values.size());
        }
        if (dim == 0 || static_cast<int>(values.size()) != dim) {
            throw ProtocolError("embeddings response: inconsistent vector dimensions");
        }
        EmbeddingVector v(dim);
        for (int i = 0; i < dim; ++i) {
            const auto& x = values[static_cast<std::size_t>(i)];
            if (!x.is_number()) {
                throw ProtocolError("embeddings response: non-numeric vector component");
            }
            v[i] = x.get<float>();
        }
        try {
            out[static_cast<std::size_t>(idx)] = l2_normalized(v);
        } catch (const ValidationError& e) {
            throw ProtocolError("embeddings response: vector at index " + std::to_string(idx) +
                                " cannot be normalized: " + e.what());
        }
        filled[static_cast<std::size_t>(idx)] = true;
    }

    {
        const std::lock_guard<std::mutex> lock(mutex_);
        if (dimension_ == 0) {
            dimension_ = dim;
        } else if (dimension_ != dim) {
            throw ProtocolError("embeddings response: dimension changed from " +
                                std::to_string(dimension_) + " to " + std::to_string(dim));
        }
    }
    return out;
}

}  // namespace rag
