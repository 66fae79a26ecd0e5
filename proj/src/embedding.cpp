#include "rag/embedding.hpp"

#include <cmath>

#include "rag/errors.hpp"

namespace rag {

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) {
        throw ValidationError("dot: dimension mismatch (" + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()) + ")");
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return sum;
}

double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    return 1.0 - dot(a, b);
}

EmbeddingVector l2_normalized(const EmbeddingVector& v) {
    double sum_sq = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double x = static_cast<double>(v[i]);
        if (!std::isfinite(x)) {
            throw ValidationError("l2_normalized: non-finite component");
        }
        sum_sq += x * x;
    }
    const double norm = std::sqrt(sum_sq);
    if (norm == 0.0) {
        throw ValidationError("l2_normalized: zero vector");
    }
    EmbeddingVector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(v[i]) / norm);
    }
    return out;
}

}  // namespace rag
