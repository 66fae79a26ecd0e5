#pragma once

#include <Eigen/Core>

namespace rag {

// All embeddings in the pipeline are float32 vectors, L2-normalized on
// output by whichever embedder produced them.
using EmbeddingVector = Eigen::VectorXf;

// Inner product accumulated sequentially in double precision. Scoring and
// breakpoint detection both depend on this exact summation order, so the
// same query over the same index ranks identically on every platform.
double dot(const EmbeddingVector& a, const EmbeddingVector& b);

// 1 - dot(a, b). Both inputs must already be L2-normalized.
double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b);

// Returns v scaled to unit L2 norm, with the norm accumulated in double
// precision. Throws ValidationError if v has zero norm or non-finite values.
EmbeddingVector l2_normalized(const EmbeddingVector& v);

}  // namespace rag
