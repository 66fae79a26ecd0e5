#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "rag/chunker.hpp"
#include "rag/embedder.hpp"
#include "rag/index.hpp"
#include "rag/llm.hpp"

namespace rag {

// Chunk texts keyed by chunk_id, reconstructed from a chunk dump plus the
// corpus it was cut from.
class ChunkStore {
public:
    ChunkStore() = default;
    explicit ChunkStore(std::vector<Chunk> chunks);

    static ChunkStore load(const std::string& chunks_path, const Corpus& corpus);

    // Null when the chunk_id is unknown.
    const Chunk* find(const std::string& chunk_id) const;
    std::size_t size() const { return chunks_.size(); }

private:
    std::vector<Chunk> chunks_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

struct GroundingConfig {
    int top_k = 5;
    double min_score = 0.0;
    int token_budget = 3072;
    std::string prompt_template_id = "pb-v1";

    void validate() const;
};

struct ContextBlock {
    std::string citation_tag;  // "[1]", "[2]", ...
    std::string chunk_text;
    std::string doc_id;
};

struct GroundedPrompt {
    std::string system_instruction;
    std::vector<ContextBlock> context_blocks;  // in retrieval rank order
    std::string question;
    int token_estimate = 0;  // system_instruction plus rendered user message

    // "pb-v1" rendering: one line per block, "[i] (doc: {doc_id}) {text}",
    // then "Question: {question}".
    std::string user_message() const;
};

enum class AnswerMode { grounded, raw };

std::string to_string(AnswerMode mode);

struct AnswerRecord {
    std::string query;
    std::string mode;
    std::string answer;
    std::vector<SearchHit> hits;  // retrieval trace; empty in raw mode
    std::vector<std::string> cited_doc_ids;
    std::string template_id;

    // Audit-log shape: {"query", "mode", "answer", "hits", "template"}.
    nlohmann::json to_json() const;
};

struct ChatOptions {
    std::string model = "default";
    int max_tokens = 1024;
};

// Embeds the query, retrieves cfg.top_k chunks, and assembles the prompt:
// chunks enter in rank order and assembly stops before the first chunk that
// would push the estimate past cfg.token_budget (chunks are never truncated).
// Throws UngroundableError when no chunk qualifies, IntegrityError when a
// hit's text is missing from the store. When hits_out is non-null it
// receives the unfiltered search result.
GroundedPrompt ground(const std::string& query, const GroundingConfig& cfg,
                      const VectorIndex& index, Embedder& embedder, const ChunkStore& chunks,
                      std::vector<SearchHit>* hits_out = nullptr);

// Runs the full query path. Grounded mode sends the grounded prompt; raw
// mode skips retrieval and sends only the instruction and question. LLM
// failures are rethrown with the retrieved chunk ids appended (never chunk
// text).
AnswerRecord answer(const std::string& query, const GroundingConfig& cfg,
                    const VectorIndex& index, Embedder& embedder, const ChunkStore& chunks,
                    LlmClient& llm, AnswerMode mode, const ChatOptions& chat);

}  // namespace rag
