#include "rag/grounder.hpp"

#include <algorithm>

#include "rag/errors.hpp"
#include "rag/text.hpp"

namespace rag {

namespace {

constexpr const char* kSystemInstruction =
    "Answer the question using ONLY the numbered context passages. Cite passages like [1]. "
    "If the context is insufficient, say so.";

std::string render_block(const ContextBlock& b) {
    return b.citation_tag + " (doc: " + b.doc_id + ") " + b.chunk_text;
}

std::string hits_suffix(const std::vector<SearchHit>& hits) {
    std::string s = " (retrieved:";
    for (const SearchHit& h : hits) {
        s += " " + h.chunk_id;
    }
    s += ")";
    return s;
}

}  // namespace

ChunkStore::ChunkStore(std::vector<Chunk> chunks) : chunks_(std::move(chunks)) {
    by_id_.reserve(chunks_.size());
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        if (!by_id_.emplace(chunks_[i].chunk_id, i).second) {
            throw ValidationError("chunk store: duplicate chunk_id " + chunks_[i].chunk_id);
        }
    }
}

ChunkStore ChunkStore::load(const std::string& chunks_path, const Corpus& corpus) {
    return ChunkStore(read_chunks(chunks_path, corpus));
}

const Chunk* ChunkStore::find(const std::string& chunk_id) const {
    const auto it = by_id_.find(chunk_id);
    return it == by_id_.end() ? nullptr : &chunks_[it->second];
}

void GroundingConfig::validate() const {
    if (top_k < 1) {
        throw ValidationError("grounding config: top_k must be >= 1");
    }
    if (prompt_template_id != "pb-v1") {
        throw ValidationError("grounding config: unknown prompt template \"" +
                              prompt_template_id + "\"");
    }
    if (token_budget <= token_estimate(kSystemInstruction)) {
        throw ValidationError("grounding config: token_budget must exceed the instruction size");
    }
}

std::string GroundedPrompt::user_message() const {
    std::string out;
    for (const ContextBlock& b : context_blocks) {
        out += render_block(b);
        out += '\n';
    }
    out += "Question: " + question;
    return out;
}

std::string to_string(AnswerMode mode) {
    return mode == AnswerMode::grounded ? "grounded" : "raw";
}

nlohmann::json AnswerRecord::to_json() const {
    nlohmann::json hit_rows = nlohmann::json::array();
    for (const SearchHit& h : hits) {
        hit_rows.push_back({{"chunk_id", h.chunk_id}, {"score", h.score}});
    }
    return nlohmann::json{{"query", query},
                          {"mode", mode},
                          {"answer", answer},
                          {"hits", std::move(hit_rows)},
                          {"template", template_id}};
}

GroundedPrompt ground(const std::string& query, const GroundingConfig& cfg,
                      const VectorIndex& index, Embedder& embedder, const ChunkStore& chunks,
                      std::vector<SearchHit>* hits_out) {
    cfg.validate();
    if (query.empty()) {
        throw ValidationError("ground: empty query");
    }

    const EmbeddingVector qv = embedder.embed_batch({query}).at(0);
    const std::vector<SearchHit> hits = index.search(qv, cfg.top_k);
    if (hits_out != nullptr) {
        *hits_out = hits;
    }

    GroundedPrompt prompt;
    prompt.system_instruction = kSystemInstruction;
    prompt.question = query;

    const int base_estimate =
        token_estimate(prompt.system_instruction) + token_estimate(prompt.user_message());
    int estimate = base_estimate;
    for (const SearchHit& hit : hits) {
        if (hit.score < cfg.min_score) break;  // hits are sorted, the rest score lower
        const Chunk* chunk = chunks.find(hit.chunk_id);
        if (chunk == nullptr) {
            throw IntegrityError("ground: chunk " + hit.chunk_id +
                                 " is indexed but missing from the chunk store");
        }
        ContextBlock block{"[" + std::to_string(prompt.context_blocks.size() + 1) + "]",
                           chunk->text, chunk->doc_id};
        // one rendered block line, including its trailing newline
        const int block_estimate = token_estimate(render_block(block) + "\n");
        if (estimate + block_estimate > cfg.token_budget) break;
        estimate += block_estimate;
        prompt.context_blocks.push_back(std::move(block));
    }

    if (prompt.context_blocks.empty()) {
        throw UngroundableError("no retrievable context for query (top score below threshold "
                                "or budget too small)");
    }
    prompt.token_estimate =
        token_estimate(prompt.system_instruction) + token_estimate(prompt.user_message());
    return prompt;
}

AnswerRecord answer(const std::string& query, const GroundingConfig& cfg,
                    const VectorIndex& index, Embedder& embedder, const ChunkStore& chunks,
                    LlmClient& llm, AnswerMode mode, const ChatOptions& chat) {
    AnswerRecord record;
    record.query = query;
    record.mode = to_string(mode);
    record.template_id = cfg.prompt_template_id;

    ChatRequest req;
    req.model = chat.model;
    req.max_tokens = chat.max_tokens;
    req.temperature = 0.0;

    if (mode == AnswerMode::grounded) {
        const GroundedPrompt prompt = ground(query, cfg, index, embedder, chunks, &record.hits);
        for (const ContextBlock& b : prompt.context_blocks) {
            if (std::find(record.cited_doc_ids.begin(), record.cited_doc_ids.end(), b.doc_id) ==
                record.cited_doc_ids.end()) {
                record.cited_doc_ids.push_back(b.doc_id);
            }
        }
        req.messages = {{"system", prompt.system_instruction}, {"user", prompt.user_message()}};
    } else {
        cfg.validate();
        if (query.empty()) {
            throw ValidationError("answer: empty query");
        }
        req.messages = {{"system", kSystemInstruction}, {"user", "Question: " + query}};
    }

    try {
        record.answer = llm.complete(req).text;
    } catch (const TransportError& e) {
        throw TransportError(e.what() + hits_suffix(record.hits), e.status, e.retryable);
    } catch (const ProtocolError& e) {
        throw ProtocolError(e.what() + hits_suffix(record.hits));
    }
    return record;
}

}  // namespace rag
