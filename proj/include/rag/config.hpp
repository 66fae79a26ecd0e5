#pragma once

#include <memory>
#include <optional>
#include <string>

#include "rag/chunker.hpp"
#include "rag/embedder.hpp"
#include "rag/grounder.hpp"
#include "rag/llm.hpp"

namespace rag {

enum class EmbedderKind { hash, remote };
enum class LlmKind { extractive_mock, echo_mock, remote };

std::string to_string(EmbedderKind kind);
std::string to_string(LlmKind kind);
EmbedderKind embedder_kind_from_string(const std::string& name);
LlmKind llm_kind_from_string(const std::string& name);

// Where answers (or judgments) come from: a deterministic mock or a remote
// OpenAI-compatible endpoint.
struct EndpointConfig {
    LlmKind kind = LlmKind::extractive_mock;
    std::string base_url;  // required when kind is remote
    std::string model = "default";
    int max_tokens = 1024;
};

// Everything a command needs, read from a flat key = value file. Values are
// written as JSON scalars/arrays or bare strings; see set() for the key list.
struct RunConfig {
    std::string corpus_path;
    std::string index_path;
    std::string chunks_path;  // empty selects {index_path}.chunks.jsonl
    ChunkingConfig chunking;
    GroundingConfig grounding;
    EmbedderKind embedder_kind = EmbedderKind::hash;
    std::string embedder_base_url;
    std::string embedder_model;
    EndpointConfig llm;
    std::optional<EndpointConfig> judge;

    std::string resolved_chunks_path() const;

    // Applies one key = value assignment. The value is parsed as JSON when
    // possible and treated as a bare string otherwise. Throws
    // ValidationError for unknown keys or mistyped values.
    void set(const std::string& key, const std::string& raw_value);

    // Cross-field checks: module configs valid, remote selections carry
    // endpoints, and the three paths are pairwise distinct.
    void validate() const;
};

// Parses a config file: one key = value per line, blank lines and #-comment
// lines skipped. Throws ParseError for unparseable lines, ValidationError
// (with the line number) for bad assignments.
RunConfig load_run_config(const std::string& path);

// Applies a command-line "key=value" override.
void apply_override(RunConfig& cfg, const std::string& assignment);

std::unique_ptr<Embedder> make_embedder(const RunConfig& cfg);
std::unique_ptr<LlmClient> make_llm_client(const EndpointConfig& endpoint);

}  // namespace rag
