#include "rag/config.hpp"

#include <fstream>

#include "json.hpp"
#include "rag/errors.hpp"
#include "rag/text.hpp"

namespace rag {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_ascii_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string expect_string(const nlohmann::json& j, const std::string& key) {
    if (!j.is_string()) {
        throw ValidationError("config key " + key + ": expected a string");
    }
    return j.get<std::string>();
}

int expect_int(const nlohmann::json& j, const std::string& key) {
    if (!j.is_number_integer()) {
        throw ValidationError("config key " + key + ": expected an integer");
    }
    return j.get<int>();
}

double expect_number(const nlohmann::json& j, const std::string& key) {
    if (!j.is_number()) {
        throw ValidationError("config key " + key + ": expected a number");
    }
    return j.get<double>();
}

std::vector<std::string> expect_string_array(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array()) {
        throw ValidationError("config key " + key + ": expected an array of strings");
    }
    std::vector<std::string> out;
    for (const nlohmann::json& item : j) {
        if (!item.is_string()) {
            throw ValidationError("config key " + key + ": expected an array of strings");
        }
        out.push_back(item.get<std::string>());
    }
    return out;
}

// judge.* keys bring the judge endpoint into existence on first touch.
EndpointConfig& judge_of(RunConfig& cfg) {
    if (!cfg.judge) cfg.judge.emplace();
    return *cfg.judge;
}

void validate_endpoint(const EndpointConfig& endpoint, const std::string& name) {
    if (endpoint.kind == LlmKind::remote) {
        if (endpoint.base_url.empty()) {
            throw ValidationError("remote " + name + " requires " + name + ".base_url");
        }
        if (endpoint.model.empty()) {
            throw ValidationError("remote " + name + " requires " + name + ".model");
        }
    }
    if (endpoint.max_tokens < 1) {
        throw ValidationError(name + ".max_tokens must be >= 1");
    }
}

}  // namespace

std::string to_string(EmbedderKind kind) {
    return kind == EmbedderKind::hash ? "hash" : "remote";
}

std::string to_string(LlmKind kind) {
    switch (kind) {
        case LlmKind::extractive_mock:
            return "extractive_mock";
        case LlmKind::echo_mock:
            return "echo_mock";
        case LlmKind::remote:
            return "remote";
    }
    throw ValidationError("unknown llm kind");
}

EmbedderKind embedder_kind_from_string(const std::string& name) {
    if (name == "hash") return EmbedderKind::hash;
    if (name == "remote") return EmbedderKind::remote;
    throw ValidationError("unknown embedder kind: " + name);
}

LlmKind llm_kind_from_string(const std::string& name) {
    if (name == "extractive_mock") return LlmKind::extractive_mock;
    if (name == "echo_mock") return LlmKind::echo_mock;
    if (name == "remote") return LlmKind::remote;
    throw ValidationError("unknown llm kind: " + name);
}

std::string RunConfig::resolved_chunks_path() const {
    if (!chunks_path.empty()) return chunks_path;
    if (!index_path.empty()) return index_path + ".chunks.jsonl";
    return {};
}

void RunConfig::set(const std::string& key, const std::string& raw_value) {
    nlohmann::json j = nlohmann::json::parse(raw_value, nullptr, false);
    if (j.is_discarded()) j = raw_value;

    if (key == "corpus_path") {
        corpus_path = expect_string(j, key);
    } else if (key == "index_path") {
        index_path = expect_string(j, key);
    } else if (key == "chunks_path") {
        chunks_path = expect_string(j, key);
    } else if (key == "chunking.strategy") {
        chunking.strategy = strategy_from_string(expect_string(j, key));
    } else if (key == "chunking.target_size") {
        chunking.target_size = expect_int(j, key);
    } else if (key == "chunking.delimiter_hierarchy") {
        chunking.delimiter_hierarchy = expect_string_array(j, key);
    } else if (key == "chunking.window") {
        chunking.window = expect_int(j, key);
    } else if (key == "chunking.breakpoint_percentile") {
        chunking.breakpoint_percentile = expect_number(j, key);
    } else if (key == "chunking.min_chunk_tokens") {
        chunking.min_chunk_tokens = expect_int(j, key);
    } else if (key == "chunking.max_chunk_tokens") {
        chunking.max_chunk_tokens = expect_int(j, key);
    } else if (key == "grounding.top_k") {
        grounding.top_k = expect_int(j, key);
    } else if (key == "grounding.min_score") {
        grounding.min_score = expect_number(j, key);
    } else if (key == "grounding.token_budget") {
        grounding.token_budget = expect_int(j, key);
    } else if (key == "grounding.prompt_template") {
        grounding.prompt_template_id = expect_string(j, key);
    } else if (key == "embedder.kind") {
        embedder_kind = embedder_kind_from_string(expect_string(j, key));
    } else if (key == "embedder.base_url") {
        embedder_base_url = expect_string(j, key);
    } else if (key == "embedder.model") {
        embedder_model = expect_string(j, key);
    } else if (key == "llm.kind") {
        llm.kind = llm_kind_from_string(expect_string(j, key));
    } else if (key == "llm.base_url") {
        llm.base_url = expect_string(j, key);
    } else if (key == "llm.model") {
        llm.model = expect_string(j, key);
    } else if (key == "llm.max_tokens") {
        llm.max_tokens = expect_int(j, key);
    } else if (key == "judge.kind") {
        judge_of(*this).kind = llm_kind_from_string(expect_string(j, key));
    } else if (key == "judge.base_url") {
        judge_of(*this).base_url = expect_string(j, key);
    } else if (key == "judge.model") {
        judge_of(*this).model = expect_string(j, key);
    } else if (key == "judge.max_tokens") {
        judge_of(*this).max_tokens = expect_int(j, key);
    } else {
        throw ValidationError("unknown config key \"" + key + "\"");
    }
}

void RunConfig::validate() const {
    chunking.validate();
    grounding.validate();
    if (embedder_kind == EmbedderKind::remote) {
        if (embedder_base_url.empty()) {
            throw ValidationError("remote embedder requires embedder.base_url");
        }
        if (embedder_model.empty()) {
            throw ValidationError("remote embedder requires embedder.model");
        }
    }
    validate_endpoint(llm, "llm");
    if (judge) {
        validate_endpoint(*judge, "judge");
    }
    const std::string chunks = resolved_chunks_path();
    if (!corpus_path.empty() && corpus_path == index_path) {
        throw ValidationError("corpus_path and index_path must differ");
    }
    if (!corpus_path.empty() && corpus_path == chunks) {
        throw ValidationError("corpus_path and chunks_path must differ");
    }
    if (!index_path.empty() && index_path == chunks) {
        throw ValidationError("index_path and chunks_path must differ");
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open config file: " + path);
    }
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(line_no) +
                             ": expected key = value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw ParseError("config line " + std::to_string(line_no) + ": empty key");
        }
        try {
            cfg.set(key, value);
        } catch (const ValidationError& e) {
            throw ValidationError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ValidationError("override \"" + assignment + "\": expected key=value");
    }
    cfg.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::unique_ptr<Embedder> make_embedder(const RunConfig& cfg) {
    if (cfg.embedder_kind == EmbedderKind::hash) {
        return std::make_unique<HashEmbedder>();
    }
    RemoteEmbedderConfig remote;
    remote.base_url = cfg.embedder_base_url;
    remote.model = cfg.embedder_model;
    return std::make_unique<RemoteEmbedder>(remote);
}

std::unique_ptr<LlmClient> make_llm_client(const EndpointConfig& endpoint) {
    switch (endpoint.kind) {
        case LlmKind::extractive_mock:
            return std::make_unique<ExtractiveMockLlm>();
        case LlmKind::echo_mock:
            return std::make_unique<EchoMockLlm>();
        case LlmKind::remote: {
            RemoteLlmConfig remote;
            remote.base_url = endpoint.base_url;
            return std::make_unique<RemoteLlmClient>(remote);
        }
    }
    throw ValidationError("unknown llm kind");
}

}  // namespace rag
