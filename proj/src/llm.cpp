#include "rag/llm.hpp"

#include <cctype>
#include <string_view>

#include "rag/errors.hpp"
#include "rag/http.hpp"

namespace rag {

namespace {

constexpr std::string_view kQuestionPrefix = "Question: ";
constexpr std::string_view kAbstainAnswer = "I don't have enough information.";

// Matches a "pb-v1" context block opener: "[<digits>] (doc: <doc_id>) <text>".
// Returns false on any deviation; the mock treats such lines as plain text.
bool parse_block_marker(std::string_view line, std::string_view& text_out) {
    if (line.empty() || line[0] != '[') return false;
    std::size_t i = 1;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 1) return false;
    constexpr std::string_view after_number = "] (doc: ";
    if (line.substr(i, after_number.size()) != after_number) return false;
    const std::size_t close = line.find(") ", i + after_number.size());
    if (close == std::string_view::npos) return false;
    text_out = line.substr(close + 2);
    return true;
}

std::vector<std::string> extract_blocks(std::string_view user_message) {
    std::vector<std::string> blocks;
    std::optional<std::string> current;
    std::size_t pos = 0;
    while (pos <= user_message.size()) {
        const std::size_t eol = user_message.find('\n', pos);
        const std::string_view line =
            user_message.substr(pos, (eol == std::string_view::npos ? user_message.size() : eol) - pos);
        if (line.substr(0, kQuestionPrefix.size()) == kQuestionPrefix) break;
        std::string_view text;
        if (parse_block_marker(line, text)) {
            if (current) blocks.push_back(std::move(*current));
            current = std::string(text);
        } else if (current) {
            *current += '\n';
            current->append(line);
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    if (current) blocks.push_back(std::move(*current));
    return blocks;
}

std::string final_user_content(const ChatRequest& req) {
    for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
        if (it->role == "user") return it->content;
    }
    return "";
}

}  // namespace

void ChatRequest::validate() const {
    if (messages.empty()) {
        throw ValidationError("chat request: needs at least one message");
    }
    for (const ChatMessage& m : messages) {
        if (m.role != "system" && m.role != "user") {
            throw ValidationError("chat request: unknown role \"" + m.role + "\"");
        }
    }
    if (messages.back().role != "user") {
        throw ValidationError("chat request: last message must have role user");
    }
    if (temperature < 0.0) {
        throw ValidationError("chat request: temperature must be >= 0");
    }
    if (max_tokens < 1) {
        throw ValidationError("chat request: max_tokens must be >= 1");
    }
}

RemoteLlmClient::RemoteLlmClient(RemoteLlmConfig cfg) {
    HttpClientConfig http;
    http.base_url = cfg.base_url;
    http.bearer_env = "PB_LLM_TOKEN";
    http.timeout_seconds = cfg.timeout_seconds;
    http.max_in_flight = cfg.max_in_flight;
    http.max_retries = cfg.max_retries;
    http.backoff_base_ms = cfg.backoff_base_ms;
    http_ = std::make_unique<JsonHttpClient>(std::move(http));
}

RemoteLlmClient::~RemoteLlmClient() = default;

ChatResponse RemoteLlmClient::complete(const ChatRequest& req) {
    req.validate();

    nlohmann::json messages = nlohmann::json::array();
    for (const ChatMessage& m : req.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    const nlohmann::json body{{"model", req.model},
                              {"messages", std::move(messages)},
                              {"temperature", req.temperature},
                              {"max_tokens", req.max_tokens}};

    const nlohmann::json resp = http_->post_json("/chat/completions", body);

    if (!resp.is_object() || !resp.contains("choices") || !resp["choices"].is_array() ||
        resp["choices"].empty()) {
        throw ProtocolError("chat response: missing choices");
    }
    const auto& first = resp["choices"][0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object() ||
        !first["message"].contains("content") || !first["message"]["content"].is_string()) {
        throw ProtocolError("chat response: missing choices[0].message.content");
    }
    ChatResponse out;
    out.text = first["message"]["content"].get<std::string>();
    if (out.text.empty()) {
        throw ProtocolError("chat response: empty completion");
    }
    out.model = resp.contains("model") && resp["model"].is_string()
                    ? resp["model"].get<std::string>()
                    : req.model;
    if (resp.contains("usage") && resp["usage"].is_object()) {
        const auto& u = resp["usage"];
        if (u.contains("prompt_tokens") && u["prompt_tokens"].is_number_integer() &&
            u.contains("completion_tokens") && u["completion_tokens"].is_number_integer()) {
            out.usage = ChatUsage{u["prompt_tokens"].get<int>(),
                                  u["completion_tokens"].get<int>()};
        }
    }
    return out;
}

ChatResponse ExtractiveMockLlm::complete(const ChatRequest& req) {
    const std::vector<std::string> blocks = extract_blocks(final_user_content(req));
    ChatResponse out;
    out.model = "extractive-mock";
    if (blocks.empty()) {
        out.text = std::string(kAbstainAnswer);
        return out;
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i > 0) out.text += '\n';
        out.text += blocks[i];
    }
    return out;
}

ChatResponse EchoMockLlm::complete(const ChatRequest& req) {
    ChatResponse out;
    out.text = final_user_content(req);
    out.model = "echo-mock";
    return out;
}

}  // namespace rag
