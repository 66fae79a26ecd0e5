#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rag {

struct ChatMessage {
    std::string role;  // "system" or "user"
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 512;

    // Throws ValidationError unless there is at least one message, roles are
    // system/user, the last message is from the user, and temperature >= 0.
    void validate() const;
};

struct ChatUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    std::string model;
    std::optional<ChatUsage> usage;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;

    // Returns the endpoint's first choice. Throws ValidationError on a bad
    // request; remote implementations throw TransportError / ProtocolError,
    // including on an empty completion.
    virtual ChatResponse complete(const ChatRequest& req) = 0;
};

struct RemoteLlmConfig {
    std::string base_url;
    double timeout_seconds = 30.0;
    int max_in_flight = 2;
    int max_retries = 3;
    int backoff_base_ms = 200;
};

class JsonHttpClient;

// OpenAI-compatible chat client: POST {base_url}/chat/completions, answer
// taken from choices[0].message.content. Bearer token from the PB_LLM_TOKEN
// environment variable. Message contents never appear in errors or logs.
class RemoteLlmClient final : public LlmClient {
public:
    explicit RemoteLlmClient(RemoteLlmConfig cfg);
    ~RemoteLlmClient() override;

    ChatResponse complete(const ChatRequest& req) override;

private:
    std::unique_ptr<JsonHttpClient> http_;
};

// Deterministic test LLM: answers with the text of every context passage
// found in the final user message, in order, joined by newlines. A prompt
// with no recognizable passages gets "I don't have enough information.".
// This makes grounding measurable offline: the mock can only "know" what
// retrieval handed it.
class ExtractiveMockLlm final : public LlmClient {
public:
    ChatResponse complete(const ChatRequest& req) override;
};

// Deterministic test LLM that repeats the final user message verbatim.
class EchoMockLlm final : public LlmClient {
public:
    ChatResponse complete(const ChatRequest& req) override;
};

}  // namespace rag
