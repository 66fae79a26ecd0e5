#pragma once

#include <semaphore>
#include <string>

#include "json.hpp"

namespace rag {

struct HttpClientConfig {
    std::string base_url;    // scheme://host[:port][/prefix]
    std::string bearer_env;  // environment variable holding the bearer token, may be unset
    double timeout_seconds = 30.0;
    int max_retries = 3;  // additional attempts after the first
    int backoff_base_ms = 200;
    int backoff_factor = 2;
    int max_in_flight = 4;
};

// Small JSON-over-POST client shared by the remote embedder and LLM client.
// Applies bounded exponential backoff to retryable failures (transport
// errors, 408, 429, 5xx), caps concurrent requests, and attaches a bearer
// token when the configured environment variable is set. Error messages
// never include request or response bodies.
class JsonHttpClient {
public:
    explicit JsonHttpClient(HttpClientConfig cfg);

    JsonHttpClient(const JsonHttpClient&) = delete;
    JsonHttpClient& operator=(const JsonHttpClient&) = delete;

    // POSTs body as JSON to {base_url}{path}. Returns the parsed response
    // body. Throws TransportError on exhausted retries or non-retryable
    // status codes, ProtocolError when a 2xx response is not valid JSON.
    nlohmann::json post_json(const std::string& path, const nlohmann::json& body);

private:
    HttpClientConfig cfg_;
    std::string origin_;
    std::string prefix_;
    std::string bearer_;
    std::counting_semaphore<256> slots_;
};

}  // namespace rag
