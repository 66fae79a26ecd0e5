#include "rag/http.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "rag/errors.hpp"

namespace rag {

namespace {

struct SlotGuard {
    explicit SlotGuard(std::counting_semaphore<256>& slots) : slots_(slots) {
        slots_.acquire();
    }
    ~SlotGuard() { slots_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;
    std::counting_semaphore<256>& slots_;
};

bool retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

}  // namespace

JsonHttpClient::JsonHttpClient(HttpClientConfig cfg)
    : cfg_(std::move(cfg)), slots_(cfg_.max_in_flight) {
    if (cfg_.max_in_flight < 1 || cfg_.max_in_flight > 256) {
        throw ValidationError("http client: max_in_flight must be in [1, 256]");
    }
    if (cfg_.max_retries < 0 || cfg_.backoff_base_ms < 0 || cfg_.backoff_factor < 1) {
        throw ValidationError("http client: invalid retry configuration");
    }
    const std::size_t scheme_end = cfg_.base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw ValidationError("http client: base_url must include a scheme: " + cfg_.base_url);
    }
    const std::size_t path_start = cfg_.base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        origin_ = cfg_.base_url;
    } else {
        origin_ = cfg_.base_url.substr(0, path_start);
        prefix_ = cfg_.base_url.substr(path_start);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
    if (!cfg_.bearer_env.empty()) {
        if (const char* token = std::getenv(cfg_.bearer_env.c_str())) {
            bearer_ = token;
        }
    }
}

nlohmann::json JsonHttpClient::post_json(const std::string& path, const nlohmann::json& body) {
    const SlotGuard guard(slots_);
    const std::string full_path = prefix_ + path;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!bearer_.empty()) {
        headers.emplace("Authorization", "Bearer " + bearer_);
    }

    int attempt = 0;
    for (;;) {
        httplib::Client client(origin_);
        const auto timeout =
            std::chrono::milliseconds(static_cast<long>(cfg_.timeout_seconds * 1000.0));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        httplib::Result result = client.Post(full_path, headers, payload, "application/json");

        if (result) {
            const int status = result->status;
            if (status >= 200 && status < 300) {
                try {
                    return nlohmann::json::parse(result->body);
                } catch (const nlohmann::json::exception&) {
                    throw ProtocolError("invalid JSON in response from " + origin_ + full_path);
                }
            }
            if (!retryable_status(status) || attempt >= cfg_.max_retries) {
                throw TransportError("HTTP " + std::to_string(status) + " from " + origin_ +
                                         full_path,
                                     status, retryable_status(status));
            }
        } else if (attempt >= cfg_.max_retries) {
            throw TransportError("transport failure reaching " + origin_ + full_path + ": " +
                                     httplib::to_string(result.error()),
                                 0, true);
        }

        long delay_ms = cfg_.backoff_base_ms;
        for (int i = 0; i < attempt; ++i) delay_ms *= cfg_.backoff_factor;
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
        ++attempt;
    }
}

}  // namespace rag
