#pragma once

#include <string>
#include <vector>

namespace epitwin::agent {

/// OpenAI-compatible chat-completions endpoint. Credentials come from
/// config or the EPITWIN_LLM_BASE_URL / EPITWIN_LLM_MODEL /
/// EPITWIN_LLM_API_KEY environment variables.
struct LlmConfig {
    std::string base_url; // e.g. http://127.0.0.1:8000/v1
    std::string model;
    std::string api_key;
    double temperature = 0.0;
    int max_tokens = 2048;
    int timeout_seconds = 120;
    int retries = 2;        // on transport errors and 5xx
    int retry_backoff_ms = 100;

    static LlmConfig from_env();
    bool configured() const { return !base_url.empty() && !model.empty(); }
};

struct ChatMessage {
    std::string role;
    std::string content;
};

class LlmClient {
public:
    explicit LlmClient(LlmConfig cfg);

    /// The completion text of choices[0]. Throws GENERATOR_ERROR after
    /// retries are exhausted or on a malformed response.
    std::string complete(const std::vector<ChatMessage>& messages) const;

    const LlmConfig& config() const { return cfg_; }

private:
    LlmConfig cfg_;
    std::string host_;   // scheme://host:port
    std::string prefix_; // path prefix, e.g. /v1
};

} // namespace epitwin::agent
