#include "epitwin/agent/llm.hpp"

#include "epitwin/util/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <thread>

namespace epitwin::agent {

LlmConfig LlmConfig::from_env()
{
    LlmConfig cfg;
    if (const char* v = std::getenv("EPITWIN_LLM_BASE_URL"))
        cfg.base_url = v;
    if (const char* v = std::getenv("EPITWIN_LLM_MODEL"))
        cfg.model = v;
    if (const char* v = std::getenv("EPITWIN_LLM_API_KEY"))
        cfg.api_key = v;
    return cfg;
}

LlmClient::LlmClient(LlmConfig cfg) : cfg_(std::move(cfg))
{
    require(cfg_.configured(), Errc::config_error, "LLM endpoint needs base_url and model");
    // Split scheme://authority from the path prefix.
    std::string url = cfg_.base_url;
    std::size_t scheme = url.find("://");
    std::size_t path = scheme == std::string::npos ? url.find('/') : url.find('/', scheme + 3);
    if (path == std::string::npos) {
        host_ = url;
        prefix_.clear();
    } else {
        host_ = url.substr(0, path);
        prefix_ = url.substr(path);
        while (!prefix_.empty() && prefix_.back() == '/')
            prefix_.pop_back();
    }
}

std::string LlmClient::complete(const std::vector<ChatMessage>& messages) const
{
    nlohmann::ordered_json body;
    body["model"] = cfg_.model;
    nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
    for (const auto& m : messages)
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    body["messages"] = msgs;
    body["temperature"] = cfg_.temperature;
    body["max_tokens"] = cfg_.max_tokens;
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(cfg_.retry_backoff_ms * (1 << (attempt - 1))));

        httplib::Client client(host_);
        client.set_connection_timeout(cfg_.timeout_seconds, 0);
        client.set_read_timeout(cfg_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!cfg_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + cfg_.api_key);

        auto res = client.Post(prefix_ + "/chat/completions", headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            raise(Errc::generator_error,
                  "endpoint returned status " + std::to_string(res->status) + ": " + res->body);
        try {
            auto json = nlohmann::json::parse(res->body);
            return json.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            raise(Errc::generator_error, "malformed completion response: " + std::string(e.what()));
        }
    }
    raise(Errc::generator_error, "endpoint unreachable after " + std::to_string(cfg_.retries + 1) +
                                     " attempts (" + last_error + ")");
}

} // namespace epitwin::agent
