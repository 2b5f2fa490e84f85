#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "factcurve/gateway.hpp"

namespace factcurve {

/// OpenAI-style chat-completions transport.
///
/// POSTs {"model", "messages", "temperature", "max_tokens"} to
/// <base_url>/v1/chat/completions and reads choices[0].message.content.
/// The API key comes from the FACTCURVE_API_KEY environment variable unless
/// set explicitly.
class HttpTransport : public Transport {
public:
    struct Config {
        std::string base_url;     // e.g. "http://localhost:8080" or "https://api.example.com"
        std::string api_key;      // empty -> FACTCURVE_API_KEY
        std::string path = "/v1/chat/completions";
        int timeout_seconds = 120;
    };

    explicit HttpTransport(Config config) : config_(std::move(config)) {
        if (config_.api_key.empty()) {
            if (const char* env = std::getenv("FACTCURVE_API_KEY")) config_.api_key = env;
        }
        if (config_.base_url.empty())
            throw ConfigError("HttpTransport: provider endpoint URL not configured");
    }

    ModelResponse send(const ModelRequest& req) override {
        nlohmann::json body{
            {"model", req.model_id},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}})},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens},
        };

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config_.api_key);

        auto result = client.Post(config_.path, headers, body.dump(), "application/json");
        if (!result)
            throw ProviderUnreachableError("provider unreachable at " + config_.base_url + ": " +
                                           httplib::to_string(result.error()));
        if (result->status == 429 || result->status == 503)
            throw RateLimitedError("provider returned status " + std::to_string(result->status));
        if (result->status < 200 || result->status >= 300)
            throw GatewayError("provider returned status " + std::to_string(result->status) +
                               ": " + result->body);

        try {
            auto j = nlohmann::json::parse(result->body);
            ModelResponse resp;
            resp.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
            if (j.contains("model")) resp.provider_meta["model"] = j["model"].get<std::string>();
            if (j.contains("id")) resp.provider_meta["id"] = j["id"].get<std::string>();
            return resp;
        } catch (const nlohmann::json::exception& e) {
            throw MalformedPayloadError(std::string("malformed provider payload: ") + e.what());
        }
    }

private:
    Config config_;
};

} // namespace factcurve
