#pragma once

#include <chrono>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "surgforge/llm/client.hpp"

namespace surgforge::llm {

/// Splits "http://host:port/prefix" into the client origin and path prefix.
inline std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint must include a scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

/// Live backend speaking the OpenAI-compatible chat-completions protocol.
class HttpBackend : public Backend {
public:
    HttpBackend(const std::string& base_url, std::string api_key,
                std::chrono::seconds timeout = std::chrono::seconds(120))
        : api_key_(std::move(api_key)) {
        auto [origin, prefix] = split_base_url(base_url);
        origin_ = origin;
        path_ = prefix + "/chat/completions";
        client_ = std::make_unique<httplib::Client>(origin_);
        client_->set_connection_timeout(timeout);
        client_->set_read_timeout(timeout);
    }

    ChatResponse complete_once(const ChatRequest& request) override {
        nlohmann::json body;
        body["model"] = request.model;
        body["temperature"] = request.temperature;
        body["max_tokens"] = request.max_tokens;
        nlohmann::json messages = nlohmann::json::array();
        for (const Message& m : request.messages)
            messages.push_back(
                nlohmann::json{{"role", to_string(m.role)}, {"content", m.content}});
        body["messages"] = std::move(messages);

        httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
        auto result = client_->Post(path_, headers, body.dump(), "application/json");
        if (!result) throw TransportError(httplib::to_string(result.error()));
        if (result->status == 401 || result->status == 403) throw AuthError(result->body);
        if (result->status == 429) throw RateLimitedError(result->body);
        if (result->status != 200) throw BackendError(result->status, result->body);
        return parse_completion(result->body);
    }

    std::string name() const override { return "live:" + origin_; }

private:
    static ChatResponse parse_completion(const std::string& body) {
        nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded()) throw BackendError(200, "response body is not JSON");
        if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
            throw BackendError(200, "response has no choices");
        const nlohmann::json& choice = j["choices"][0];
        ChatResponse response;
        if (choice.contains("message") && choice["message"].contains("content") &&
            choice["message"]["content"].is_string()) {
            response.content = choice["message"]["content"].get<std::string>();
        } else {
            throw BackendError(200, "choice has no message content");
        }
        const std::string finish = choice.value("finish_reason", "stop");
        response.finish_reason =
            finish == "length" ? FinishReason::length
                               : (finish == "stop" ? FinishReason::stop : FinishReason::error);
        if (j.contains("usage") && j["usage"].is_object()) {
            response.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
            response.usage.completion_tokens = j["usage"].value("completion_tokens", 0L);
        }
        return response;
    }

    std::string api_key_;
    std::string origin_;
    std::string path_;
    std::unique_ptr<httplib::Client> client_;
};

}  // namespace surgforge::llm
