#pragma once

#include <atomic>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "surgforge/jsonl.hpp"
#include "surgforge/llm/client.hpp"

namespace surgforge::llm {

/// Strict replay backend: answers only from a directory of {digest}.json
/// fixtures. Unknown requests fail immediately instead of inventing
/// content, so replay runs are byte-reproducible or loudly wrong.
class FixtureBackend : public Backend {
public:
    explicit FixtureBackend(std::filesystem::path dir) : dir_(std::move(dir)) {
        if (!std::filesystem::is_directory(dir_))
            throw ConfigError("fixture directory does not exist: " + dir_.string());
    }

    ChatResponse complete_once(const ChatRequest& request) override {
        const std::string digest = digest_request(request);
        const auto path = dir_ / (digest + ".json");
        lookups_.fetch_add(1, std::memory_order_relaxed);
        if (!std::filesystem::exists(path)) throw MissingFixtureError(digest);
        json j = read_json_file(path);
        ChatResponse response;
        response.content = require_string(j, "content");
        response.finish_reason = FinishReason::stop;
        response.usage.prompt_tokens = estimate_prompt_tokens(request);
        response.usage.completion_tokens = estimate_tokens(response.content);
        return response;
    }

    std::string name() const override { return "mock:" + dir_.string(); }

    long lookups() const { return lookups_.load(std::memory_order_relaxed); }

private:
    std::filesystem::path dir_;
    std::atomic<long> lookups_{0};
};

/// Wraps any backend and captures its responses as fixture files, keyed by
/// request digest. Used to refresh the replay corpus without code changes.
class RecordingBackend : public Backend {
public:
    RecordingBackend(std::shared_ptr<Backend> inner, std::filesystem::path dir)
        : inner_(std::move(inner)), dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    ChatResponse complete_once(const ChatRequest& request) override {
        ChatResponse response = inner_->complete_once(request);
        const std::string digest = digest_request(request);
        json fixture{{"request_tag", request.request_tag}, {"content", response.content}};
        std::lock_guard lock(mutex_);
        write_json_file(dir_ / (digest + ".json"), fixture);
        return response;
    }

    std::string name() const override { return "record(" + inner_->name() + ")"; }

private:
    std::shared_ptr<Backend> inner_;
    std::filesystem::path dir_;
    std::mutex mutex_;
};

/// Test backend driven by a queue of scripted outcomes.
class ScriptedBackend : public Backend {
public:
    using Outcome = std::variant<ChatResponse, std::function<void()>>;

    void push_response(std::string content) {
        ChatResponse r;
        r.content = std::move(content);
        r.usage.completion_tokens = estimate_tokens(r.content);
        push(std::move(r));
    }

    void push(ChatResponse response) {
        std::lock_guard lock(mutex_);
        script_.emplace_back(std::move(response));
    }

    /// Enqueues a thrower; invoked in place of a response.
    void push_error(std::function<void()> thrower) {
        std::lock_guard lock(mutex_);
        script_.emplace_back(std::move(thrower));
    }

    ChatResponse complete_once(const ChatRequest& request) override {
        Outcome outcome = [&] {
            std::lock_guard lock(mutex_);
            if (script_.empty())
                throw TransportError("scripted backend exhausted (tag=" + request.request_tag +
                                     ")");
            Outcome o = std::move(script_.front());
            script_.pop_front();
            return o;
        }();
        ++calls_;
        if (auto* thrower = std::get_if<std::function<void()>>(&outcome)) {
            (*thrower)();
            throw TransportError("scripted error did not throw");
        }
        ChatResponse response = std::get<ChatResponse>(outcome);
        response.usage.prompt_tokens = estimate_prompt_tokens(request);
        return response;
    }

    std::string name() const override { return "scripted"; }

    long calls() const { return calls_.load(); }

private:
    std::mutex mutex_;
    std::deque<Outcome> script_;
    std::atomic<long> calls_{0};
};

}  // namespace surgforge::llm
