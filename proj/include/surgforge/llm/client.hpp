#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "surgforge/digest.hpp"
#include "surgforge/errors.hpp"
#include "surgforge/rng.hpp"
#include "surgforge/text.hpp"
#include "surgforge/types.hpp"

namespace surgforge::llm {

struct Message {
    Role role = Role::user;
    std::string content;

    auto operator<=>(const Message&) const = default;
};

struct ChatRequest {
    std::string model;
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    /// Free-form label carried into fixtures and logs; not part of the
    /// request identity.
    std::string request_tag;
};

inline void validate(const ChatRequest& request) {
    if (request.messages.empty()) throw ValidationError("chat request has no messages");
    if (request.messages.front().role == Role::assistant)
        throw ValidationError("first message must be system or user");
    if (request.temperature < 0.0) throw ValidationError("temperature must be >= 0");
    if (request.max_tokens <= 0) throw ValidationError("max_tokens must be positive");
}

enum class FinishReason { stop, length, error };

struct Usage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct ChatResponse {
    std::string content;
    FinishReason finish_reason = FinishReason::stop;
    Usage usage;
};

/// Identity of a request for fixture lookup: model, messages, and
/// temperature. Tags and token limits are deliberately excluded.
inline std::string digest_request(const ChatRequest& request) {
    std::uint64_t h = fnv1a64(request.model);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(format_double(request.temperature), h);
    for (const Message& m : request.messages) {
        h = fnv1a64("\x1e", h);
        h = fnv1a64(to_string(m.role), h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(m.content, h);
    }
    return to_hex(h);
}

// ---------------------------------------------------------------------------
// Error taxonomy
// ---------------------------------------------------------------------------

class ChatError : public Error {
public:
    ChatError(const std::string& message, bool retryable)
        : Error(message), retryable_(retryable) {}
    bool retryable() const { return retryable_; }

private:
    bool retryable_;
};

class TransportError : public ChatError {
public:
    explicit TransportError(const std::string& message) : ChatError(message, true) {}
};

/// Raised by a backend on HTTP 429; retried, and converted to
/// RateLimitExhausted when retries run out.
class RateLimitedError : public ChatError {
public:
    explicit RateLimitedError(const std::string& message) : ChatError(message, true) {}
};

class RateLimitExhausted : public ChatError {
public:
    explicit RateLimitExhausted(const std::string& message) : ChatError(message, false) {}
};

class AuthError : public ChatError {
public:
    explicit AuthError(const std::string& message) : ChatError(message, false) {}
};

class BackendError : public ChatError {
public:
    BackendError(int status, std::string body)
        : ChatError("backend returned status " + std::to_string(status) + ": " + body,
                    status >= 500),
          status_(status),
          body_(std::move(body)) {}

    int status() const { return status_; }
    const std::string& body() const { return body_; }

private:
    int status_;
    std::string body_;
};

class MissingFixtureError : public ChatError {
public:
    explicit MissingFixtureError(const std::string& digest)
        : ChatError("no fixture recorded for request digest " + digest, false) {}
};

// ---------------------------------------------------------------------------
// Backend interface and retrying client
// ---------------------------------------------------------------------------

class Backend {
public:
    virtual ~Backend() = default;
    /// One attempt; throws a ChatError subclass on failure.
    virtual ChatResponse complete_once(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

struct RetryPolicy {
    int max_retries = 2;
    std::chrono::milliseconds base_delay{100};
};

struct ChatFailure {
    std::string kind;
    std::string message;
};

using ChatResult = std::variant<ChatResponse, ChatFailure>;

inline bool ok(const ChatResult& r) { return std::holds_alternative<ChatResponse>(r); }

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline Sleeper real_sleeper() {
    return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

/// Thread-safe client owning retry, rate limiting, and usage accounting.
/// The sleeper is injectable so retry schedules can be tested without
/// waiting.
class ChatClient {
public:
    explicit ChatClient(std::shared_ptr<Backend> backend, RetryPolicy retry = {},
                        double requests_per_second = 0.0, Sleeper sleeper = real_sleeper())
        : backend_(std::move(backend)),
          retry_(retry),
          min_interval_(requests_per_second > 0.0
                            ? std::chrono::microseconds(
                                  static_cast<long>(1e6 / requests_per_second))
                            : std::chrono::microseconds(0)),
          sleeper_(std::move(sleeper)),
          jitter_gen_(0x5eedf00dULL) {}

    ChatResponse complete(const ChatRequest& request) {
        validate(request);
        for (int attempt = 0;; ++attempt) {
            throttle();
            try {
                ChatResponse response = backend_->complete_once(request);
                calls_.fetch_add(1, std::memory_order_relaxed);
                std::lock_guard lock(usage_mutex_);
                usage_.prompt_tokens += response.usage.prompt_tokens;
                usage_.completion_tokens += response.usage.completion_tokens;
                return response;
            } catch (const RateLimitedError& e) {
                calls_.fetch_add(1, std::memory_order_relaxed);
                if (attempt >= retry_.max_retries) throw RateLimitExhausted(e.what());
                backoff(attempt);
            } catch (const ChatError& e) {
                calls_.fetch_add(1, std::memory_order_relaxed);
                if (!e.retryable() || attempt >= retry_.max_retries) throw;
                backoff(attempt);
            }
        }
    }

    /// Runs requests with at most max_in_flight outstanding; results come
    /// back in request order and per-request errors never abort the batch.
    std::vector<ChatResult> complete_batch(const std::vector<ChatRequest>& requests,
                                           int max_in_flight) {
        if (max_in_flight < 1) throw PolicyError("max_in_flight must be >= 1");
        std::vector<ChatResult> results(requests.size(), ChatFailure{"pending", "not run"});
        if (requests.empty()) return results;

        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= requests.size()) return;
                try {
                    results[i] = complete(requests[i]);
                } catch (const ChatError& e) {
                    results[i] = ChatFailure{error_kind(e), e.what()};
                } catch (const std::exception& e) {
                    results[i] = ChatFailure{"error", e.what()};
                }
            }
        };

        const std::size_t n_threads =
            std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), requests.size());
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        return results;
    }

    Usage total_usage() const {
        std::lock_guard lock(usage_mutex_);
        return usage_;
    }

    /// Backend attempts made (including retried ones).
    long total_calls() const { return calls_.load(std::memory_order_relaxed); }

    Backend& backend() { return *backend_; }

    static std::string error_kind(const ChatError& e) {
        if (dynamic_cast<const AuthError*>(&e)) return "auth";
        if (dynamic_cast<const RateLimitExhausted*>(&e)) return "rate_limit_exhausted";
        if (dynamic_cast<const TransportError*>(&e)) return "transport";
        if (dynamic_cast<const MissingFixtureError*>(&e)) return "missing_fixture";
        if (dynamic_cast<const BackendError*>(&e)) return "backend";
        return "error";
    }

private:
    void throttle() {
        if (min_interval_.count() == 0) return;
        std::chrono::steady_clock::time_point wake;
        {
            std::lock_guard lock(throttle_mutex_);
            const auto now = std::chrono::steady_clock::now();
            if (next_slot_ < now) next_slot_ = now;
            wake = next_slot_;
            next_slot_ += min_interval_;
        }
        const auto now = std::chrono::steady_clock::now();
        if (wake > now)
            sleeper_(std::chrono::duration_cast<std::chrono::milliseconds>(wake - now));
    }

    // Exponential backoff with jitter below one base step, so delays are
    // non-decreasing across attempts.
    void backoff(int attempt) {
        const auto base = retry_.base_delay.count();
        long delay = base << std::min(attempt, 20);
        if (base > 0) {
            std::lock_guard lock(jitter_mutex_);
            delay += static_cast<long>(bounded_rand(jitter_gen_, static_cast<std::uint64_t>(base)));
        }
        sleeper_(std::chrono::milliseconds(delay));
    }

    std::shared_ptr<Backend> backend_;
    RetryPolicy retry_;
    std::chrono::microseconds min_interval_;
    Sleeper sleeper_;

    mutable std::mutex usage_mutex_;
    Usage usage_;
    std::atomic<long> calls_{0};

    std::mutex throttle_mutex_;
    std::chrono::steady_clock::time_point next_slot_{};

    std::mutex jitter_mutex_;
    std::mt19937_64 jitter_gen_;
};

/// Crude but deterministic token estimate used by offline backends.
inline long estimate_tokens(const std::string& text) {
    return static_cast<long>(word_count(text));
}

inline long estimate_prompt_tokens(const ChatRequest& request) {
    long total = 0;
    for (const Message& m : request.messages) total += estimate_tokens(m.content);
    return total;
}

}  // namespace surgforge::llm
