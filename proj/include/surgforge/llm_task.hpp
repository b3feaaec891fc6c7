#pragma once

#include <string>
#include <utility>
#include <variant>

#include "surgforge/errors.hpp"
#include "surgforge/llm/client.hpp"

namespace surgforge {

struct TaskFailure {
    std::string reason;
    int attempts = 0;
};

struct ClipSkipped {
    std::string clip_id;
    std::string reason;
};

struct ClipFailed {
    std::string clip_id;
    std::string reason;
    int attempts = 0;
};

template <typename T>
using TaskOutcome = std::variant<T, TaskFailure>;

/// Runs a strict-JSON completion task. Each round sends the base request
/// and, if the reply does not parse, one repair re-prompt carrying the
/// parse error; rounds repeat up to max_retries times. Backend errors are
/// not re-retried here — the client already owns transport retries.
/// `attempts` counts completion calls made.
template <typename T, typename Parser>
TaskOutcome<T> run_json_task(llm::ChatClient& client, const llm::ChatRequest& base,
                             Parser&& parse, int max_retries) {
    int attempts = 0;
    std::string last_error;

    for (int round = 0; round <= max_retries; ++round) {
        llm::ChatResponse response;
        try {
            response = client.complete(base);
            ++attempts;
        } catch (const llm::ChatError& e) {
            ++attempts;
            return TaskFailure{std::string(llm::ChatClient::error_kind(e)) + ": " + e.what(),
                               attempts};
        }
        try {
            return parse(response.content);
        } catch (const SchemaError& e) {
            last_error = e.what();
        }

        llm::ChatRequest repair = base;
        repair.messages.push_back({Role::assistant, response.content});
        repair.messages.push_back(
            {Role::user, "The previous reply could not be parsed: " + last_error +
                             ". Reply again with only the required JSON."});
        repair.request_tag = base.request_tag + ":repair";
        try {
            response = client.complete(repair);
            ++attempts;
        } catch (const llm::ChatError& e) {
            ++attempts;
            return TaskFailure{std::string(llm::ChatClient::error_kind(e)) + ": " + e.what(),
                               attempts};
        }
        try {
            return parse(response.content);
        } catch (const SchemaError& e) {
            last_error = e.what();
        }
    }
    return TaskFailure{"schema: " + last_error, attempts};
}

}  // namespace surgforge
