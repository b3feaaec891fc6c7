#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "surgforge/digest.hpp"
#include "surgforge/llm/client.hpp"
#include "surgforge/text.hpp"

namespace surgforge::llm {

/// Offline stand-in for a live model: fabricates schema-valid replies
/// deterministically from the request content. Good enough to build the
/// shipped fixture corpus and to drive pipeline tests; not a model.
class SynthBackend : public Backend {
public:
    ChatResponse complete_once(const ChatRequest& request) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        const std::uint64_t h = fnv1a64(digest_request(request));
        const std::string& user = last_user(request);
        const std::string_view tag = request.request_tag;

        std::string content;
        if (tag.rfind("extract:", 0) == 0) {
            content = extraction_reply(user, h);
        } else if (tag.rfind("obs:", 0) == 0) {
            content = observation_reply(user, h);
        } else if (tag.rfind("reason:", 0) == 0) {
            content = reasoning_reply(user, h);
        } else if (tag.rfind("align:", 0) == 0) {
            content = alignment_reply(user, h);
        } else if (tag.rfind("judge:", 0) == 0) {
            content = judge_reply(user, h);
        } else {
            content = "{\"question\": \"What is shown?\", \"answer\": \"A surgical field.\"}";
        }

        ChatResponse response;
        response.content = std::move(content);
        response.finish_reason = FinishReason::stop;
        response.usage.prompt_tokens = estimate_prompt_tokens(request);
        response.usage.completion_tokens = estimate_tokens(response.content);
        return response;
    }

    std::string name() const override { return "synth"; }

    long calls() const { return calls_.load(std::memory_order_relaxed); }

private:
    static const std::string& last_user(const ChatRequest& request) {
        for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it)
            if (it->role == Role::user) return it->content;
        return request.messages.back().content;
    }

    static std::vector<std::string> sentences(const std::string& text) {
        std::vector<std::string> out;
        std::string current;
        for (char c : text) {
            current += c;
            if (c == '.' || c == '!' || c == '?') {
                const std::string s = trim(current);
                if (word_count(s) >= 3) out.push_back(s);
                current.clear();
            }
        }
        const std::string s = trim(current);
        if (word_count(s) >= 3) out.push_back(s);
        return out;
    }

    static std::string field_after(const std::string& text, const std::string& label) {
        const auto pos = text.find(label);
        if (pos == std::string::npos) return {};
        const auto start = pos + label.size();
        const auto end = text.find('\n', start);
        return trim(text.substr(start, end == std::string::npos ? std::string::npos : end - start));
    }

    /// Lines of the form "N. text" under a given heading.
    static std::vector<std::string> numbered_items(const std::string& text) {
        std::vector<std::string> items;
        std::size_t start = 0;
        while (start < text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string::npos) end = text.size();
            const std::string line = trim(text.substr(start, end - start));
            start = end + 1;
            std::size_t i = 0;
            while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
            if (i > 0 && i + 1 < line.size() && line[i] == '.' && line[i + 1] == ' ')
                items.push_back(trim(line.substr(i + 2)));
        }
        return items;
    }

    static std::string json_escaped_object(std::initializer_list<std::pair<const char*, std::string>> kv) {
        nlohmann::json j;
        for (const auto& [k, v] : kv) j[k] = v;
        return j.dump();
    }

    static std::string extraction_reply(const std::string& user, std::uint64_t h) {
        static const std::array<const char*, 4> reasons = {
            "to obtain a clear view of the operative field",
            "to avoid injury to the adjacent structures",
            "to control bleeding before proceeding",
            "to define the anatomy before any division"};
        static const std::array<const char*, 4> plans = {
            "the next step is to continue the dissection along this plane",
            "the plan is to place a stapler across the isolated tissue",
            "the surgeon will proceed to close the defect",
            "the specimen will then be retrieved in a bag"};
        static const std::array<const char*, 4> deductions = {
            "this indicates the dissection is in the correct avascular plane",
            "this suggests chronic inflammation around the structure",
            "this confirms the critical view has been achieved",
            "this implies the lesion is resectable laparoscopically"};

        const std::string transcript = field_after(user, "Transcript: ");
        const auto sents = sentences(transcript);
        nlohmann::json units = nlohmann::json::array();
        const std::size_t n = sents.empty() ? 0 : std::min<std::size_t>(sents.size(), 1 + h % 3);
        for (std::size_t i = 0; i < n; ++i) {
            nlohmann::json unit;
            unit["observation"] = sents[i];
            const std::uint64_t bits = mix64(h + i);
            if (bits & 1) unit["reason"] = reasons[(bits >> 3) % reasons.size()];
            if (bits & 2) unit["plan"] = plans[(bits >> 13) % plans.size()];
            if (bits & 4) unit["deduction"] = deductions[(bits >> 23) % deductions.size()];
            units.push_back(unit);
        }
        return units.dump();
    }

    static std::string observation_reply(const std::string& user, std::uint64_t h) {
        static const std::array<const char*, 4> questions = {
            "What is happening in this surgical video?",
            "Can you describe the main steps shown in this clip?",
            "What does the surgeon do in this video?",
            "Please summarize what is demonstrated in this clip."};
        const auto observations = numbered_items(user);
        std::string answer;
        for (const std::string& o : observations) {
            if (!answer.empty()) answer += " ";
            answer += o;
        }
        if (answer.empty()) answer = "The clip shows a surgical field.";
        return json_escaped_object(
            {{"question", questions[h % questions.size()]}, {"answer", answer}});
    }

    static std::string reasoning_reply(const std::string& user, std::uint64_t h) {
        const std::string observation = field_after(user, "Observation: ");
        std::string relation = "reason";
        std::string statement = field_after(user, "Statement (reason): ");
        if (statement.empty()) {
            statement = field_after(user, "Statement (plan): ");
            relation = "plan";
        }
        if (statement.empty()) {
            statement = field_after(user, "Statement (deduction): ");
            relation = "deduction";
        }

        std::string question;
        std::string answer;
        if (relation == "reason") {
            static const std::array<const char*, 3> q = {
                "Why is this step performed?", "What is the purpose of this maneuver?",
                "Why does the surgeon do this here?"};
            question = q[h % q.size()];
            answer = "It is done " + statement + ".";
        } else if (relation == "plan") {
            static const std::array<const char*, 3> q = {
                "What is the next step after this?", "What does the surgeon plan to do next?",
                "How will the procedure continue from here?"};
            question = q[h % q.size()];
            answer = "Based on what is seen, " + statement + ".";
        } else {
            static const std::array<const char*, 3> q = {
                "What can be inferred from this observation?",
                "What does this finding tell us?", "What conclusion follows from this?"};
            question = q[h % q.size()];
            answer = "From this observation, " + statement + ".";
        }
        if (!observation.empty()) question += " (regarding: " + observation.substr(0, 60) + ")";
        return json_escaped_object({{"question", question}, {"answer", answer}});
    }

    static std::string alignment_reply(const std::string& user, std::uint64_t h) {
        static const std::array<const char*, 3> questions = {
            "Can you briefly describe this surgical video clip?",
            "What actions are performed in this clip?",
            "Describe the instrument activity shown in this video."};
        std::string answer;
        std::size_t start = 0;
        while (start < user.size()) {
            std::size_t end = user.find('\n', start);
            if (end == std::string::npos) end = user.size();
            std::string line = trim(user.substr(start, end - start));
            start = end + 1;
            if (line.size() < 4 || line.front() != '(' || line.back() != ')') continue;
            line = line.substr(1, line.size() - 2);
            const auto c1 = line.find(", ");
            const auto c2 = line.find(", ", c1 == std::string::npos ? 0 : c1 + 2);
            if (c1 == std::string::npos || c2 == std::string::npos) continue;
            const std::string instrument = line.substr(0, c1);
            const std::string verb = line.substr(c1 + 2, c2 - c1 - 2);
            const std::string target = line.substr(c2 + 2);
            if (!answer.empty()) answer += " Then ";
            else answer += "In this clip, ";
            answer += "the " + instrument + " is used to " + verb + " the " + target + ".";
        }
        if (answer.empty()) answer = "No instrument activity is visible.";
        return json_escaped_object(
            {{"question", questions[h % questions.size()]}, {"answer", answer}});
    }

    static std::string judge_reply(const std::string& user, std::uint64_t h) {
        const auto refs = numbered_items(user);
        const int total = static_cast<int>(refs.empty() ? 1 : refs.size());
        const int matched = static_cast<int>(h % static_cast<std::uint64_t>(total + 1));
        int score = total > 0 ? (matched * 5 + total / 2) / total : 0;
        if (matched > 0 && score == 0) score = 1;
        const std::uint64_t wobble = mix64(h) % 3;
        if (wobble == 0 && score > 0) --score;
        if (wobble == 2 && score < 5 && matched > 0) ++score;

        nlohmann::json j;
        j["score"] = score;
        j["matched"] = matched;
        j["total"] = total;
        j["comment"] = "Matched " + std::to_string(matched) + " of " + std::to_string(total) +
                       " reference observations.";
        return j.dump();
    }

    std::atomic<long> calls_{0};
};

/// Wraps a backend and replaces replies with unparseable prose for
/// requests selected by a predicate. Used to prove that injected faults
/// degrade only the affected clips.
class CorruptingBackend : public Backend {
public:
    using Predicate = std::function<bool(const ChatRequest&)>;

    CorruptingBackend(std::shared_ptr<Backend> inner, Predicate predicate)
        : inner_(std::move(inner)), predicate_(std::move(predicate)) {}

    ChatResponse complete_once(const ChatRequest& request) override {
        ChatResponse response = inner_->complete_once(request);
        if (predicate_(request)) {
            response.content =
                "I am sorry, but I cannot provide structured output for this transcript.";
            corrupted_.fetch_add(1, std::memory_order_relaxed);
        }
        return response;
    }

    std::string name() const override { return "corrupting(" + inner_->name() + ")"; }

    long corrupted() const { return corrupted_.load(std::memory_order_relaxed); }

private:
    std::shared_ptr<Backend> inner_;
    Predicate predicate_;
    std::atomic<long> corrupted_{0};
};

}  // namespace surgforge::llm
