#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "surgforge/json_codec.hpp"
#include "surgforge/llm/client.hpp"
#include "surgforge/llm_task.hpp"
#include "surgforge/prompts.hpp"
#include "surgforge/text.hpp"
#include "surgforge/types.hpp"

namespace surgforge {

/// Everything build_extraction_prompt needs beyond the clip itself.
struct ExtractionPromptSpec {
    std::string system_text;
    std::vector<FewshotExample> fewshot;
    std::string model;
    double temperature = 0.0;
    int max_tokens = 1024;
};

struct ExtractionPolicy {
    /// Transcripts below this word count are skipped without a backend call.
    int min_transcript_words = 10;
    /// Full prompt retries after the first attempt (each may add one
    /// repair re-prompt).
    int max_retries = 2;
};

inline std::string extraction_query(const std::string& title, const ClipTranscript& transcript) {
    return "Title: " + title + "\nTranscript: " + transcript.text;
}

/// System instruction, few-shot pairs, then the title+transcript query.
inline llm::ChatRequest build_extraction_prompt(const std::string& title,
                                                const ClipTranscript& transcript,
                                                const ExtractionPromptSpec& spec) {
    llm::ChatRequest request;
    request.model = spec.model;
    request.temperature = spec.temperature;
    request.max_tokens = spec.max_tokens;
    request.request_tag = "extract:" + transcript.clip_id;
    request.messages.push_back({Role::system, spec.system_text});
    for (const FewshotExample& example : spec.fewshot) {
        request.messages.push_back({Role::user, example.user});
        request.messages.push_back({Role::assistant, example.assistant});
    }
    request.messages.push_back({Role::user, extraction_query(title, transcript)});
    return request;
}

/// Parses the model's extraction reply: a JSON array of unit objects.
/// Units with an empty observation are dropped; empty optional strings
/// normalize to absent.
inline std::vector<KnowledgeUnit> parse_extraction(const std::string& raw) {
    const std::string body = detail::strip_code_fence(raw);
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) throw SchemaError("extraction reply is not valid JSON");
    if (!j.is_array()) throw SchemaError("extraction reply must be a JSON array of units");
    std::vector<KnowledgeUnit> units;
    for (const auto& uj : j) {
        if (!uj.is_object()) throw SchemaError("unit must be a JSON object");
        auto it = uj.find("observation");
        if (it == uj.end() || it->is_null()) continue;
        if (!it->is_string()) throw SchemaError("expected string", -1, "observation");
        KnowledgeUnit unit;
        unit.observation = trim(it->get<std::string>());
        if (unit.observation.empty()) continue;
        unit.reason = optional_string(uj, "reason");
        unit.plan = optional_string(uj, "plan");
        unit.deduction = optional_string(uj, "deduction");
        units.push_back(std::move(unit));
    }
    return units;
}

using ExtractOutcome = std::variant<ExtractedKnowledge, ClipSkipped, ClipFailed>;

/// Stage-1 worker for one clip. Too-short transcripts are skipped before
/// any backend call; parse failures go through the repair/retry policy;
/// persistent failure becomes data, never an exception.
inline ExtractOutcome extract_clip(const std::string& title, const ClipTranscript& transcript,
                                   llm::ChatClient& client, const ExtractionPromptSpec& spec,
                                   const ExtractionPolicy& policy = {}) {
    if (word_count(transcript.text) < static_cast<std::size_t>(policy.min_transcript_words))
        return ClipSkipped{transcript.clip_id, "too_short"};

    const llm::ChatRequest base = build_extraction_prompt(title, transcript, spec);
    auto outcome = run_json_task<std::vector<KnowledgeUnit>>(
        client, base, [](const std::string& raw) { return parse_extraction(raw); },
        policy.max_retries);
    if (auto* failure = std::get_if<TaskFailure>(&outcome))
        return ClipFailed{transcript.clip_id, failure->reason, failure->attempts};
    return ExtractedKnowledge{transcript.clip_id,
                              std::move(std::get<std::vector<KnowledgeUnit>>(outcome))};
}

}  // namespace surgforge
