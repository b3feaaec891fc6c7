#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include <json.hpp>

#include "surgforge/conversation.hpp"
#include "surgforge/digest.hpp"
#include "surgforge/json_codec.hpp"
#include "surgforge/jsonl.hpp"
#include "surgforge/llm/client.hpp"
#include "surgforge/llm_task.hpp"
#include "surgforge/rng.hpp"
#include "surgforge/types.hpp"

namespace surgforge {

struct GenerationPromptSpec {
    std::string observation_system;
    std::string reasoning_system;
    std::string model;
    double temperature = 0.2;
    int max_tokens = 1024;
    int max_retries = 2;
};

/// Parses a strict {"question": ..., "answer": ...} reply.
inline QAPair parse_qa(const std::string& raw, QAKind kind) {
    const std::string body = detail::strip_code_fence(raw);
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) throw SchemaError("QA reply is not valid JSON");
    if (!j.is_object()) throw SchemaError("QA reply must be a JSON object");
    QAPair pair;
    pair.question = trim(require_string(j, "question"));
    pair.answer = trim(require_string(j, "answer"));
    pair.kind = kind;
    if (pair.question.empty()) throw SchemaError("question is empty", -1, "question");
    if (pair.answer.empty()) throw SchemaError("answer is empty", -1, "answer");
    return pair;
}

inline std::string concatenated_observations(const ExtractedKnowledge& knowledge) {
    std::string out;
    for (std::size_t i = 0; i < knowledge.units.size(); ++i) {
        out += std::to_string(i + 1) + ". " + knowledge.units[i].observation + "\n";
    }
    return out;
}

/// First question-answer pair of a clip: prompts with the concatenation of
/// every observation, in transcript order.
inline TaskOutcome<QAPair> gen_observation_qa(const std::string& title,
                                              const ExtractedKnowledge& knowledge,
                                              llm::ChatClient& client,
                                              const GenerationPromptSpec& spec) {
    if (knowledge.units.empty())
        throw ValidationError("observation QA requires at least one knowledge unit");
    llm::ChatRequest request;
    request.model = spec.model;
    request.temperature = spec.temperature;
    request.max_tokens = spec.max_tokens;
    request.request_tag = "obs:" + knowledge.clip_id;
    request.messages.push_back({Role::system, spec.observation_system});
    request.messages.push_back(
        {Role::user, "Title: " + title + "\nObservations:\n" + concatenated_observations(knowledge)});
    return run_json_task<QAPair>(
        client, request,
        [](const std::string& raw) { return parse_qa(raw, QAKind::observation); },
        spec.max_retries);
}

struct PairFailure {
    std::size_t unit_index = 0;
    QAKind kind = QAKind::reasoning_reason;
    std::string reason;
    int attempts = 0;
};

struct ReasoningResult {
    std::vector<QAPair> pairs;
    std::vector<PairFailure> failures;
};

namespace detail {

inline const char* relation_name(QAKind kind) {
    switch (kind) {
        case QAKind::reasoning_reason: return "reason";
        case QAKind::reasoning_plan: return "plan";
        case QAKind::reasoning_deduction: return "deduction";
        default: return "statement";
    }
}

}  // namespace detail

/// One reasoning pair per present optional field, unit order first, then
/// reason < plan < deduction within a unit. Per-pair failures are recorded
/// and do not disturb the remaining pairs.
inline ReasoningResult gen_reasoning_qas(const std::string& title,
                                         const ExtractedKnowledge& knowledge,
                                         llm::ChatClient& client,
                                         const GenerationPromptSpec& spec) {
    ReasoningResult result;
    const std::string description = concatenated_observations(knowledge);

    for (std::size_t i = 0; i < knowledge.units.size(); ++i) {
        const KnowledgeUnit& unit = knowledge.units[i];
        const std::pair<QAKind, const std::optional<std::string>*> fields[] = {
            {QAKind::reasoning_reason, &unit.reason},
            {QAKind::reasoning_plan, &unit.plan},
            {QAKind::reasoning_deduction, &unit.deduction},
        };
        for (const auto& [kind, value] : fields) {
            if (!value->has_value()) continue;
            llm::ChatRequest request;
            request.model = spec.model;
            request.temperature = spec.temperature;
            request.max_tokens = spec.max_tokens;
            request.request_tag = "reason:" + knowledge.clip_id + ":" + std::to_string(i) + ":" +
                                  detail::relation_name(kind);
            request.messages.push_back({Role::system, spec.reasoning_system});
            request.messages.push_back(
                {Role::user, "Title: " + title + "\nDescription:\n" + description +
                                 "Observation: " + unit.observation + "\nStatement (" +
                                 detail::relation_name(kind) + "): " + **value});
            auto outcome = run_json_task<QAPair>(
                client, request,
                [kind = kind](const std::string& raw) { return parse_qa(raw, kind); },
                spec.max_retries);
            if (auto* failure = std::get_if<TaskFailure>(&outcome)) {
                result.failures.push_back(PairFailure{i, kind, failure->reason, failure->attempts});
            } else {
                QAPair pair = std::get<QAPair>(outcome);
                pair.unit_index = i;
                result.pairs.push_back(std::move(pair));
            }
        }
    }
    return result;
}

/// Stacks QA pairs into one conversation. Turn 1 gets the video
/// placeholder side from a seeded coin keyed on the clip id.
inline Conversation assemble_conversation(const VideoClip& clip, const std::vector<QAPair>& qas,
                                          std::uint64_t seed) {
    if (qas.empty()) throw EmptyConversationError("clip '" + clip.clip_id + "' has no QA pairs");
    for (std::size_t i = 1; i < qas.size(); ++i) {
        if (qas[i].kind == QAKind::observation)
            throw ValidationError("observation pair must come first");
    }
    Conversation conv;
    conv.clip_id = clip.clip_id;
    conv.source_url = clip.source_url;
    conv.id = clip.clip_id + (qas.front().kind == QAKind::alignment ? ".align" : ".qa");
    for (const QAPair& qa : qas) {
        validate(qa);
        conv.turns.push_back(Turn{Role::user, qa.question});
        conv.turns.push_back(Turn{Role::assistant, qa.answer});
    }
    conv.video_placement = keyed_coin(seed, clip.clip_id) ? VideoPlacement::before_question
                                                          : VideoPlacement::after_question;
    return conv;
}

struct DatasetManifest {
    std::size_t total = 0;
    std::map<std::string, std::size_t> counts_per_kind;
    std::string content_digest;
};

inline json encode(const DatasetManifest& m) {
    json counts = json::object();
    for (const auto& [kind, n] : m.counts_per_kind) counts[kind] = n;
    return json{{"total", m.total},
                {"counts_per_kind", counts},
                {"content_digest", m.content_digest}};
}

/// Validates and writes dataset.jsonl sorted by id, returning counts and
/// the file's content digest.
inline DatasetManifest export_dataset(const std::vector<DatasetRecord>& records,
                                      const std::filesystem::path& path,
                                      std::string_view video_token = kDefaultVideoToken,
                                      std::string_view stop_token = kDefaultStopToken) {
    std::unordered_set<std::string> ids;
    for (const DatasetRecord& record : records) {
        try {
            validate_conversation(record.conversation, video_token, stop_token);
        } catch (const Error& e) {
            throw ValidationError("record '" + record.conversation.id + "': " + e.what());
        }
        if (record.conversation.clip_id.empty())
            throw ValidationError("record '" + record.conversation.id + "': empty clip_id");
        if (!ids.insert(record.conversation.id).second)
            throw ValidationError("duplicate dataset id '" + record.conversation.id + "'");
    }

    write_jsonl(path, records);

    DatasetManifest manifest;
    manifest.total = records.size();
    for (const DatasetRecord& record : records) manifest.counts_per_kind[to_string(record.kind)]++;
    manifest.content_digest = digest_file(path);
    return manifest;
}

}  // namespace surgforge
