#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "surgforge/errors.hpp"
#include "surgforge/text.hpp"

namespace surgforge {

enum class Role { system, user, assistant };

inline std::string to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

inline Role role_from_string(std::string_view s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw SchemaError("unknown role '" + std::string(s) + "'");
}

enum class VideoPlacement { before_question, after_question };

inline std::string to_string(VideoPlacement p) {
    return p == VideoPlacement::before_question ? "before_question" : "after_question";
}

inline VideoPlacement placement_from_string(std::string_view s) {
    if (s == "before_question") return VideoPlacement::before_question;
    if (s == "after_question") return VideoPlacement::after_question;
    throw SchemaError("unknown video_placement '" + std::string(s) + "'");
}

enum class QAKind { observation, reasoning_reason, reasoning_plan, reasoning_deduction, alignment };

inline std::string to_string(QAKind kind) {
    switch (kind) {
        case QAKind::observation: return "observation";
        case QAKind::reasoning_reason: return "reasoning_reason";
        case QAKind::reasoning_plan: return "reasoning_plan";
        case QAKind::reasoning_deduction: return "reasoning_deduction";
        case QAKind::alignment: return "alignment";
    }
    return "observation";
}

inline QAKind kind_from_string(std::string_view s) {
    if (s == "observation") return QAKind::observation;
    if (s == "reasoning_reason") return QAKind::reasoning_reason;
    if (s == "reasoning_plan") return QAKind::reasoning_plan;
    if (s == "reasoning_deduction") return QAKind::reasoning_deduction;
    if (s == "alignment") return QAKind::alignment;
    throw SchemaError("unknown kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Catalog and clip records
// ---------------------------------------------------------------------------

struct SurgicalProcedure {
    std::string procedure_id;
    std::string title;
    std::string source_url;
    std::string category;
    double duration_s = 0.0;

    auto operator<=>(const SurgicalProcedure&) const = default;
};

/// One time-bounded segment of a procedure video. `source_url` is carried
/// along so downstream records can cite their origin without a catalog join.
struct VideoClip {
    std::string clip_id;
    std::string procedure_id;
    std::string source_url;
    double start_s = 0.0;
    double end_s = 0.0;
    int index = 0;

    double duration_s() const { return end_s - start_s; }
    auto operator<=>(const VideoClip&) const = default;
};

struct TranscriptSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    std::string text;

    auto operator<=>(const TranscriptSegment&) const = default;
};

struct ClipTranscript {
    std::string clip_id;
    std::string text;
    std::vector<TranscriptSegment> segments;

    bool empty() const { return segments.empty(); }
    auto operator<=>(const ClipTranscript&) const = default;
};

// ---------------------------------------------------------------------------
// Extracted knowledge
// ---------------------------------------------------------------------------

/// One extracted observation and whatever reasoning attaches to it.
/// Optional fields are absent or non-empty, never empty strings.
struct KnowledgeUnit {
    std::string observation;
    std::optional<std::string> reason;
    std::optional<std::string> plan;
    std::optional<std::string> deduction;

    auto operator<=>(const KnowledgeUnit&) const = default;
};

struct ExtractedKnowledge {
    std::string clip_id;
    std::vector<KnowledgeUnit> units;

    auto operator<=>(const ExtractedKnowledge&) const = default;
};

inline void validate(const KnowledgeUnit& unit) {
    if (trim(unit.observation).empty())
        throw ValidationError("knowledge unit has empty observation");
    for (const auto* field : {&unit.reason, &unit.plan, &unit.deduction}) {
        if (field->has_value() && trim(**field).empty())
            throw ValidationError("knowledge unit optional field present but empty");
    }
}

// ---------------------------------------------------------------------------
// QA pairs and conversations
// ---------------------------------------------------------------------------

struct QAPair {
    std::string question;
    std::string answer;
    QAKind kind = QAKind::observation;
    std::optional<std::size_t> unit_index;

    auto operator<=>(const QAPair&) const = default;
};

inline void validate(const QAPair& pair) {
    if (trim(pair.question).empty()) throw ValidationError("QA pair has empty question");
    if (trim(pair.answer).empty()) throw ValidationError("QA pair has empty answer");
    const bool indexed = pair.unit_index.has_value();
    if ((pair.kind == QAKind::observation || pair.kind == QAKind::alignment) && indexed)
        throw ValidationError("observation/alignment pair must not carry unit_index");
}

struct Turn {
    Role role = Role::user;
    std::string content;

    auto operator<=>(const Turn&) const = default;
};

/// A multi-turn conversation about one clip. Turn contents hold bare
/// question/answer text; the video placeholder is introduced at render
/// time, positioned in turn 1 by `video_placement`.
struct Conversation {
    std::string id;
    std::string clip_id;
    std::string source_url;
    std::vector<Turn> turns;
    VideoPlacement video_placement = VideoPlacement::after_question;

    std::size_t rounds() const { return turns.size() / 2; }
    auto operator<=>(const Conversation&) const = default;
};

/// Turn-structure check; token checks live in conversation.hpp where the
/// tokens are known.
inline void validate_structure(const Conversation& conv) {
    if (conv.turns.size() < 2 || conv.turns.size() % 2 != 0)
        throw InvalidConversation("conversation must have an even number of turns, at least 2");
    for (std::size_t i = 0; i < conv.turns.size(); ++i) {
        const Role expected = (i % 2 == 0) ? Role::user : Role::assistant;
        if (conv.turns[i].role != expected)
            throw InvalidConversation("turn " + std::to_string(i + 1) +
                                      " must alternate user/assistant starting with user");
        if (conv.turns[i].content.empty())
            throw InvalidConversation("turn " + std::to_string(i + 1) + " has empty content");
    }
}

// ---------------------------------------------------------------------------
// Evaluation records
// ---------------------------------------------------------------------------

struct JudgeVerdict {
    std::string id;
    int score = 0;
    int matched = 0;
    int total = 1;
    std::string comment;

    auto operator<=>(const JudgeVerdict&) const = default;
};

inline void validate(const JudgeVerdict& verdict) {
    if (verdict.score < 0 || verdict.score > 5)
        throw RangeError("score " + std::to_string(verdict.score) + " outside [0, 5]");
    if (verdict.total < 1)
        throw RangeError("total must be >= 1");
    if (verdict.matched < 0 || verdict.matched > verdict.total)
        throw RangeError("matched " + std::to_string(verdict.matched) + " outside [0, total=" +
                         std::to_string(verdict.total) + "]");
}

struct MetricsReport {
    std::size_t n_items = 0;
    double mean_score = 0.0;
    double accuracy_at_1 = 0.0;
    double accuracy_at_all = 0.0;

    auto operator<=>(const MetricsReport&) const = default;
};

// ---------------------------------------------------------------------------
// Action-triplet annotations (concept alignment)
// ---------------------------------------------------------------------------

struct ActionTriplet {
    std::string instrument;
    std::string verb;
    std::string target;

    auto operator<=>(const ActionTriplet&) const = default;
};

inline void validate(const ActionTriplet& t) {
    if (t.instrument.empty() || t.verb.empty() || t.target.empty())
        throw ValidationError("action triplet labels must be non-empty");
}

/// Frames are multi-label; `triplets` is kept sorted and deduplicated so
/// set equality is plain vector equality.
struct FrameAnnotation {
    long frame_index = 0;
    std::vector<ActionTriplet> triplets;

    auto operator<=>(const FrameAnnotation&) const = default;
};

struct MergedTripletSpan {
    long start_frame = 0;
    long end_frame = 0;
    std::vector<ActionTriplet> triplets;

    bool idle() const { return triplets.empty(); }
    long frame_count() const { return end_frame - start_frame + 1; }
    auto operator<=>(const MergedTripletSpan&) const = default;
};

/// One video's frame-level annotation stream, as read from triplets.jsonl.
struct TripletStream {
    std::string video_id;
    double fps = 1.0;
    std::vector<FrameAnnotation> frames;

    auto operator<=>(const TripletStream&) const = default;
};

// ---------------------------------------------------------------------------
// Stage-boundary records
// ---------------------------------------------------------------------------

/// One line of dataset.jsonl. `kind` is the kind of the leading QA pair.
struct DatasetRecord {
    Conversation conversation;
    QAKind kind = QAKind::observation;

    auto operator<=>(const DatasetRecord&) const = default;
};

/// One line of failures.jsonl: a clip that a stage gave up on.
struct FailureRecord {
    std::string clip_id;
    std::string stage;
    std::string reason;
    int attempts = 0;

    auto operator<=>(const FailureRecord&) const = default;
};

/// One line of flags.jsonl: audit trail for clips that were skipped or
/// marked unusual without being failures (too-short transcripts,
/// sub-minimum durations, all-idle annotation clips).
struct FlagRecord {
    std::string clip_id;
    std::string stage;
    std::string reason;

    auto operator<=>(const FlagRecord&) const = default;
};

struct Prediction {
    std::string id;
    std::string answer;

    auto operator<=>(const Prediction&) const = default;
};

struct Reference {
    std::string id;
    std::string question;
    std::vector<std::string> reference_observations;

    auto operator<=>(const Reference&) const = default;
};

struct HumanScore {
    std::string id;
    double human_score = 0.0;

    auto operator<=>(const HumanScore&) const = default;
};

}  // namespace surgforge
