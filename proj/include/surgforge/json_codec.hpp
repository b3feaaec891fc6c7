#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "surgforge/errors.hpp"
#include "surgforge/text.hpp"
#include "surgforge/types.hpp"

namespace surgforge {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Checked field access. All decode paths funnel through these so schema
// violations always name the offending field.
// ---------------------------------------------------------------------------

inline const json& require_field(const json& j, const char* field) {
    if (!j.is_object()) throw SchemaError("expected object", -1, field);
    auto it = j.find(field);
    if (it == j.end()) throw SchemaError("missing required field", -1, field);
    return *it;
}

inline std::string require_string(const json& j, const char* field) {
    const json& v = require_field(j, field);
    if (!v.is_string()) throw SchemaError("expected string", -1, field);
    return v.get<std::string>();
}

inline double require_number(const json& j, const char* field) {
    const json& v = require_field(j, field);
    if (!v.is_number()) throw SchemaError("expected number", -1, field);
    return v.get<double>();
}

inline int require_int(const json& j, const char* field) {
    const json& v = require_field(j, field);
    if (!v.is_number_integer()) throw SchemaError("expected integer", -1, field);
    return v.get<int>();
}

inline const json& require_array(const json& j, const char* field) {
    const json& v = require_field(j, field);
    if (!v.is_array()) throw SchemaError("expected array", -1, field);
    return v;
}

/// Missing, null, or empty-after-trim all normalize to absent.
inline std::optional<std::string> optional_string(const json& j, const char* field) {
    if (!j.is_object()) throw SchemaError("expected object", -1, field);
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw SchemaError("expected string or null", -1, field);
    std::string value = trim(it->get<std::string>());
    if (value.empty()) return std::nullopt;
    return value;
}

// ---------------------------------------------------------------------------
// Encoders / decoders, one pair per stage-boundary record. Field names are
// the stable on-disk contract; nlohmann emits object keys alphabetically,
// which keeps outputs byte-stable.
// ---------------------------------------------------------------------------

inline json encode(const SurgicalProcedure& p) {
    return json{{"procedure_id", p.procedure_id},
                {"title", p.title},
                {"source_url", p.source_url},
                {"category", p.category},
                {"duration_s", p.duration_s}};
}

inline SurgicalProcedure decode_procedure(const json& j) {
    SurgicalProcedure p;
    p.procedure_id = require_string(j, "procedure_id");
    p.title = require_string(j, "title");
    p.source_url = require_string(j, "source_url");
    p.category = require_string(j, "category");
    p.duration_s = require_number(j, "duration_s");
    if (p.duration_s < 0) throw SchemaError("duration_s must be >= 0", -1, "duration_s");
    return p;
}

inline json encode(const VideoClip& c) {
    return json{{"clip_id", c.clip_id},
                {"procedure_id", c.procedure_id},
                {"source_url", c.source_url},
                {"start_s", c.start_s},
                {"end_s", c.end_s},
                {"index", c.index}};
}

inline VideoClip decode_clip(const json& j) {
    VideoClip c;
    c.clip_id = require_string(j, "clip_id");
    c.procedure_id = require_string(j, "procedure_id");
    c.source_url = require_string(j, "source_url");
    c.start_s = require_number(j, "start_s");
    c.end_s = require_number(j, "end_s");
    c.index = require_int(j, "index");
    if (c.start_s < 0 || c.start_s >= c.end_s)
        throw SchemaError("clip interval must satisfy 0 <= start_s < end_s", -1, "start_s");
    return c;
}

inline json encode(const TranscriptSegment& s) {
    return json{{"start_s", s.start_s}, {"end_s", s.end_s}, {"text", s.text}};
}

inline TranscriptSegment decode_segment(const json& j) {
    TranscriptSegment s;
    s.start_s = require_number(j, "start_s");
    s.end_s = require_number(j, "end_s");
    s.text = require_string(j, "text");
    if (s.start_s > s.end_s) throw SchemaError("segment start_s > end_s", -1, "start_s");
    if (trim(s.text).empty()) throw SchemaError("segment text empty", -1, "text");
    return s;
}

inline json encode(const ClipTranscript& t) {
    json segments = json::array();
    for (const auto& s : t.segments) segments.push_back(encode(s));
    return json{{"clip_id", t.clip_id}, {"text", t.text}, {"segments", segments}};
}

inline ClipTranscript decode_transcript(const json& j) {
    ClipTranscript t;
    t.clip_id = require_string(j, "clip_id");
    t.text = require_string(j, "text");
    for (const auto& s : require_array(j, "segments")) t.segments.push_back(decode_segment(s));
    return t;
}

inline json encode(const KnowledgeUnit& u) {
    json j{{"observation", u.observation}};
    j["reason"] = u.reason.has_value() ? json(*u.reason) : json(nullptr);
    j["plan"] = u.plan.has_value() ? json(*u.plan) : json(nullptr);
    j["deduction"] = u.deduction.has_value() ? json(*u.deduction) : json(nullptr);
    return j;
}

inline KnowledgeUnit decode_unit(const json& j) {
    KnowledgeUnit u;
    u.observation = trim(require_string(j, "observation"));
    u.reason = optional_string(j, "reason");
    u.plan = optional_string(j, "plan");
    u.deduction = optional_string(j, "deduction");
    if (u.observation.empty()) throw SchemaError("unit observation empty", -1, "observation");
    return u;
}

inline json encode(const ExtractedKnowledge& k) {
    json units = json::array();
    for (const auto& u : k.units) units.push_back(encode(u));
    return json{{"clip_id", k.clip_id}, {"units", units}};
}

inline ExtractedKnowledge decode_knowledge(const json& j) {
    ExtractedKnowledge k;
    k.clip_id = require_string(j, "clip_id");
    for (const auto& u : require_array(j, "units")) k.units.push_back(decode_unit(u));
    return k;
}

inline json encode(const DatasetRecord& r) {
    json turns = json::array();
    for (const auto& t : r.conversation.turns)
        turns.push_back(json{{"role", to_string(t.role)}, {"content", t.content}});
    return json{{"id", r.conversation.id},
                {"clip_id", r.conversation.clip_id},
                {"source_url", r.conversation.source_url},
                {"video_placement", to_string(r.conversation.video_placement)},
                {"kind", to_string(r.kind)},
                {"conversation", turns}};
}

inline DatasetRecord decode_dataset_record(const json& j) {
    DatasetRecord r;
    r.conversation.id = require_string(j, "id");
    r.conversation.clip_id = require_string(j, "clip_id");
    r.conversation.source_url = require_string(j, "source_url");
    r.conversation.video_placement = placement_from_string(require_string(j, "video_placement"));
    r.kind = kind_from_string(require_string(j, "kind"));
    for (const auto& t : require_array(j, "conversation")) {
        Turn turn;
        turn.role = role_from_string(require_string(t, "role"));
        turn.content = require_string(t, "content");
        r.conversation.turns.push_back(std::move(turn));
    }
    return r;
}

inline json encode(const JudgeVerdict& v) {
    return json{{"id", v.id},
                {"score", v.score},
                {"matched", v.matched},
                {"total", v.total},
                {"comment", v.comment}};
}

inline JudgeVerdict decode_verdict(const json& j) {
    JudgeVerdict v;
    v.id = require_string(j, "id");
    v.score = require_int(j, "score");
    v.matched = require_int(j, "matched");
    v.total = require_int(j, "total");
    v.comment = require_string(j, "comment");
    validate(v);
    return v;
}

inline json encode(const FailureRecord& f) {
    return json{{"clip_id", f.clip_id},
                {"stage", f.stage},
                {"reason", f.reason},
                {"attempts", f.attempts}};
}

inline FailureRecord decode_failure(const json& j) {
    FailureRecord f;
    f.clip_id = require_string(j, "clip_id");
    f.stage = require_string(j, "stage");
    f.reason = require_string(j, "reason");
    f.attempts = require_int(j, "attempts");
    return f;
}

inline json encode(const FlagRecord& f) {
    return json{{"clip_id", f.clip_id}, {"stage", f.stage}, {"reason", f.reason}};
}

inline FlagRecord decode_flag(const json& j) {
    FlagRecord f;
    f.clip_id = require_string(j, "clip_id");
    f.stage = require_string(j, "stage");
    f.reason = require_string(j, "reason");
    return f;
}

inline json encode(const ActionTriplet& t) {
    return json{{"instrument", t.instrument}, {"verb", t.verb}, {"target", t.target}};
}

inline ActionTriplet decode_triplet(const json& j) {
    ActionTriplet t;
    t.instrument = require_string(j, "instrument");
    t.verb = require_string(j, "verb");
    t.target = require_string(j, "target");
    validate(t);
    return t;
}

inline json encode(const TripletStream& s) {
    json frames = json::array();
    for (const auto& f : s.frames) {
        json triplets = json::array();
        for (const auto& t : f.triplets) triplets.push_back(encode(t));
        frames.push_back(json{{"frame_index", f.frame_index}, {"triplets", triplets}});
    }
    return json{{"video_id", s.video_id}, {"fps", s.fps}, {"frames", frames}};
}

inline TripletStream decode_triplet_stream(const json& j) {
    TripletStream s;
    s.video_id = require_string(j, "video_id");
    s.fps = require_number(j, "fps");
    if (s.fps <= 0) throw SchemaError("fps must be positive", -1, "fps");
    for (const auto& fj : require_array(j, "frames")) {
        FrameAnnotation f;
        const json& idx = require_field(fj, "frame_index");
        if (!idx.is_number_integer()) throw SchemaError("expected integer", -1, "frame_index");
        f.frame_index = idx.get<long>();
        if (f.frame_index < 0) throw SchemaError("frame_index must be >= 0", -1, "frame_index");
        for (const auto& tj : require_array(fj, "triplets")) f.triplets.push_back(decode_triplet(tj));
        std::sort(f.triplets.begin(), f.triplets.end());
        f.triplets.erase(std::unique(f.triplets.begin(), f.triplets.end()), f.triplets.end());
        s.frames.push_back(std::move(f));
    }
    return s;
}

inline json encode(const Prediction& p) {
    return json{{"id", p.id}, {"answer", p.answer}};
}

inline Prediction decode_prediction(const json& j) {
    Prediction p;
    p.id = require_string(j, "id");
    p.answer = require_string(j, "answer");
    return p;
}

inline json encode(const Reference& r) {
    return json{{"id", r.id},
                {"question", r.question},
                {"reference_observations", r.reference_observations}};
}

inline Reference decode_reference(const json& j) {
    Reference r;
    r.id = require_string(j, "id");
    r.question = require_string(j, "question");
    for (const auto& o : require_array(j, "reference_observations")) {
        if (!o.is_string()) throw SchemaError("expected string", -1, "reference_observations");
        r.reference_observations.push_back(o.get<std::string>());
    }
    if (r.reference_observations.empty())
        throw SchemaError("reference_observations must be non-empty", -1, "reference_observations");
    return r;
}

inline json encode(const HumanScore& h) {
    return json{{"id", h.id}, {"human_score", h.human_score}};
}

inline HumanScore decode_human_score(const json& j) {
    HumanScore h;
    h.id = require_string(j, "id");
    h.human_score = require_number(j, "human_score");
    return h;
}

// ---------------------------------------------------------------------------
// Codec trait used by the generic JSONL reader/writer.
// ---------------------------------------------------------------------------

template <typename T>
struct Codec;

template <>
struct Codec<SurgicalProcedure> {
    static json to_json(const SurgicalProcedure& v) { return encode(v); }
    static SurgicalProcedure from_json(const json& j) { return decode_procedure(j); }
    static std::string key(const SurgicalProcedure& v) { return v.procedure_id; }
};

template <>
struct Codec<VideoClip> {
    static json to_json(const VideoClip& v) { return encode(v); }
    static VideoClip from_json(const json& j) { return decode_clip(j); }
    static std::string key(const VideoClip& v) { return v.clip_id; }
};

template <>
struct Codec<ClipTranscript> {
    static json to_json(const ClipTranscript& v) { return encode(v); }
    static ClipTranscript from_json(const json& j) { return decode_transcript(j); }
    static std::string key(const ClipTranscript& v) { return v.clip_id; }
};

template <>
struct Codec<ExtractedKnowledge> {
    static json to_json(const ExtractedKnowledge& v) { return encode(v); }
    static ExtractedKnowledge from_json(const json& j) { return decode_knowledge(j); }
    static std::string key(const ExtractedKnowledge& v) { return v.clip_id; }
};

template <>
struct Codec<DatasetRecord> {
    static json to_json(const DatasetRecord& v) { return encode(v); }
    static DatasetRecord from_json(const json& j) { return decode_dataset_record(j); }
    static std::string key(const DatasetRecord& v) { return v.conversation.id; }
};

template <>
struct Codec<JudgeVerdict> {
    static json to_json(const JudgeVerdict& v) { return encode(v); }
    static JudgeVerdict from_json(const json& j) { return decode_verdict(j); }
    static std::string key(const JudgeVerdict& v) { return v.id; }
};

template <>
struct Codec<FailureRecord> {
    static json to_json(const FailureRecord& v) { return encode(v); }
    static FailureRecord from_json(const json& j) { return decode_failure(j); }
    static std::string key(const FailureRecord& v) { return v.stage + "\x1f" + v.clip_id; }
};

template <>
struct Codec<FlagRecord> {
    static json to_json(const FlagRecord& v) { return encode(v); }
    static FlagRecord from_json(const json& j) { return decode_flag(j); }
    static std::string key(const FlagRecord& v) { return v.stage + "\x1f" + v.clip_id; }
};

template <>
struct Codec<TripletStream> {
    static json to_json(const TripletStream& v) { return encode(v); }
    static TripletStream from_json(const json& j) { return decode_triplet_stream(j); }
    static std::string key(const TripletStream& v) { return v.video_id; }
};

template <>
struct Codec<Prediction> {
    static json to_json(const Prediction& v) { return encode(v); }
    static Prediction from_json(const json& j) { return decode_prediction(j); }
    static std::string key(const Prediction& v) { return v.id; }
};

template <>
struct Codec<Reference> {
    static json to_json(const Reference& v) { return encode(v); }
    static Reference from_json(const json& j) { return decode_reference(j); }
    static std::string key(const Reference& v) { return v.id; }
};

template <>
struct Codec<HumanScore> {
    static json to_json(const HumanScore& v) { return encode(v); }
    static HumanScore from_json(const json& j) { return decode_human_score(j); }
    static std::string key(const HumanScore& v) { return v.id; }
};

}  // namespace surgforge
