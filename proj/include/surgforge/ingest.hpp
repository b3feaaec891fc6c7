#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "surgforge/errors.hpp"
#include "surgforge/jsonl.hpp"
#include "surgforge/rng.hpp"
#include "surgforge/types.hpp"

namespace surgforge {

/// Loads the procedure catalog (JSON array). Input order is preserved.
inline std::vector<SurgicalProcedure> load_catalog(const std::filesystem::path& path) {
    json j = read_json_file(path);
    if (!j.is_array()) throw SchemaError("catalog must be a JSON array");
    std::vector<SurgicalProcedure> procedures;
    std::unordered_set<std::string> seen;
    long entry = 0;
    for (const auto& e : j) {
        ++entry;
        try {
            procedures.push_back(decode_procedure(e));
        } catch (const SchemaError& err) {
            throw SchemaError(std::string(err.what()) + " (catalog entry " +
                              std::to_string(entry) + ")");
        }
        if (!seen.insert(procedures.back().procedure_id).second)
            throw DuplicateIdError("duplicate procedure_id '" +
                                   procedures.back().procedure_id + "'");
    }
    return procedures;
}

/// Reads the timestamped segment output of an ASR aligner:
/// {segments:[{start, end, text}]}. Whitespace-only segments are dropped.
inline std::vector<TranscriptSegment> load_asr_segments(const std::filesystem::path& path) {
    json j = read_json_file(path);
    std::vector<TranscriptSegment> segments;
    for (const auto& sj : require_array(j, "segments")) {
        TranscriptSegment s;
        s.start_s = require_number(sj, "start");
        s.end_s = require_number(sj, "end");
        if (s.start_s > s.end_s) throw SchemaError("segment start > end", -1, "start");
        s.text = trim(require_string(sj, "text"));
        if (s.text.empty()) continue;
        segments.push_back(std::move(s));
    }
    std::stable_sort(segments.begin(), segments.end(),
                     [](const TranscriptSegment& a, const TranscriptSegment& b) {
                         return a.start_s < b.start_s;
                     });
    return segments;
}

inline std::string make_clip_id(const std::string& procedure_id, int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", index);
    return procedure_id + "#" + buf;
}

struct SegmentationResult {
    std::vector<VideoClip> clips;
    /// Set when the source is shorter than min_s and became one short clip.
    bool sub_minimum = false;
};

/// Greedy cuts at max_s. A tail shorter than min_s is merged into the
/// previous clip and the merged span is split into two equal halves, so
/// every clip duration stays within [min_s, max_s] whenever
/// max_s >= 2*min_s. Sources shorter than min_s become a single flagged
/// clip instead of being dropped.
inline SegmentationResult segment_duration(const std::string& procedure_id,
                                           const std::string& source_url, double duration_s,
                                           double min_s, double max_s) {
    if (max_s < 2.0 * min_s)
        throw PolicyError("max_s must be at least twice min_s (tail policy)");
    if (duration_s <= 0.0)
        throw EmptyVideoError("procedure '" + procedure_id + "' has zero duration");

    std::vector<double> bounds{0.0};
    bool sub_minimum = false;
    if (duration_s < min_s) {
        sub_minimum = true;
        bounds.push_back(duration_s);
    } else {
        const auto full = static_cast<long>(duration_s / max_s);
        const double remainder = duration_s - static_cast<double>(full) * max_s;
        for (long i = 1; i <= full; ++i) bounds.push_back(static_cast<double>(i) * max_s);
        if (remainder > 0.0 && remainder < min_s) {
            // Tail too short: widen the previous cut, then halve the span.
            bounds.pop_back();
            const double start = bounds.back();
            bounds.push_back(start + (duration_s - start) / 2.0);
            bounds.push_back(duration_s);
        } else if (remainder > 0.0) {
            bounds.push_back(duration_s);
        }
    }

    SegmentationResult result;
    result.sub_minimum = sub_minimum;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        VideoClip clip;
        clip.index = static_cast<int>(i);
        clip.clip_id = make_clip_id(procedure_id, clip.index);
        clip.procedure_id = procedure_id;
        clip.source_url = source_url;
        clip.start_s = bounds[i];
        clip.end_s = bounds[i + 1];
        result.clips.push_back(std::move(clip));
    }
    return result;
}

inline SegmentationResult segment_clips(const SurgicalProcedure& procedure, double min_s,
                                        double max_s) {
    return segment_duration(procedure.procedure_id, procedure.source_url,
                            procedure.duration_s, min_s, max_s);
}

inline double overlap_s(const TranscriptSegment& segment, const VideoClip& clip) {
    const double lo = std::max(segment.start_s, clip.start_s);
    const double hi = std::min(segment.end_s, clip.end_s);
    return std::max(0.0, hi - lo);
}

/// Assigns every segment whole to the clip with maximal temporal overlap
/// (ties toward the earlier clip). Clips with no segments still get an
/// empty ClipTranscript.
inline std::vector<ClipTranscript> assign_transcript(
    const std::vector<TranscriptSegment>& segments, const std::vector<VideoClip>& clips) {
    std::vector<ClipTranscript> transcripts;
    transcripts.reserve(clips.size());
    for (const VideoClip& clip : clips) transcripts.push_back(ClipTranscript{clip.clip_id, "", {}});
    if (clips.empty()) return transcripts;

    for (const TranscriptSegment& segment : segments) {
        std::size_t best = 0;
        double best_overlap = overlap_s(segment, clips[0]);
        for (std::size_t i = 1; i < clips.size(); ++i) {
            const double ov = overlap_s(segment, clips[i]);
            if (ov > best_overlap) {
                best_overlap = ov;
                best = i;
            }
        }
        ClipTranscript& t = transcripts[best];
        if (!t.text.empty()) t.text += ' ';
        t.text += segment.text;
        t.segments.push_back(segment);
    }
    return transcripts;
}

struct SplitResult {
    std::vector<SurgicalProcedure> train;
    std::vector<SurgicalProcedure> test;
};

/// Procedure-level split: seeded uniform shuffle, then a prefix of
/// round(n * test_fraction) procedures becomes the test side. Both sides
/// are returned sorted by procedure_id.
inline SplitResult split_procedures(const std::vector<SurgicalProcedure>& procedures,
                                    double test_fraction, std::uint64_t seed) {
    if (procedures.empty()) throw EmptyCatalogError("cannot split an empty catalog");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw PolicyError("test_fraction must lie strictly between 0 and 1");

    std::vector<SurgicalProcedure> shuffled = procedures;
    seeded_shuffle(shuffled, seed);
    const auto n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(shuffled.size()) * test_fraction));

    SplitResult result;
    result.test.assign(shuffled.begin(), shuffled.begin() + static_cast<long>(n_test));
    result.train.assign(shuffled.begin() + static_cast<long>(n_test), shuffled.end());
    auto by_id = [](const SurgicalProcedure& a, const SurgicalProcedure& b) {
        return a.procedure_id < b.procedure_id;
    };
    std::sort(result.train.begin(), result.train.end(), by_id);
    std::sort(result.test.begin(), result.test.end(), by_id);
    return result;
}

}  // namespace surgforge
