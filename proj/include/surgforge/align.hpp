#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "surgforge/generate.hpp"
#include "surgforge/ingest.hpp"
#include "surgforge/llm/client.hpp"
#include "surgforge/llm_task.hpp"
#include "surgforge/types.hpp"

namespace surgforge {

/// Maximal runs of frames sharing an identical triplet set become one
/// span. A run also breaks on a frame-index gap, so expanding the spans
/// reproduces the input labeling exactly even for sparse streams. Frames
/// with empty sets form explicit idle spans.
inline std::vector<MergedTripletSpan> merge_consecutive(const std::vector<FrameAnnotation>& frames) {
    std::vector<MergedTripletSpan> spans;
    long prev_index = -1;
    bool first = true;
    for (const FrameAnnotation& frame : frames) {
        if (!first && frame.frame_index <= prev_index)
            throw OrderError("frame_index " + std::to_string(frame.frame_index) +
                             " does not increase past " + std::to_string(prev_index));
        std::vector<ActionTriplet> set = frame.triplets;
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());

        const bool extends = !spans.empty() && frame.frame_index == prev_index + 1 &&
                             spans.back().triplets == set;
        if (extends) {
            spans.back().end_frame = frame.frame_index;
        } else {
            spans.push_back(MergedTripletSpan{frame.frame_index, frame.frame_index, std::move(set)});
        }
        prev_index = frame.frame_index;
        first = false;
    }
    return spans;
}

/// Inverse of merge_consecutive for contiguous spans.
inline std::vector<FrameAnnotation> expand_spans(const std::vector<MergedTripletSpan>& spans) {
    std::vector<FrameAnnotation> frames;
    for (const MergedTripletSpan& span : spans) {
        for (long f = span.start_frame; f <= span.end_frame; ++f)
            frames.push_back(FrameAnnotation{f, span.triplets});
    }
    return frames;
}

inline std::vector<MergedTripletSpan> active_spans(const std::vector<MergedTripletSpan>& spans) {
    std::vector<MergedTripletSpan> active;
    std::copy_if(spans.begin(), spans.end(), std::back_inserter(active),
                 [](const MergedTripletSpan& s) { return !s.idle(); });
    return active;
}

/// Chronological "(instrument, verb, target)" lines; idle spans excluded.
inline std::string render_span_lines(const std::vector<MergedTripletSpan>& spans) {
    std::string out;
    for (const MergedTripletSpan& span : spans) {
        if (span.idle()) continue;
        for (const ActionTriplet& t : span.triplets)
            out += "(" + t.instrument + ", " + t.verb + ", " + t.target + ")\n";
    }
    return out;
}

struct AlignmentPromptSpec {
    std::string system_text;
    std::string model;
    double temperature = 0.2;
    int max_tokens = 512;
    int max_retries = 2;
};

/// Single-round description pair for one annotated clip. The prompt lists
/// merged spans in order; the reply is a strict {question, answer} object.
inline TaskOutcome<QAPair> gen_alignment_pair(const std::string& clip_id,
                                              const std::vector<MergedTripletSpan>& spans,
                                              llm::ChatClient& client,
                                              const AlignmentPromptSpec& spec) {
    const std::vector<MergedTripletSpan> active = active_spans(spans);
    if (active.empty())
        throw ValidationError("alignment prompt requires at least one non-idle span");
    llm::ChatRequest request;
    request.model = spec.model;
    request.temperature = spec.temperature;
    request.max_tokens = spec.max_tokens;
    request.request_tag = "align:" + clip_id;
    request.messages.push_back({Role::system, spec.system_text});
    request.messages.push_back({Role::user, "Action triplets in order:\n" + render_span_lines(active)});
    return run_json_task<QAPair>(
        client, request,
        [](const std::string& raw) { return parse_qa(raw, QAKind::alignment); },
        spec.max_retries);
}

/// Same cutting policy as transcript clips, with the wider defaults used
/// for annotation streams.
inline SegmentationResult segment_annotation_clips(const std::string& video_id,
                                                   double video_duration_s, double min_s = 30.0,
                                                   double max_s = 60.0) {
    return segment_duration(video_id, "", video_duration_s, min_s, max_s);
}

inline double stream_duration_s(const TripletStream& stream) {
    if (stream.frames.empty()) return 0.0;
    return static_cast<double>(stream.frames.back().frame_index + 1) / stream.fps;
}

/// Frames whose timestamps fall inside the clip interval.
inline std::vector<FrameAnnotation> frames_for_clip(const TripletStream& stream,
                                                    const VideoClip& clip) {
    std::vector<FrameAnnotation> frames;
    for (const FrameAnnotation& f : stream.frames) {
        const double t = static_cast<double>(f.frame_index) / stream.fps;
        if (t >= clip.start_s && t < clip.end_s) frames.push_back(f);
    }
    return frames;
}

}  // namespace surgforge
