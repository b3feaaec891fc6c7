#include <catch2/catch_amalgamated.hpp>

#include "surgforge/align.hpp"
#include "surgforge/llm/mock_backend.hpp"
#include "surgforge/llm/synth_backend.hpp"

#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace surgforge;

namespace {

const std::vector<ActionTriplet> kSetA{{"grasper", "retract", "gallbladder"}};
const std::vector<ActionTriplet> kSetB{{"hook", "dissect", "cystic_duct"}};

std::vector<FrameAnnotation> dense(const std::vector<std::vector<ActionTriplet>>& sets) {
    std::vector<FrameAnnotation> frames;
    for (std::size_t i = 0; i < sets.size(); ++i)
        frames.push_back({static_cast<long>(i), sets[i]});
    return frames;
}

llm::ChatClient instant_client(std::shared_ptr<llm::Backend> backend) {
    return llm::ChatClient(std::move(backend), llm::RetryPolicy{2, std::chrono::milliseconds(0)},
                           0.0, [](std::chrono::milliseconds) {});
}

}  // namespace

TEST_CASE("merge groups maximal runs of equal sets") {
    const auto spans = merge_consecutive(dense({kSetA, kSetA, kSetA, kSetB, kSetB}));
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].start_frame == 0);
    CHECK(spans[0].end_frame == 2);
    CHECK(spans[0].triplets == kSetA);
    CHECK(spans[1].start_frame == 3);
    CHECK(spans[1].end_frame == 4);
    CHECK(spans[1].triplets == kSetB);
}

TEST_CASE("merge treats the triplet set, not individual triplets") {
    std::vector<ActionTriplet> both = kSetA;
    both.insert(both.end(), kSetB.begin(), kSetB.end());
    std::vector<ActionTriplet> both_reversed = kSetB;
    both_reversed.insert(both_reversed.end(), kSetA.begin(), kSetA.end());
    // same set in different stated order still merges
    const auto spans = merge_consecutive(dense({both, both_reversed}));
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].frame_count() == 2);
}

TEST_CASE("frame-index gaps break runs so expansion stays lossless") {
    std::vector<FrameAnnotation> frames{{0, kSetA}, {1, kSetA}, {5, kSetA}};
    const auto spans = merge_consecutive(frames);
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].end_frame == 1);
    CHECK(spans[1].start_frame == 5);
    CHECK(expand_spans(spans) == frames);
}

TEST_CASE("empty frames merge to no spans; idle frames form idle spans") {
    CHECK(merge_consecutive({}).empty());
    const auto spans = merge_consecutive(dense({{}, {}, kSetA}));
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].idle());
    CHECK_FALSE(spans[1].idle());
}

TEST_CASE("non-increasing frame indices are an OrderError") {
    std::vector<FrameAnnotation> frames{{3, kSetA}, {3, kSetA}};
    CHECK_THROWS_AS(merge_consecutive(frames), OrderError);
    frames[1].frame_index = 2;
    CHECK_THROWS_AS(merge_consecutive(frames), OrderError);
}

TEST_CASE("merge matches the brute-force scanner on random streams") {
    testutil::Rng rng(808);
    for (int i = 0; i < 200; ++i) {
        const auto frames = testutil::random_annotation_stream(rng);
        const auto spans = merge_consecutive(frames);
        const auto expected = testutil::merge_oracle(frames);
        REQUIRE(spans == expected);
        // lossless: expanding reproduces the input labeling, with sets normalized
        auto normalized = frames;
        for (auto& f : normalized) {
            std::sort(f.triplets.begin(), f.triplets.end());
            f.triplets.erase(std::unique(f.triplets.begin(), f.triplets.end()),
                             f.triplets.end());
        }
        CHECK(expand_spans(spans) == normalized);
        // adjacent spans always differ
        for (std::size_t s = 1; s < spans.size(); ++s) {
            const bool contiguous = spans[s].start_frame == spans[s - 1].end_frame + 1;
            if (contiguous) CHECK(spans[s].triplets != spans[s - 1].triplets);
        }
        CHECK(spans.size() <= frames.size());
    }
}

TEST_CASE("merge is stable under re-merge of its own expansion") {
    testutil::Rng rng(4242);
    for (int i = 0; i < 50; ++i) {
        const auto spans = merge_consecutive(testutil::random_annotation_stream(rng));
        CHECK(merge_consecutive(expand_spans(spans)) == spans);
    }
}

TEST_CASE("span lines render triplets verbatim and skip idle spans") {
    std::vector<MergedTripletSpan> spans{
        {0, 4, {}},
        {5, 9, kSetA},
    };
    const std::string lines = render_span_lines(spans);
    CHECK(lines == "(grasper, retract, gallbladder)\n");
}

TEST_CASE("alignment pair generation uses the span lines and alignment kind") {
    auto synth = std::make_shared<llm::SynthBackend>();
    auto client = instant_client(synth);
    AlignmentPromptSpec spec;
    spec.system_text = "describe the clip";
    spec.model = "test-model";
    const std::vector<MergedTripletSpan> spans{{0, 9, kSetA}};
    const auto outcome = gen_alignment_pair("vid#0000", spans, client, spec);
    REQUIRE(std::holds_alternative<QAPair>(outcome));
    const auto& pair = std::get<QAPair>(outcome);
    CHECK(pair.kind == QAKind::alignment);
    CHECK(contains(pair.answer, "grasper"));
}

TEST_CASE("an all-idle span sequence cannot be prompted") {
    auto client = instant_client(std::make_shared<llm::ScriptedBackend>());
    AlignmentPromptSpec spec;
    spec.system_text = "s";
    spec.model = "m";
    const std::vector<MergedTripletSpan> idle{{0, 9, {}}};
    CHECK_THROWS_AS(gen_alignment_pair("vid", idle, client, spec), ValidationError);
}

TEST_CASE("annotation clip segmentation follows the shared policy") {
    SECTION("90 seconds cuts at the maximum") {
        const auto clips = segment_annotation_clips("v", 90.0).clips;
        REQUIRE(clips.size() == 2);
        CHECK(clips[0].end_s == 60.0);
        CHECK(clips[1].end_s == 90.0);
    }
    SECTION("45 seconds stays one clip") {
        CHECK(segment_annotation_clips("v", 45.0).clips.size() == 1);
    }
    SECTION("130 seconds: tail merges then halves") {
        const auto clips = segment_annotation_clips("v", 130.0).clips;
        REQUIRE(clips.size() == 3);
        CHECK(clips[0].end_s == 60.0);
        CHECK(clips[1].end_s == Catch::Approx(95.0));
        CHECK(clips[2].end_s == 130.0);
    }
}

TEST_CASE("frames map into clips by timestamp") {
    TripletStream stream;
    stream.video_id = "v";
    stream.fps = 2.0;  // frame 120 -> t=60s
    for (long f = 0; f < 180; ++f) stream.frames.push_back({f, kSetA});
    CHECK(stream_duration_s(stream) == Catch::Approx(90.0));

    const auto clips = segment_annotation_clips("v", stream_duration_s(stream)).clips;
    REQUIRE(clips.size() == 2);
    const auto first = frames_for_clip(stream, clips[0]);
    const auto second = frames_for_clip(stream, clips[1]);
    CHECK(first.size() + second.size() == stream.frames.size());
    CHECK(first.back().frame_index == 119);
    CHECK(second.front().frame_index == 120);
}
