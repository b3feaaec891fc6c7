#include <catch2/catch_amalgamated.hpp>

#include "surgforge/jsonl.hpp"

#include <fstream>

#include "support/test_util.hpp"

using namespace surgforge;

TEST_CASE("jsonl round-trip is identity") {
    testutil::TempDir dir;

    SECTION("clips") {
        std::vector<VideoClip> clips{
            {"p1#0000", "p1", "https://u/1", 0.0, 30.0, 0},
            {"p1#0001", "p1", "https://u/1", 30.0, 47.5, 1},
        };
        write_jsonl(dir / "clips.jsonl", clips);
        CHECK(read_jsonl<VideoClip>(dir / "clips.jsonl") == clips);
    }

    SECTION("knowledge with optional fields") {
        std::vector<ExtractedKnowledge> knowledge{
            {"p1#0000",
             {{"adhesions are divided", std::nullopt, std::string("open the peritoneum"),
               std::nullopt},
              {"the artery is clipped", std::string("to prevent bleeding"), std::nullopt,
               std::string("the plane is correct")}}},
            {"p1#0001", {}},
        };
        write_jsonl(dir / "knowledge.jsonl", knowledge);
        CHECK(read_jsonl<ExtractedKnowledge>(dir / "knowledge.jsonl") == knowledge);
    }

    SECTION("dataset records") {
        testutil::Rng rng(99);
        std::vector<DatasetRecord> records;
        for (int i = 0; i < 5; ++i)
            records.push_back({testutil::random_conversation(rng), QAKind::observation});
        std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
            return a.conversation.id < b.conversation.id;
        });
        write_jsonl(dir / "dataset.jsonl", records);
        CHECK(read_jsonl<DatasetRecord>(dir / "dataset.jsonl") == records);
    }

    SECTION("triplet streams") {
        // triplet sets are kept in canonical (sorted, deduplicated) form
        std::vector<TripletStream> streams{
            {"vid01", 25.0,
             {{0, {{"grasper", "retract", "gallbladder"}}},
              {1, {}},
              {2, {{"grasper", "retract", "liver"}, {"hook", "dissect", "cystic_duct"}}}}},
        };
        write_jsonl(dir / "triplets.jsonl", streams);
        CHECK(read_jsonl<TripletStream>(dir / "triplets.jsonl") == streams);
    }

    SECTION("flags and failures") {
        std::vector<FlagRecord> flags{{"c1", "ingest", "sub_minimum_duration"}};
        write_jsonl(dir / "flags.jsonl", flags);
        CHECK(read_jsonl<FlagRecord>(dir / "flags.jsonl") == flags);

        std::vector<FailureRecord> failures{{"c2", "extract", "schema: bad", 6}};
        write_jsonl(dir / "failures.jsonl", failures);
        CHECK(read_jsonl<FailureRecord>(dir / "failures.jsonl") == failures);
    }
}

TEST_CASE("empty record list writes an empty file and reads back empty") {
    testutil::TempDir dir;
    write_jsonl(dir / "empty.jsonl", std::vector<JudgeVerdict>{});
    CHECK(std::filesystem::file_size(dir / "empty.jsonl") == 0);
    CHECK(read_jsonl<JudgeVerdict>(dir / "empty.jsonl").empty());
}

TEST_CASE("writer sorts records by primary key") {
    testutil::TempDir dir;
    std::vector<JudgeVerdict> verdicts{
        {"id-3", 4, 1, 2, "c"},
        {"id-1", 2, 0, 1, "a"},
        {"id-2", 5, 3, 3, "b"},
    };
    write_jsonl(dir / "verdicts.jsonl", verdicts);
    const auto loaded = read_jsonl<JudgeVerdict>(dir / "verdicts.jsonl");
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[0].id == "id-1");
    CHECK(loaded[1].id == "id-2");
    CHECK(loaded[2].id == "id-3");
}

TEST_CASE("schema violations name the offending line") {
    testutil::TempDir dir;
    {
        std::ofstream out(dir / "bad.jsonl", std::ios::binary);
        out << R"({"id":"a","score":4,"matched":1,"total":2,"comment":"ok"})" << "\n";
        out << R"({"id":"b","matched":1,"total":2,"comment":"missing score"})" << "\n";
    }
    try {
        read_jsonl<JudgeVerdict>(dir / "bad.jsonl");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("score") != std::string::npos);
    }
}

TEST_CASE("non-JSON line is a schema error with its line number") {
    testutil::TempDir dir;
    {
        std::ofstream out(dir / "bad.jsonl", std::ios::binary);
        out << R"({"id":"a","answer":"fine"})" << "\n";
        out << "not json at all\n";
    }
    try {
        read_jsonl<Prediction>(dir / "bad.jsonl");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("repeated writes are byte-identical") {
    testutil::TempDir dir;
    testutil::Rng rng(5);
    std::vector<DatasetRecord> records;
    for (int i = 0; i < 8; ++i)
        records.push_back({testutil::random_conversation(rng), QAKind::alignment});
    write_jsonl(dir / "a.jsonl", records);
    write_jsonl(dir / "b.jsonl", records);
    CHECK(digest_file(dir / "a.jsonl") == digest_file(dir / "b.jsonl"));
}

TEST_CASE("reading a missing file is an IoError") {
    CHECK_THROWS_AS(read_jsonl<VideoClip>("/nonexistent/nowhere.jsonl"), IoError);
}
