#include <catch2/catch_amalgamated.hpp>

#include "surgforge/stats.hpp"

#include "support/test_util.hpp"

using namespace surgforge;
using Catch::Approx;

namespace {

Lexicon mini_lexicon() {
    Lexicon lex;
    lex.verbs = {"divide", "retract", "show"};
    lex.nouns = {"adhesion", "gallbladder", "duct"};
    return lex;
}

DatasetRecord record(const std::string& clip_id, QAKind kind, std::size_t rounds = 1) {
    DatasetRecord r;
    r.kind = kind;
    r.conversation.id = clip_id + ".qa";
    r.conversation.clip_id = clip_id;
    r.conversation.source_url = "u";
    for (std::size_t i = 0; i < rounds; ++i) {
        r.conversation.turns.push_back({Role::user, "Q"});
        r.conversation.turns.push_back({Role::assistant, "A"});
    }
    return r;
}

}  // namespace

TEST_CASE("verb-noun heuristic on the worked example") {
    const auto rows = verb_noun_pairs({"Divide the adhesions carefully"}, mini_lexicon());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].verb == "divide");
    CHECK(rows[0].noun == "adhesions");
    CHECK(rows[0].count == 1);
}

TEST_CASE("responses without a verb match count under (none, none)") {
    const auto rows = verb_noun_pairs({""}, mini_lexicon());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].verb == "none");
    CHECK(rows[0].noun == "none");
}

TEST_CASE("a verb with no subsequent noun keeps noun = none") {
    const auto rows = verb_noun_pairs({"The surgeon shows great care"}, mini_lexicon());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].verb == "shows");
    CHECK(rows[0].noun == "none");
}

TEST_CASE("identical responses accumulate one key") {
    const std::vector<std::string> responses(3, "The gallbladder is retracted; divide the duct.");
    const auto rows = verb_noun_pairs(responses, mini_lexicon());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].count == 3);
    // first verb in token order wins: "retracted" -> retract
    CHECK(rows[0].verb == "retracted");
    CHECK(rows[0].noun == "duct");
}

TEST_CASE("rows sort by count descending then key") {
    const std::vector<std::string> responses{
        "divide the duct", "divide the duct", "retract the gallbladder"};
    const auto rows = verb_noun_pairs(responses, mini_lexicon());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].count == 2);
    CHECK(rows[0].verb == "divide");
    CHECK(rows[1].count == 1);
}

TEST_CASE("lexicon files load one lowercase lemma per line") {
    testutil::TempDir dir;
    write_text_file(dir / "verbs.txt", "Divide\nretract\n\n");
    write_text_file(dir / "nouns.txt", "duct\n");
    const auto lex = Lexicon::load(dir / "verbs.txt", dir / "nouns.txt");
    CHECK(lex.verbs.count("divide") == 1);
    CHECK(lex.verbs.size() == 2);
    CHECK(lex.nouns.count("duct") == 1);
}

TEST_CASE("category distribution partitions the dataset") {
    const std::vector<SurgicalProcedure> catalog{
        {"p1", "T1", "u", "catA", 60.0},
        {"p2", "T2", "u", "catB", 60.0},
    };
    const std::vector<VideoClip> clips{
        {"p1#0000", "p1", "u", 0.0, 30.0, 0},
        {"p1#0001", "p1", "u", 30.0, 60.0, 1},
        {"p2#0000", "p2", "u", 0.0, 60.0, 0},
    };
    const std::vector<DatasetRecord> records{
        record("p1#0000", QAKind::observation),
        record("p1#0000", QAKind::reasoning_reason),
        record("p1#0001", QAKind::observation),
        record("p2#0000", QAKind::observation),
    };
    const auto dist = category_distribution(records, clips, catalog);
    CHECK(dist.total == 4);
    CHECK(dist.per_category.at("catA") == 3);
    CHECK(dist.per_category.at("catB") == 1);

    std::size_t kind_total = 0;
    for (const auto& [cat, kinds] : dist.per_category_kind)
        for (const auto& [kind, n] : kinds) kind_total += n;
    CHECK(kind_total == dist.total);
    CHECK(dist.per_category_kind.at("catA").at("observation") == 2);
    CHECK(dist.per_category_kind.at("catA").at("reasoning_reason") == 1);
}

TEST_CASE("empty dataset gives an empty distribution") {
    const auto dist = category_distribution({}, {}, {});
    CHECK(dist.total == 0);
    CHECK(dist.per_category.empty());
}

TEST_CASE("unresolvable clips are an error") {
    const std::vector<DatasetRecord> records{record("ghost#0000", QAKind::observation)};
    CHECK_THROWS_AS(category_distribution(records, {}, {}), UnresolvedClipError);
}

TEST_CASE("corpus summary computes counts, mean length, and round histogram") {
    const std::vector<VideoClip> clips{
        {"c1", "p", "u", 0.0, 10.0, 0},
        {"c2", "p", "u", 10.0, 40.0, 1},
    };
    const std::vector<DatasetRecord> records{
        record("c1", QAKind::observation, 3),
        record("c2", QAKind::observation, 3),
        record("c2", QAKind::alignment, 1),
    };
    const auto summary = corpus_summary(clips, records);
    CHECK(summary.n_clips == 2);
    CHECK(summary.n_pairs == 7);
    CHECK(summary.mean_clip_length_s == Approx(20.0));
    CHECK(summary.rounds_histogram.at(3) == 2);
    CHECK(summary.rounds_histogram.at(1) == 1);
}

TEST_CASE("empty inputs summarize to zeros") {
    const auto summary = corpus_summary({}, {});
    CHECK(summary.n_clips == 0);
    CHECK(summary.n_pairs == 0);
    CHECK(summary.mean_clip_length_s == 0.0);
    CHECK(summary.rounds_histogram.empty());
}
