#include <catch2/catch_amalgamated.hpp>

#include "surgforge/evaluate.hpp"
#include "surgforge/llm/mock_backend.hpp"
#include "surgforge/llm/synth_backend.hpp"

#include <algorithm>
#include <random>

#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace surgforge;
using Catch::Approx;

namespace {

llm::ChatClient instant_client(std::shared_ptr<llm::Backend> backend) {
    return llm::ChatClient(std::move(backend), llm::RetryPolicy{2, std::chrono::milliseconds(0)},
                           0.0, [](std::chrono::milliseconds) {});
}

JudgeVerdict verdict(int score, int matched, int total) {
    return {"id", score, matched, total, "c"};
}

}  // namespace

TEST_CASE("judge prompt lists numbered references, question, and candidate") {
    JudgePromptSpec spec;
    spec.system_text = "score the answer";
    const auto request = build_judge_prompt(
        "What happens?", {"ref one", "ref two", "ref three"}, "the answer", spec, "item-1");
    CHECK(request.model == "gpt-3.5-turbo-0125");
    const std::string& user = request.messages.back().content;
    CHECK(contains(user, "1. ref one"));
    CHECK(contains(user, "2. ref two"));
    CHECK(contains(user, "3. ref three"));
    CHECK(contains(user, "Question: What happens?"));
    CHECK(contains(user, "Candidate answer: the answer"));
    CHECK(request.request_tag == "judge:item-1");
}

TEST_CASE("judge prompt requires references but tolerates an empty candidate") {
    JudgePromptSpec spec;
    spec.system_text = "s";
    CHECK_THROWS_AS(build_judge_prompt("Q", {}, "a", spec), ValidationError);
    CHECK_NOTHROW(build_judge_prompt("Q", {"ref"}, "", spec));
}

TEST_CASE("parse_verdict accepts valid replies and cross-checks the total") {
    const auto v =
        parse_verdict(R"({"score":4,"matched":2,"total":3,"comment":"good"})", 3, "x");
    CHECK(v.score == 4);
    CHECK(v.matched == 2);
    CHECK(v.total == 3);
    CHECK(v.id == "x");
}

TEST_CASE("parse_verdict rejects out-of-range and mismatched replies") {
    CHECK_THROWS_AS(parse_verdict(R"({"score":4,"matched":4,"total":3,"comment":""})", 3),
                    RangeError);
    CHECK_THROWS_AS(parse_verdict(R"({"score":7,"matched":1,"total":3,"comment":""})", 3),
                    RangeError);
    CHECK_THROWS_AS(parse_verdict(R"({"score":-1,"matched":1,"total":3,"comment":""})", 3),
                    RangeError);
    CHECK_THROWS_AS(parse_verdict(R"({"score":4,"matched":1,"total":4,"comment":""})", 3),
                    MismatchError);
    CHECK_THROWS_AS(parse_verdict(R"({"score":3.5,"matched":1,"total":3,"comment":""})", 3),
                    SchemaError);
    CHECK_THROWS_AS(parse_verdict("the answer is good", 3), SchemaError);
}

TEST_CASE("metrics on the worked example") {
    const std::vector<JudgeVerdict> verdicts{verdict(3, 1, 2), verdict(1, 0, 3)};
    const auto report = compute_metrics(verdicts);
    CHECK(report.n_items == 2);
    CHECK(report.mean_score == Approx(2.0));
    CHECK(report.accuracy_at_1 == Approx(0.5));
    CHECK(report.accuracy_at_all == Approx(0.2));
}

TEST_CASE("metrics edge behavior") {
    CHECK_THROWS_AS(compute_metrics({}), EmptyInputError);

    const std::vector<JudgeVerdict> all_matched{verdict(5, 2, 2), verdict(4, 3, 3)};
    const auto perfect = compute_metrics(all_matched);
    CHECK(perfect.accuracy_at_1 == 1.0);
    CHECK(perfect.accuracy_at_all == 1.0);

    const std::vector<JudgeVerdict> scores{verdict(5, 1, 1), verdict(0, 0, 1), verdict(4, 1, 1)};
    CHECK(compute_metrics(scores).mean_score == Approx(3.0));
}

TEST_CASE("adding a fully-matched verdict keeps a perfect set perfect") {
    std::vector<JudgeVerdict> verdicts{verdict(5, 2, 2), verdict(5, 1, 1)};
    verdicts.push_back(verdict(5, 4, 4));
    const auto report = compute_metrics(verdicts);
    CHECK(report.accuracy_at_1 == 1.0);
    CHECK(report.accuracy_at_all == 1.0);
}

TEST_CASE("metrics are permutation-invariant") {
    testutil::Rng rng(606);
    std::vector<JudgeVerdict> verdicts;
    for (int i = 0; i < 12; ++i) {
        const int total = 1 + static_cast<int>(rng.below(5));
        const int matched = static_cast<int>(rng.below(total + 1));
        verdicts.push_back(verdict(static_cast<int>(rng.below(6)), matched, total));
    }
    const auto before = compute_metrics(verdicts);
    std::shuffle(verdicts.begin(), verdicts.end(), rng.gen());
    const auto after = compute_metrics(verdicts);
    CHECK(before.mean_score == after.mean_score);
    CHECK(before.accuracy_at_1 == after.accuracy_at_1);
    CHECK(before.accuracy_at_all == after.accuracy_at_all);
}

TEST_CASE("metrics match direct enumeration on random verdict sets") {
    testutil::Rng rng(2025);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<JudgeVerdict> verdicts;
        const std::size_t n = 1 + rng.below(20);
        for (std::size_t i = 0; i < n; ++i) {
            const int total = 1 + static_cast<int>(rng.below(6));
            const int matched = static_cast<int>(rng.below(total + 1));
            verdicts.push_back(verdict(static_cast<int>(rng.below(6)), matched, total));
        }
        const auto report = compute_metrics(verdicts);
        const auto expected = testutil::metrics_oracle(verdicts);
        CHECK(report.mean_score == expected.mean_score);
        CHECK(report.accuracy_at_1 == expected.accuracy_at_1);
        CHECK(report.accuracy_at_all == expected.accuracy_at_all);
    }
}

TEST_CASE("spearman on identity and reversal") {
    CHECK(spearman({1, 2, 3}, {1, 2, 3}) == Approx(1.0));
    CHECK(spearman({1, 2, 3}, {3, 2, 1}) == Approx(-1.0));
}

TEST_CASE("spearman handles ties like the rank oracle") {
    const std::vector<double> x{1, 2, 2, 4};
    const std::vector<double> y{1, 3, 2, 4};
    CHECK(spearman(x, y) == Approx(0.9486832980505138).epsilon(1e-12));
    CHECK(spearman(x, y) == Approx(testutil::spearman_oracle(x, y)).margin(1e-12));
}

TEST_CASE("spearman rejects degenerate inputs") {
    CHECK_THROWS_AS(spearman({1.0}, {2.0}), DegenerateInputError);
    CHECK_THROWS_AS(spearman({1, 1, 1}, {1, 2, 3}), DegenerateInputError);
    CHECK_THROWS_AS(spearman({1, 2, 3}, {5, 5, 5}), DegenerateInputError);
    CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), DegenerateInputError);
}

TEST_CASE("spearman is symmetric and invariant under monotone transforms") {
    testutil::Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 3 + rng.below(15);
        std::vector<double> x, y;
        for (std::size_t i = 0; i < n; ++i) {
            x.push_back(static_cast<double>(rng.below(6)));
            y.push_back(static_cast<double>(rng.below(6)));
        }
        // make sure neither side is constant
        x[0] = -1.0;
        y[0] = -1.0;
        x[1] = 99.0;
        y[1] = 99.0;

        const double rho = spearman(x, y);
        CHECK(rho == Approx(spearman(y, x)).margin(1e-12));

        std::vector<double> tx = x;
        for (double& v : tx) v = 3.0 * v + 11.0;  // strictly increasing transform
        CHECK(spearman(tx, y) == Approx(rho).margin(1e-12));

        CHECK(rho == Approx(testutil::spearman_oracle(x, y)).margin(1e-12));
    }
}

TEST_CASE("evaluate_run scores every joined item") {
    auto synth = std::make_shared<llm::SynthBackend>();
    auto client = instant_client(synth);
    JudgePromptSpec spec;
    spec.system_text = "score";

    std::vector<Prediction> predictions;
    std::vector<Reference> references;
    for (int i = 0; i < 10; ++i) {
        const std::string id = "item-" + std::to_string(i);
        predictions.push_back({id, "an answer"});
        references.push_back({id, "What happens?", {"ref a", "ref b"}});
    }
    const auto result = evaluate_run(predictions, references, client, spec, 3);
    CHECK(result.verdicts.size() == 10);
    CHECK(result.failures.empty());
    CHECK(result.metrics.n_items == 10);
    for (const auto& v : result.verdicts) CHECK(v.total == 2);
}

TEST_CASE("a persistently malformed verdict becomes a failure, not an abort") {
    auto scripted = std::make_shared<llm::ScriptedBackend>();
    // item-0 succeeds; item-1 fails through every round+repair
    scripted->push_response(R"({"score":4,"matched":1,"total":1,"comment":"ok"})");
    for (int i = 0; i < 6; ++i) scripted->push_response("not a verdict");
    auto client = instant_client(scripted);
    JudgePromptSpec spec;
    spec.system_text = "score";

    const std::vector<Prediction> predictions{{"item-0", "a"}, {"item-1", "b"}};
    const std::vector<Reference> references{{"item-0", "Q", {"r"}}, {"item-1", "Q", {"r"}}};
    const auto result = evaluate_run(predictions, references, client, spec, 1);
    CHECK(result.verdicts.size() == 1);
    REQUIRE(result.failures.size() == 1);
    CHECK(result.failures[0].clip_id == "item-1");
    CHECK(result.failures[0].stage == "evaluate");
}

TEST_CASE("an out-of-range verdict goes through repair and can recover") {
    auto scripted = std::make_shared<llm::ScriptedBackend>();
    scripted->push_response(R"({"score":9,"matched":1,"total":1,"comment":"too high"})");
    scripted->push_response(R"({"score":5,"matched":1,"total":1,"comment":"fixed"})");
    auto client = instant_client(scripted);
    JudgePromptSpec spec;
    spec.system_text = "score";
    const auto result = evaluate_run({{"i", "a"}}, {{"i", "Q", {"r"}}}, client, spec, 1);
    REQUIRE(result.verdicts.size() == 1);
    CHECK(result.verdicts[0].score == 5);
    CHECK(scripted->calls() == 2);
}

TEST_CASE("disjoint prediction and reference ids are a JoinError") {
    auto client = instant_client(std::make_shared<llm::ScriptedBackend>());
    JudgePromptSpec spec;
    spec.system_text = "s";
    const std::vector<Prediction> predictions{{"a", "x"}};
    const std::vector<Reference> references{{"b", "Q", {"r"}}};
    CHECK_THROWS_AS(evaluate_run(predictions, references, client, spec, 1), JoinError);
}

TEST_CASE("human correlation joins on id") {
    const std::vector<JudgeVerdict> verdicts{
        {"a", 1, 0, 1, ""}, {"b", 3, 1, 2, ""}, {"c", 5, 2, 2, ""}};
    const std::vector<HumanScore> human{{"a", 0.0}, {"b", 3.0}, {"c", 5.0}};
    CHECK(human_correlation(verdicts, human) == Approx(1.0));
    CHECK_THROWS_AS(human_correlation(verdicts, {{"zz", 1.0}}), JoinError);
}
