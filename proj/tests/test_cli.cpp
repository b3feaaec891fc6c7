#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <string>

#include "support/test_util.hpp"

namespace {

struct CommandResult {
    int exit_code;
    std::string output;
};

CommandResult run(const std::string& command) {
    const std::string full = command + " 2>&1";
    FILE* pipe = ::popen(full.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string output;
    char buffer[4096];
    while (std::fgets(buffer, sizeof(buffer), pipe)) output += buffer;
    const int status = ::pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, output};
}

std::string cli() {
#ifdef SURGFORGE_CLI_BIN
    return SURGFORGE_CLI_BIN;
#else
    return "surgforge";
#endif
}

std::string fixture_config() {
    return (testutil::repo_dir() / "fixtures" / "surgforge.json").string();
}

}  // namespace

TEST_CASE("cli: missing subcommand is a usage error (exit 1)") {
    const auto result = run(cli());
    CHECK(result.exit_code == 1);
}

TEST_CASE("cli: --help exits 0 and lists the stages") {
    const auto result = run(cli() + " --help");
    CHECK(result.exit_code == 0);
    for (const char* stage :
         {"ingest", "split", "extract", "generate", "align", "export", "evaluate", "stats"})
        CHECK(result.output.find(stage) != std::string::npos);
}

TEST_CASE("cli: unknown flag is a usage error (exit 1)") {
    const auto result = run(cli() + " ingest --frobnicate");
    CHECK(result.exit_code == 1);
}

TEST_CASE("cli: missing config file exits 2") {
    const auto result = run(cli() + " ingest --config /nonexistent/surgforge.json");
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("config") != std::string::npos);
}

TEST_CASE("cli: stage with missing inputs exits 3") {
    testutil::TempDir out;
    const auto result = run(cli() + " generate --config " + fixture_config() + " --out " +
                            out.path().string());
    CHECK(result.exit_code == 3);
    CHECK(result.output.find("extract") != std::string::npos);
}

TEST_CASE("cli: full run on the fixture corpus, then an idempotent re-run") {
    testutil::TempDir out;
    const std::string base =
        cli() + " run --config " + fixture_config() + " --out " + out.path().string();

    const auto first = run(base);
    INFO(first.output);
    REQUIRE(first.exit_code == 0);
    CHECK(std::filesystem::exists(out / "dataset.jsonl"));
    CHECK(std::filesystem::exists(out / "manifest.json"));

    const auto second = run(base);
    REQUIRE(second.exit_code == 0);
    CHECK(second.output.find("skipped (up to date)") != std::string::npos);
    CHECK(second.output.find("status=done") == std::string::npos);

    const auto forced = run(base + " --force");
    REQUIRE(forced.exit_code == 0);
    CHECK(forced.output.find("skipped (up to date)") == std::string::npos);
}

TEST_CASE("cli: single-stage invocation works end to end") {
    testutil::TempDir out;
    const std::string common = " --config " + fixture_config() + " --out " + out.path().string();
    CHECK(run(cli() + " ingest" + common).exit_code == 0);
    CHECK(run(cli() + " split" + common).exit_code == 0);
    CHECK(std::filesystem::exists(out / "clips.jsonl"));
    CHECK(std::filesystem::exists(out / "split.json"));
}

TEST_CASE("cli: flags override the config file") {
    testutil::TempDir out;
    const std::string common = " --config " + fixture_config() + " --out " + out.path().string();
    REQUIRE(run(cli() + " split" + common + " --seed 99").exit_code == 0);

    std::ifstream in(out / "split.json");
    REQUIRE(in.good());
    const std::string content((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    CHECK(content.find("\"seed\": 99") != std::string::npos);
}
