// surgforge — batch pipeline turning narrated surgical lecture videos into
// multimodal instruction-tuning data, plus an LLM-as-judge evaluation
// harness. Stages are resumable: each reads prior-stage JSONL, writes its
// outputs and a manifest entry, and is skipped when nothing changed.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "surgforge/pipeline.hpp"

namespace {

struct Cli {
    std::string config_path = "surgforge.json";
    std::string out_dir;
    std::string backend_mode;
    std::string endpoint;
    std::string model;
    std::string judge_model;
    std::string prompt_version;
    long long seed = -1;
    int max_in_flight = 0;
    bool force = false;
};

void apply_overrides(surgforge::PipelineConfig& config, const Cli& cli) {
    if (!cli.out_dir.empty()) config.out_dir = cli.out_dir;
    if (!cli.backend_mode.empty())
        config.backend.mode = surgforge::backend_mode_from_string(cli.backend_mode);
    if (!cli.endpoint.empty()) config.backend.endpoint = cli.endpoint;
    if (!cli.model.empty()) config.backend.model = cli.model;
    if (!cli.judge_model.empty()) config.backend.judge_model = cli.judge_model;
    if (cli.max_in_flight > 0) config.backend.max_in_flight = cli.max_in_flight;
    if (cli.seed >= 0) {
        const auto seed = static_cast<std::uint64_t>(cli.seed);
        config.split.seed = seed;
        config.generate.seed = seed;
        config.align.seed = seed;
    }
    if (!cli.prompt_version.empty()) {
        config.extract.prompt_version = cli.prompt_version;
        config.generate.prompt_version = cli.prompt_version;
        config.align.prompt_version = cli.prompt_version;
        config.evaluate.prompt_version = cli.prompt_version;
    }
    if (const char* key = std::getenv(surgforge::kApiKeyEnvVar)) config.backend.api_key = key;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"surgforge — surgical video instruction-tuning data pipeline"};
    app.require_subcommand(1);

    Cli cli;
    app.add_option("--config", cli.config_path, "Pipeline config file (JSON)")
        ->capture_default_str();
    app.add_option("--out", cli.out_dir, "Output directory (overrides config)");
    app.add_option("--seed", cli.seed, "Seed for split/generate/align (overrides config)");
    app.add_option("--backend", cli.backend_mode, "Backend mode: live, mock, or record");
    app.add_option("--endpoint", cli.endpoint, "Chat-completions base URL");
    app.add_option("--model", cli.model, "Model id for extraction/generation");
    app.add_option("--judge-model", cli.judge_model, "Model id for evaluation");
    app.add_option("--max-in-flight", cli.max_in_flight, "Bound on concurrent backend requests");
    app.add_option("--prompt-version", cli.prompt_version, "Prompt asset version for all stages");
    app.add_flag("--force", cli.force, "Re-run stages even when up to date");
    app.fallthrough();

    const std::vector<std::pair<std::string, std::string>> stages{
        {"ingest", "Segment procedures into clips and align ASR transcripts"},
        {"split", "Procedure-level train/test split"},
        {"extract", "Extract structured knowledge units from clip transcripts"},
        {"generate", "Generate observation and reasoning QA conversations"},
        {"align", "Build concept-alignment pairs from action-triplet annotations"},
        {"export", "Merge, validate, and export dataset.jsonl with manifest"},
        {"evaluate", "Judge predictions against references and compute metrics"},
        {"stats", "Dataset reports: verb-noun pairs, categories, corpus summary"},
        {"run", "Run every configured stage in order"},
    };
    for (const auto& [name, description] : stages) app.add_subcommand(name, description);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // usage error
    }

    try {
        surgforge::PipelineConfig config = surgforge::PipelineConfig::load(cli.config_path);
        apply_overrides(config, cli);
        surgforge::Pipeline pipeline(std::move(config), cli.force, &std::cerr);

        const std::string stage = app.get_subcommands().front()->get_name();
        if (stage == "run") {
            pipeline.run_all();
        } else {
            pipeline.run_stage(stage);
        }
        return 0;
    } catch (const surgforge::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const surgforge::llm::ChatError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 4;
    } catch (const surgforge::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
