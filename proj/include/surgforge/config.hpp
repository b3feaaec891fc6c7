#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "surgforge/errors.hpp"
#include "surgforge/jsonl.hpp"

namespace surgforge {

inline constexpr const char* kApiKeyEnvVar = "SURGFORGE_API_KEY";

enum class BackendMode { live, mock, record };

inline std::string to_string(BackendMode mode) {
    switch (mode) {
        case BackendMode::live: return "live";
        case BackendMode::mock: return "mock";
        case BackendMode::record: return "record";
    }
    return "mock";
}

inline BackendMode backend_mode_from_string(const std::string& s) {
    if (s == "live") return BackendMode::live;
    if (s == "mock") return BackendMode::mock;
    if (s == "record") return BackendMode::record;
    throw ConfigError("backend mode must be one of live|mock|record, got '" + s + "'");
}

struct InputsConfig {
    std::filesystem::path catalog;
    std::filesystem::path asr_dir;
    std::filesystem::path triplets;
    std::filesystem::path predictions;
    std::filesystem::path references;
    std::filesystem::path human_scores;
    std::filesystem::path lexicon_verbs;
    std::filesystem::path lexicon_nouns;
    std::filesystem::path prompts_dir{"prompts"};
};

struct BackendConfig {
    BackendMode mode = BackendMode::mock;
    std::string endpoint = "http://localhost:8000/v1";
    std::string model = "llama-3-70b-instruct";
    std::string judge_model = "gpt-3.5-turbo-0125";
    std::filesystem::path fixtures_dir;
    std::string api_key;  // from SURGFORGE_API_KEY only, never from the file
    int max_in_flight = 4;
    int max_retries = 2;
    int base_delay_ms = 100;
    double requests_per_second = 0.0;
};

struct RenderConfig {
    std::string video_token = "<video>";
    std::string stop_token = "<STOP>";
};

struct IngestConfig {
    double clip_min_s = 15.0;
    double clip_max_s = 30.0;
};

struct SplitConfig {
    double test_fraction = 0.1;
    std::uint64_t seed = 7;
};

struct ExtractConfig {
    std::string prompt_version = "v1";
    int min_transcript_words = 10;
    double temperature = 0.0;
    int max_tokens = 1024;
};

struct GenerateConfig {
    std::string prompt_version = "v1";
    double temperature = 0.2;
    int max_tokens = 1024;
    std::uint64_t seed = 7;
};

struct AlignConfig {
    double clip_min_s = 30.0;
    double clip_max_s = 60.0;
    std::size_t sample_size = 0;  // 0 = keep every annotated clip
    std::uint64_t seed = 7;
    std::string prompt_version = "v1";
    double temperature = 0.2;
    int max_tokens = 512;
};

struct EvaluateConfig {
    std::string prompt_version = "v1";
    double temperature = 0.0;
    int max_tokens = 512;
};

struct PipelineConfig {
    std::filesystem::path out_dir{"out"};
    InputsConfig inputs;
    BackendConfig backend;
    RenderConfig render;
    IngestConfig ingest;
    SplitConfig split;
    ExtractConfig extract;
    GenerateConfig generate;
    AlignConfig align;
    EvaluateConfig evaluate;

    static PipelineConfig load(const std::filesystem::path& path);
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base,
                                     const std::filesystem::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

inline std::string cfg_string(const json& j, const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) throw ConfigError(std::string("config key '") + key + "' must be a string");
    return j[key].get<std::string>();
}

inline double cfg_number(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
    return j[key].get<double>();
}

inline std::uint64_t cfg_seed(const json& j, const char* key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer() || (!j[key].is_number_unsigned() && j[key].get<long long>() < 0))
        throw ConfigError(std::string("config key '") + key + "' must be a non-negative integer");
    return j[key].get<std::uint64_t>();
}

inline int cfg_int(const json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer())
        throw ConfigError(std::string("config key '") + key + "' must be an integer");
    return j[key].get<int>();
}

inline json cfg_section(const json& j, const char* key) {
    if (!j.contains(key)) return json::object();
    if (!j[key].is_object())
        throw ConfigError(std::string("config section '") + key + "' must be an object");
    return j[key];
}

}  // namespace detail

inline PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw ConfigError("config file not found: " + path.string());
    json j;
    try {
        j = read_json_file(path);
    } catch (const Error& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";
    PipelineConfig cfg;
    cfg.out_dir = detail::resolve(base, detail::cfg_string(j, "out_dir", "out"));

    const json inputs = detail::cfg_section(j, "inputs");
    auto in_path = [&](const char* key) {
        return detail::resolve(base, detail::cfg_string(inputs, key, ""));
    };
    cfg.inputs.catalog = in_path("catalog");
    cfg.inputs.asr_dir = in_path("asr_dir");
    cfg.inputs.triplets = in_path("triplets");
    cfg.inputs.predictions = in_path("predictions");
    cfg.inputs.references = in_path("references");
    cfg.inputs.human_scores = in_path("human_scores");
    cfg.inputs.lexicon_verbs = in_path("lexicon_verbs");
    cfg.inputs.lexicon_nouns = in_path("lexicon_nouns");
    cfg.inputs.prompts_dir = detail::resolve(base, detail::cfg_string(inputs, "prompts_dir", "prompts"));

    const json backend = detail::cfg_section(j, "backend");
    cfg.backend.mode = backend_mode_from_string(detail::cfg_string(backend, "mode", "mock"));
    cfg.backend.endpoint = detail::cfg_string(backend, "endpoint", cfg.backend.endpoint);
    cfg.backend.model = detail::cfg_string(backend, "model", cfg.backend.model);
    cfg.backend.judge_model = detail::cfg_string(backend, "judge_model", cfg.backend.judge_model);
    cfg.backend.fixtures_dir = detail::resolve(base, detail::cfg_string(backend, "fixtures_dir", ""));
    cfg.backend.max_in_flight = detail::cfg_int(backend, "max_in_flight", cfg.backend.max_in_flight);
    cfg.backend.max_retries = detail::cfg_int(backend, "max_retries", cfg.backend.max_retries);
    cfg.backend.base_delay_ms = detail::cfg_int(backend, "base_delay_ms", cfg.backend.base_delay_ms);
    cfg.backend.requests_per_second =
        detail::cfg_number(backend, "requests_per_second", cfg.backend.requests_per_second);
    if (cfg.backend.max_in_flight < 1) throw ConfigError("backend.max_in_flight must be >= 1");
    if (cfg.backend.max_retries < 0) throw ConfigError("backend.max_retries must be >= 0");

    const json render = detail::cfg_section(j, "render");
    cfg.render.video_token = detail::cfg_string(render, "video_token", cfg.render.video_token);
    cfg.render.stop_token = detail::cfg_string(render, "stop_token", cfg.render.stop_token);
    if (cfg.render.video_token.empty() || cfg.render.stop_token.empty())
        throw ConfigError("render tokens must be non-empty");

    const json ingest = detail::cfg_section(j, "ingest");
    cfg.ingest.clip_min_s = detail::cfg_number(ingest, "clip_min_s", cfg.ingest.clip_min_s);
    cfg.ingest.clip_max_s = detail::cfg_number(ingest, "clip_max_s", cfg.ingest.clip_max_s);

    const json split = detail::cfg_section(j, "split");
    cfg.split.test_fraction = detail::cfg_number(split, "test_fraction", cfg.split.test_fraction);
    cfg.split.seed = detail::cfg_seed(split, "seed", cfg.split.seed);

    const json extract = detail::cfg_section(j, "extract");
    cfg.extract.prompt_version = detail::cfg_string(extract, "prompt_version", cfg.extract.prompt_version);
    cfg.extract.min_transcript_words =
        detail::cfg_int(extract, "min_transcript_words", cfg.extract.min_transcript_words);
    cfg.extract.temperature = detail::cfg_number(extract, "temperature", cfg.extract.temperature);
    cfg.extract.max_tokens = detail::cfg_int(extract, "max_tokens", cfg.extract.max_tokens);

    const json generate = detail::cfg_section(j, "generate");
    cfg.generate.prompt_version =
        detail::cfg_string(generate, "prompt_version", cfg.generate.prompt_version);
    cfg.generate.temperature = detail::cfg_number(generate, "temperature", cfg.generate.temperature);
    cfg.generate.max_tokens = detail::cfg_int(generate, "max_tokens", cfg.generate.max_tokens);
    cfg.generate.seed = detail::cfg_seed(generate, "seed", cfg.generate.seed);

    const json align = detail::cfg_section(j, "align");
    cfg.align.clip_min_s = detail::cfg_number(align, "clip_min_s", cfg.align.clip_min_s);
    cfg.align.clip_max_s = detail::cfg_number(align, "clip_max_s", cfg.align.clip_max_s);
    cfg.align.sample_size =
        static_cast<std::size_t>(detail::cfg_int(align, "sample_size", static_cast<int>(cfg.align.sample_size)));
    cfg.align.seed = detail::cfg_seed(align, "seed", cfg.align.seed);
    cfg.align.prompt_version = detail::cfg_string(align, "prompt_version", cfg.align.prompt_version);
    cfg.align.temperature = detail::cfg_number(align, "temperature", cfg.align.temperature);
    cfg.align.max_tokens = detail::cfg_int(align, "max_tokens", cfg.align.max_tokens);

    const json evaluate = detail::cfg_section(j, "evaluate");
    cfg.evaluate.prompt_version =
        detail::cfg_string(evaluate, "prompt_version", cfg.evaluate.prompt_version);
    cfg.evaluate.temperature = detail::cfg_number(evaluate, "temperature", cfg.evaluate.temperature);
    cfg.evaluate.max_tokens = detail::cfg_int(evaluate, "max_tokens", cfg.evaluate.max_tokens);

    return cfg;
}

}  // namespace surgforge
