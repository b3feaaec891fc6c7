#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "surgforge/errors.hpp"
#include "surgforge/jsonl.hpp"

namespace surgforge {

/// One worked example shown to the model before the real query.
struct FewshotExample {
    std::string user;
    std::string assistant;
};

/// Loads versioned prompt assets from a prompts directory:
///   extraction/{version}/system.txt, fewshot.json
///   generation/{version}/observation.txt, reasoning.txt
///   judge/{version}/system.txt
/// Templates live in files rather than code so wording can be iterated
/// without rebuilds.
class PromptLibrary {
public:
    explicit PromptLibrary(std::filesystem::path root) : root_(std::move(root)) {
        if (!std::filesystem::is_directory(root_))
            throw ConfigError("prompts directory does not exist: " + root_.string());
    }

    std::string extraction_system(const std::string& version) const {
        return load_text("extraction", version, "system.txt");
    }

    std::vector<FewshotExample> extraction_fewshot(const std::string& version) const {
        const auto path = root_ / "extraction" / version / "fewshot.json";
        if (!std::filesystem::exists(path))
            throw MissingInputError("prompt asset missing: " + path.string());
        json j = read_json_file(path);
        if (!j.is_array()) throw SchemaError("fewshot.json must be a JSON array");
        std::vector<FewshotExample> examples;
        for (const auto& e : j)
            examples.push_back(FewshotExample{require_string(e, "user"),
                                              require_string(e, "assistant")});
        return examples;
    }

    std::string generation_observation(const std::string& version) const {
        return load_text("generation", version, "observation.txt");
    }

    std::string generation_reasoning(const std::string& version) const {
        return load_text("generation", version, "reasoning.txt");
    }

    std::string generation_alignment(const std::string& version) const {
        return load_text("generation", version, "alignment.txt");
    }

    std::string judge_system(const std::string& version) const {
        return load_text("judge", version, "system.txt");
    }

    const std::filesystem::path& root() const { return root_; }

private:
    std::string load_text(const std::string& family, const std::string& version,
                          const std::string& file) const {
        const auto path = root_ / family / version / file;
        if (!std::filesystem::exists(path))
            throw MissingInputError("prompt asset missing: " + path.string());
        return read_text_file(path);
    }

    std::filesystem::path root_;
};

}  // namespace surgforge
