// Rebuilds the shipped replay corpus: runs the pipeline against the
// deterministic synthetic backend while recording every response as a
// {digest}.json fixture, then derives the evaluation inputs
// (predictions/references/human scores) from the resulting dataset.
//
// Run after changing prompt assets or the fixture corpus inputs:
//   surgforge-fixturegen --config fixtures/surgforge.json

#include <filesystem>
#include <unistd.h>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "surgforge/llm/mock_backend.hpp"
#include "surgforge/llm/synth_backend.hpp"
#include "surgforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace surgforge;

int main(int argc, char** argv) {
    CLI::App app{"surgforge-fixturegen — regenerate the mock fixture corpus"};
    std::string config_path = "fixtures/surgforge.json";
    app.add_option("--config", config_path, "Pipeline config whose fixtures to rebuild")
        ->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig config = PipelineConfig::load(config_path);
        if (config.backend.fixtures_dir.empty())
            throw ConfigError("config must set backend.fixtures_dir");

        const fs::path fixtures_dir = config.backend.fixtures_dir;
        fs::remove_all(fixtures_dir);
        fs::create_directories(fixtures_dir);

        const fs::path work_dir =
            fs::temp_directory_path() / ("surgforge-fixturegen-" + std::to_string(::getpid()));
        fs::remove_all(work_dir);
        config.out_dir = work_dir;

        Pipeline pipeline(config, /*force=*/true, &std::cerr);
        auto synth = std::make_shared<llm::SynthBackend>();
        pipeline.set_backend_override(std::make_shared<llm::RecordingBackend>(synth, fixtures_dir));

        pipeline.run_ingest();
        pipeline.run_split();
        pipeline.run_extract();
        pipeline.run_generate();
        if (!config.inputs.triplets.empty()) pipeline.run_align();
        pipeline.run_export();

        // Evaluation inputs: questions and reference observations come from
        // the generated dataset; candidate answers are seeded with a spread
        // of fidelity so verdicts cover the score range.
        const auto records = read_jsonl<DatasetRecord>(work_dir / "dataset.jsonl");
        const auto knowledge = read_jsonl<ExtractedKnowledge>(work_dir / "knowledge.jsonl");
        std::map<std::string, const ExtractedKnowledge*> by_clip;
        for (const auto& k : knowledge) by_clip[k.clip_id] = &k;

        std::vector<Reference> references;
        std::vector<Prediction> predictions;
        for (const DatasetRecord& r : records) {
            if (r.kind != QAKind::observation) continue;
            auto it = by_clip.find(r.conversation.clip_id);
            if (it == by_clip.end() || it->second->units.empty()) continue;

            Reference ref;
            ref.id = r.conversation.id;
            ref.question = r.conversation.turns.front().content;
            for (const KnowledgeUnit& u : it->second->units)
                ref.reference_observations.push_back(u.observation);
            references.push_back(ref);

            const std::uint64_t h = fnv1a64(ref.id);
            Prediction pred;
            pred.id = ref.id;
            if (h % 5 == 0) {
                pred.answer = "The video shows standard laparoscopic technique.";
            } else {
                const std::size_t keep = 1 + (h % ref.reference_observations.size());
                for (std::size_t i = 0; i < keep; ++i) {
                    if (!pred.answer.empty()) pred.answer += " ";
                    pred.answer += ref.reference_observations[i];
                }
            }
            predictions.push_back(pred);
            if (references.size() >= 12) break;
        }
        if (references.empty()) throw Error("no observation records to build eval fixtures from");

        write_jsonl(config.inputs.references, references);
        write_jsonl(config.inputs.predictions, predictions);

        pipeline.run_evaluate();

        // Human scores correlate with judge scores but disagree sometimes.
        const auto verdicts = read_jsonl<JudgeVerdict>(work_dir / "verdicts.jsonl");
        std::vector<HumanScore> human;
        for (const JudgeVerdict& v : verdicts) {
            const int wobble = static_cast<int>(mix64(fnv1a64(v.id)) % 3) - 1;
            const int score = std::clamp(v.score + wobble, 0, 5);
            human.push_back(HumanScore{v.id, static_cast<double>(score)});
        }
        if (!config.inputs.human_scores.empty())
            write_jsonl(config.inputs.human_scores, human);

        std::size_t n_fixtures = 0;
        for (const auto& entry : fs::directory_iterator(fixtures_dir)) {
            if (entry.path().extension() == ".json") ++n_fixtures;
        }
        std::cerr << "recorded " << n_fixtures << " fixtures into " << fixtures_dir.string()
                  << " (" << synth->calls() << " synth calls)\n";
        std::cerr << "eval inputs: " << references.size() << " references, "
                  << predictions.size() << " predictions, " << human.size()
                  << " human scores\n";
        fs::remove_all(work_dir);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "fixturegen failed: " << e.what() << "\n";
        return 1;
    }
}
