#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "surgforge/align.hpp"
#include "surgforge/config.hpp"
#include "surgforge/conversation.hpp"
#include "surgforge/digest.hpp"
#include "surgforge/evaluate.hpp"
#include "surgforge/extract.hpp"
#include "surgforge/generate.hpp"
#include "surgforge/ingest.hpp"
#include "surgforge/jsonl.hpp"
#include "surgforge/llm/http_backend.hpp"
#include "surgforge/llm/mock_backend.hpp"
#include "surgforge/parallel.hpp"
#include "surgforge/prompts.hpp"
#include "surgforge/stats.hpp"

namespace surgforge {

struct StageStatus {
    std::string name;
    bool skipped = false;
    json info = json::object();
};

/// Merges one stage's slice into a shared audit file (failures.jsonl /
/// flags.jsonl): other stages' records are preserved, this stage's are
/// replaced, and the file is rewritten sorted.
template <typename T>
void merge_stage_slice(const std::filesystem::path& path, const std::string& stage,
                       std::vector<T> records) {
    std::vector<T> all;
    if (std::filesystem::exists(path)) {
        all = read_jsonl<T>(path);
        std::erase_if(all, [&](const T& r) { return r.stage == stage; });
    }
    for (auto& r : records) all.push_back(std::move(r));
    write_jsonl(path, std::move(all));
}

/// Orchestrates the stages over a single output directory. Each stage
/// reads prior-stage files, writes its outputs plus a manifest entry, and
/// is skipped when its recorded inputs, params, and outputs all still
/// match (--force overrides).
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config, bool force = false, std::ostream* log = &std::cerr)
        : config_(std::move(config)), force_(force), log_(log) {}

    const PipelineConfig& config() const { return config_; }

    /// Tests inject deterministic or fault-injecting backends here.
    void set_backend_override(std::shared_ptr<llm::Backend> backend) {
        backend_override_ = std::move(backend);
    }

    std::filesystem::path out(const std::string& name) const { return config_.out_dir / name; }

    StageStatus run_stage(const std::string& name) {
        if (name == "ingest") return run_ingest();
        if (name == "split") return run_split();
        if (name == "extract") return run_extract();
        if (name == "generate") return run_generate();
        if (name == "align") return run_align();
        if (name == "export") return run_export();
        if (name == "evaluate") return run_evaluate();
        if (name == "stats") return run_stats();
        throw ConfigError("unknown stage '" + name + "'");
    }

    /// Convenience: all data stages in dependency order; evaluate and
    /// stats run only when their inputs are configured.
    std::vector<StageStatus> run_all() {
        std::vector<StageStatus> statuses;
        statuses.push_back(run_ingest());
        statuses.push_back(run_split());
        statuses.push_back(run_extract());
        statuses.push_back(run_generate());
        if (!config_.inputs.triplets.empty()) statuses.push_back(run_align());
        statuses.push_back(run_export());
        if (!config_.inputs.predictions.empty()) statuses.push_back(run_evaluate());
        if (!config_.inputs.lexicon_verbs.empty()) statuses.push_back(run_stats());
        return statuses;
    }

    // -- stages ------------------------------------------------------------

    StageStatus run_ingest() {
        require_input(config_.inputs.catalog, "inputs.catalog");
        const auto catalog = load_catalog(config_.inputs.catalog);
        if (catalog.empty()) throw EmptyCatalogError("catalog has no procedures");

        std::vector<std::filesystem::path> inputs{config_.inputs.catalog};
        for (const auto& p : catalog) inputs.push_back(asr_path(p.procedure_id));
        const json params{{"clip_min_s", config_.ingest.clip_min_s},
                          {"clip_max_s", config_.ingest.clip_max_s}};
        if (auto skipped = maybe_skip("ingest", params, inputs,
                                      {"clips.jsonl", "transcripts.jsonl"}))
            return *skipped;

        std::vector<VideoClip> clips;
        std::vector<ClipTranscript> transcripts;
        std::vector<FlagRecord> flags;
        std::size_t n_segments = 0;
        for (const SurgicalProcedure& procedure : catalog) {
            SegmentationResult seg =
                segment_clips(procedure, config_.ingest.clip_min_s, config_.ingest.clip_max_s);
            if (seg.sub_minimum)
                flags.push_back(FlagRecord{seg.clips.front().clip_id, "ingest",
                                           "sub_minimum_duration"});
            const auto segments = load_asr_segments(asr_path(procedure.procedure_id));
            n_segments += segments.size();
            for (auto& t : assign_transcript(segments, seg.clips)) transcripts.push_back(std::move(t));
            for (auto& c : seg.clips) clips.push_back(std::move(c));
        }

        write_jsonl(out("clips.jsonl"), clips);
        write_jsonl(out("transcripts.jsonl"), transcripts);
        merge_stage_slice(out("flags.jsonl"), "ingest", std::move(flags));

        json info{{"procedures", catalog.size()},
                  {"clips", clips.size()},
                  {"segments", n_segments}};
        return record_stage("ingest", params, inputs, {"clips.jsonl", "transcripts.jsonl"}, info);
    }

    StageStatus run_split() {
        require_input(config_.inputs.catalog, "inputs.catalog");
        const std::vector<std::filesystem::path> inputs{config_.inputs.catalog};
        const json params{{"test_fraction", config_.split.test_fraction},
                          {"seed", config_.split.seed}};
        if (auto skipped = maybe_skip("split", params, inputs, {"split.json"})) return *skipped;

        const auto catalog = load_catalog(config_.inputs.catalog);
        const SplitResult split =
            split_procedures(catalog, config_.split.test_fraction, config_.split.seed);

        json train = json::array();
        for (const auto& p : split.train) train.push_back(p.procedure_id);
        json test = json::array();
        for (const auto& p : split.test) test.push_back(p.procedure_id);
        write_json_file(out("split.json"), json{{"seed", config_.split.seed},
                                                {"test_fraction", config_.split.test_fraction},
                                                {"n_train", split.train.size()},
                                                {"n_test", split.test.size()},
                                                {"train", train},
                                                {"test", test}});

        json info{{"train", split.train.size()}, {"test", split.test.size()}};
        return record_stage("split", params, inputs, {"split.json"}, info);
    }

    StageStatus run_extract() {
        require_input(config_.inputs.catalog, "inputs.catalog");
        require_stage_file("transcripts.jsonl", "ingest");
        require_stage_file("clips.jsonl", "ingest");
        const std::string& version = config_.extract.prompt_version;
        const std::vector<std::filesystem::path> inputs{
            config_.inputs.catalog, out("transcripts.jsonl"), out("clips.jsonl"),
            prompt_path("extraction", version, "system.txt"),
            prompt_path("extraction", version, "fewshot.json")};
        const json params{{"prompt_version", version},
                          {"min_transcript_words", config_.extract.min_transcript_words},
                          {"temperature", config_.extract.temperature},
                          {"max_tokens", config_.extract.max_tokens},
                          {"model", config_.backend.model},
                          {"max_retries", config_.backend.max_retries}};
        if (auto skipped = maybe_skip("extract", params, inputs, {"knowledge.jsonl"}))
            return *skipped;

        const auto transcripts = read_jsonl<ClipTranscript>(out("transcripts.jsonl"));
        const auto titles = clip_title_index();

        PromptLibrary prompts(config_.inputs.prompts_dir);
        ExtractionPromptSpec spec;
        spec.system_text = prompts.extraction_system(version);
        spec.fewshot = prompts.extraction_fewshot(version);
        spec.model = config_.backend.model;
        spec.temperature = config_.extract.temperature;
        spec.max_tokens = config_.extract.max_tokens;
        ExtractionPolicy policy{config_.extract.min_transcript_words,
                                config_.backend.max_retries};

        llm::ChatClient client = make_client();
        const auto outcomes = parallel_map(
            transcripts, config_.backend.max_in_flight, [&](const ClipTranscript& t) {
                return extract_clip(title_for(titles, t.clip_id), t, client, spec, policy);
            });

        std::vector<ExtractedKnowledge> knowledge;
        std::vector<FlagRecord> flags;
        std::vector<FailureRecord> failures;
        for (const ExtractOutcome& outcome : outcomes) {
            if (const auto* k = std::get_if<ExtractedKnowledge>(&outcome)) {
                knowledge.push_back(*k);
            } else if (const auto* s = std::get_if<ClipSkipped>(&outcome)) {
                flags.push_back(FlagRecord{s->clip_id, "extract", s->reason});
            } else {
                const auto& f = std::get<ClipFailed>(outcome);
                failures.push_back(FailureRecord{f.clip_id, "extract", f.reason, f.attempts});
            }
        }

        write_jsonl(out("knowledge.jsonl"), knowledge);
        merge_stage_slice(out("failures.jsonl"), "extract", std::move(failures));
        merge_stage_slice(out("flags.jsonl"), "extract", std::move(flags));

        json info{{"clips_in", transcripts.size()},
                  {"extracted", knowledge.size()},
                  {"backend", backend_name()},
                  {"backend_calls", client.total_calls()}};
        return record_stage("extract", params, inputs, {"knowledge.jsonl"}, info);
    }

    StageStatus run_generate() {
        require_input(config_.inputs.catalog, "inputs.catalog");
        require_stage_file("knowledge.jsonl", "extract");
        require_stage_file("clips.jsonl", "ingest");
        const std::string& version = config_.generate.prompt_version;
        const std::vector<std::filesystem::path> inputs{
            config_.inputs.catalog, out("knowledge.jsonl"), out("clips.jsonl"),
            prompt_path("generation", version, "observation.txt"),
            prompt_path("generation", version, "reasoning.txt")};
        const json params{{"prompt_version", version},
                          {"temperature", config_.generate.temperature},
                          {"max_tokens", config_.generate.max_tokens},
                          {"seed", config_.generate.seed},
                          {"model", config_.backend.model},
                          {"max_retries", config_.backend.max_retries}};
        if (auto skipped = maybe_skip("generate", params, inputs, {"conversations.qa.jsonl"}))
            return *skipped;

        const auto knowledge = read_jsonl<ExtractedKnowledge>(out("knowledge.jsonl"));
        const auto clips = read_jsonl<VideoClip>(out("clips.jsonl"));
        std::map<std::string, const VideoClip*> clip_index;
        for (const VideoClip& c : clips) clip_index[c.clip_id] = &c;
        const auto titles = clip_title_index();

        PromptLibrary prompts(config_.inputs.prompts_dir);
        GenerationPromptSpec spec;
        spec.observation_system = prompts.generation_observation(version);
        spec.reasoning_system = prompts.generation_reasoning(version);
        spec.model = config_.backend.model;
        spec.temperature = config_.generate.temperature;
        spec.max_tokens = config_.generate.max_tokens;
        spec.max_retries = config_.backend.max_retries;

        struct ClipResult {
            std::optional<DatasetRecord> record;
            std::vector<FailureRecord> failures;
            std::optional<FlagRecord> flag;
        };

        llm::ChatClient client = make_client();
        const auto results = parallel_map(
            knowledge, config_.backend.max_in_flight, [&](const ExtractedKnowledge& k) {
                ClipResult result;
                auto clip_it = clip_index.find(k.clip_id);
                if (clip_it == clip_index.end()) {
                    result.failures.push_back(
                        FailureRecord{k.clip_id, "generate", "clip not found in clips.jsonl", 0});
                    return result;
                }
                if (k.units.empty()) {
                    result.flag = FlagRecord{k.clip_id, "generate", "no_units"};
                    return result;
                }
                const std::string title = title_for(titles, k.clip_id);

                std::vector<QAPair> qas;
                auto obs = gen_observation_qa(title, k, client, spec);
                if (const auto* failure = std::get_if<TaskFailure>(&obs)) {
                    result.failures.push_back(FailureRecord{
                        k.clip_id, "generate", "observation: " + failure->reason,
                        failure->attempts});
                } else {
                    qas.push_back(std::get<QAPair>(obs));
                }
                ReasoningResult reasoning = gen_reasoning_qas(title, k, client, spec);
                for (auto& pair : reasoning.pairs) qas.push_back(std::move(pair));
                for (const PairFailure& f : reasoning.failures) {
                    result.failures.push_back(FailureRecord{
                        k.clip_id, "generate",
                        to_string(f.kind) + " unit " + std::to_string(f.unit_index) + ": " +
                            f.reason,
                        f.attempts});
                }
                if (!qas.empty()) {
                    Conversation conv =
                        assemble_conversation(*clip_it->second, qas, config_.generate.seed);
                    result.record = DatasetRecord{std::move(conv), qas.front().kind};
                }
                return result;
            });

        std::vector<DatasetRecord> records;
        std::vector<FailureRecord> failures;
        std::vector<FlagRecord> flags;
        std::size_t n_pairs = 0;
        for (const auto& r : results) {
            if (r.record) {
                records.push_back(*r.record);
                n_pairs += r.record->conversation.rounds();
            }
            for (const auto& f : r.failures) failures.push_back(f);
            if (r.flag) flags.push_back(*r.flag);
        }

        write_jsonl(out("conversations.qa.jsonl"), records);
        merge_stage_slice(out("failures.jsonl"), "generate", std::move(failures));
        merge_stage_slice(out("flags.jsonl"), "generate", std::move(flags));

        json info{{"clips_in", knowledge.size()},
                  {"conversations", records.size()},
                  {"qa_pairs", n_pairs},
                  {"backend", backend_name()},
                  {"backend_calls", client.total_calls()}};
        return record_stage("generate", params, inputs, {"conversations.qa.jsonl"}, info);
    }

    StageStatus run_align() {
        require_input(config_.inputs.triplets, "inputs.triplets");
        const std::string& version = config_.align.prompt_version;
        const std::vector<std::filesystem::path> inputs{
            config_.inputs.triplets, prompt_path("generation", version, "alignment.txt")};
        const json params{{"prompt_version", version},
                          {"clip_min_s", config_.align.clip_min_s},
                          {"clip_max_s", config_.align.clip_max_s},
                          {"sample_size", config_.align.sample_size},
                          {"seed", config_.align.seed},
                          {"temperature", config_.align.temperature},
                          {"max_tokens", config_.align.max_tokens},
                          {"model", config_.backend.model},
                          {"max_retries", config_.backend.max_retries}};
        if (auto skipped = maybe_skip("align", params, inputs, {"conversations.align.jsonl"}))
            return *skipped;

        const auto streams = read_jsonl<TripletStream>(config_.inputs.triplets);

        PromptLibrary prompts(config_.inputs.prompts_dir);
        AlignmentPromptSpec spec;
        spec.system_text = prompts.generation_alignment(version);
        spec.model = config_.backend.model;
        spec.temperature = config_.align.temperature;
        spec.max_tokens = config_.align.max_tokens;
        spec.max_retries = config_.backend.max_retries;

        struct Candidate {
            VideoClip clip;
            std::vector<MergedTripletSpan> spans;
        };
        std::vector<Candidate> candidates;
        std::vector<FlagRecord> flags;
        for (const TripletStream& stream : streams) {
            if (stream.frames.empty()) {
                flags.push_back(FlagRecord{stream.video_id, "align", "no_frames"});
                continue;
            }
            SegmentationResult seg =
                segment_annotation_clips(stream.video_id, stream_duration_s(stream),
                                         config_.align.clip_min_s, config_.align.clip_max_s);
            if (seg.sub_minimum)
                flags.push_back(
                    FlagRecord{seg.clips.front().clip_id, "align", "sub_minimum_duration"});
            for (VideoClip& clip : seg.clips) {
                auto spans = merge_consecutive(frames_for_clip(stream, clip));
                if (active_spans(spans).empty()) {
                    flags.push_back(FlagRecord{clip.clip_id, "align", "no_actions"});
                    continue;
                }
                candidates.push_back(Candidate{std::move(clip), std::move(spans)});
            }
        }

        if (config_.align.sample_size > 0 && candidates.size() > config_.align.sample_size) {
            seeded_shuffle(candidates, config_.align.seed);
            candidates.resize(config_.align.sample_size);
            std::sort(candidates.begin(), candidates.end(),
                      [](const Candidate& a, const Candidate& b) {
                          return a.clip.clip_id < b.clip.clip_id;
                      });
        }

        struct ClipResult {
            std::optional<DatasetRecord> record;
            std::optional<FailureRecord> failure;
        };
        llm::ChatClient client = make_client();
        const auto results =
            parallel_map(candidates, config_.backend.max_in_flight, [&](const Candidate& c) {
                ClipResult result;
                auto outcome = gen_alignment_pair(c.clip.clip_id, c.spans, client, spec);
                if (const auto* failure = std::get_if<TaskFailure>(&outcome)) {
                    result.failure =
                        FailureRecord{c.clip.clip_id, "align", failure->reason, failure->attempts};
                    return result;
                }
                const QAPair pair = std::get<QAPair>(outcome);
                Conversation conv = assemble_conversation(c.clip, {pair}, config_.align.seed);
                result.record = DatasetRecord{std::move(conv), QAKind::alignment};
                return result;
            });

        std::vector<DatasetRecord> records;
        std::vector<FailureRecord> failures;
        for (const auto& r : results) {
            if (r.record) records.push_back(*r.record);
            if (r.failure) failures.push_back(*r.failure);
        }

        write_jsonl(out("conversations.align.jsonl"), records);
        merge_stage_slice(out("failures.jsonl"), "align", std::move(failures));
        merge_stage_slice(out("flags.jsonl"), "align", std::move(flags));

        json info{{"streams", streams.size()},
                  {"candidate_clips", candidates.size()},
                  {"conversations", records.size()},
                  {"backend", backend_name()},
                  {"backend_calls", client.total_calls()}};
        return record_stage("align", params, inputs, {"conversations.align.jsonl"}, info);
    }

    StageStatus run_export() {
        require_stage_file("conversations.qa.jsonl", "generate");
        std::vector<std::filesystem::path> inputs{out("conversations.qa.jsonl")};
        const bool has_align = std::filesystem::exists(out("conversations.align.jsonl"));
        if (has_align) inputs.push_back(out("conversations.align.jsonl"));
        const json params{{"video_token", config_.render.video_token},
                          {"stop_token", config_.render.stop_token}};
        if (auto skipped = maybe_skip("export", params, inputs, {"dataset.jsonl"}))
            return *skipped;

        auto records = read_jsonl<DatasetRecord>(out("conversations.qa.jsonl"));
        if (has_align) {
            for (auto& r : read_jsonl<DatasetRecord>(out("conversations.align.jsonl")))
                records.push_back(std::move(r));
        }
        const DatasetManifest manifest =
            export_dataset(records, out("dataset.jsonl"), config_.render.video_token,
                           config_.render.stop_token);

        json info = encode(manifest);
        info["prompt_versions"] = json{{"extraction", config_.extract.prompt_version},
                                       {"generation", config_.generate.prompt_version},
                                       {"alignment", config_.align.prompt_version}};
        info["seeds"] = json{{"split", config_.split.seed},
                             {"generate", config_.generate.seed},
                             {"align", config_.align.seed}};
        return record_stage("export", params, inputs, {"dataset.jsonl"}, info);
    }

    StageStatus run_evaluate() {
        require_input(config_.inputs.predictions, "inputs.predictions");
        require_input(config_.inputs.references, "inputs.references");
        const std::string& version = config_.evaluate.prompt_version;
        std::vector<std::filesystem::path> inputs{config_.inputs.predictions,
                                                  config_.inputs.references,
                                                  prompt_path("judge", version, "system.txt")};
        const bool has_human = !config_.inputs.human_scores.empty() &&
                               std::filesystem::exists(config_.inputs.human_scores);
        if (has_human) inputs.push_back(config_.inputs.human_scores);
        const json params{{"prompt_version", version},
                          {"temperature", config_.evaluate.temperature},
                          {"max_tokens", config_.evaluate.max_tokens},
                          {"judge_model", config_.backend.judge_model},
                          {"max_retries", config_.backend.max_retries}};
        if (auto skipped = maybe_skip("evaluate", params, inputs,
                                      {"verdicts.jsonl", "metrics.json"}))
            return *skipped;

        const auto predictions = read_jsonl<Prediction>(config_.inputs.predictions);
        const auto references = read_jsonl<Reference>(config_.inputs.references);

        PromptLibrary prompts(config_.inputs.prompts_dir);
        JudgePromptSpec spec;
        spec.system_text = prompts.judge_system(version);
        spec.model = config_.backend.judge_model;
        spec.temperature = config_.evaluate.temperature;
        spec.max_tokens = config_.evaluate.max_tokens;
        spec.max_retries = config_.backend.max_retries;

        llm::ChatClient client = make_client();
        EvalRunResult result = evaluate_run(predictions, references, client, spec,
                                            config_.backend.max_in_flight);
        const std::size_t n_failures = result.failures.size();

        write_jsonl(out("verdicts.jsonl"), result.verdicts);
        merge_stage_slice(out("failures.jsonl"), "evaluate", std::move(result.failures));

        json metrics{{"n_items", result.verdicts.size()},
                     {"failures", n_failures},
                     {"mean_score", result.metrics.mean_score},
                     {"accuracy_at_1", result.metrics.accuracy_at_1},
                     {"accuracy_at_all", result.metrics.accuracy_at_all}};
        if (has_human) {
            const auto human = read_jsonl<HumanScore>(config_.inputs.human_scores);
            metrics["human_spearman"] = human_correlation(result.verdicts, human);
            metrics["n_human"] = human.size();
        }
        write_json_file(out("metrics.json"), metrics);

        json info = metrics;
        info["backend"] = backend_name();
        info["backend_calls"] = client.total_calls();
        return record_stage("evaluate", params, inputs, {"verdicts.jsonl", "metrics.json"}, info);
    }

    StageStatus run_stats() {
        require_input(config_.inputs.catalog, "inputs.catalog");
        require_input(config_.inputs.lexicon_verbs, "inputs.lexicon_verbs");
        require_input(config_.inputs.lexicon_nouns, "inputs.lexicon_nouns");
        require_stage_file("dataset.jsonl", "export");
        require_stage_file("clips.jsonl", "ingest");
        const std::vector<std::filesystem::path> inputs{
            out("dataset.jsonl"), out("clips.jsonl"), config_.inputs.catalog,
            config_.inputs.lexicon_verbs, config_.inputs.lexicon_nouns};
        const json params = json::object();
        if (auto skipped = maybe_skip("stats", params, inputs, {"report.json", "report.txt"}))
            return *skipped;

        const auto records = read_jsonl<DatasetRecord>(out("dataset.jsonl"));
        const auto clips = read_jsonl<VideoClip>(out("clips.jsonl"));
        const auto catalog = load_catalog(config_.inputs.catalog);
        const Lexicon lexicon =
            Lexicon::load(config_.inputs.lexicon_verbs, config_.inputs.lexicon_nouns);

        std::vector<std::string> responses;
        for (const DatasetRecord& r : records)
            for (const Turn& t : r.conversation.turns)
                if (t.role == Role::assistant) responses.push_back(t.content);

        // Alignment records reference annotation videos outside the
        // catalog; they are reported as their own bucket.
        std::vector<DatasetRecord> structured;
        std::size_t alignment_records = 0;
        for (const DatasetRecord& r : records) {
            if (r.kind == QAKind::alignment) {
                ++alignment_records;
            } else {
                structured.push_back(r);
            }
        }
        const CategoryDistribution categories = category_distribution(structured, clips, catalog);
        const CorpusSummary summary = corpus_summary(clips, records);
        const auto verb_noun = verb_noun_pairs(responses, lexicon);

        json report;
        report["verb_noun_method"] = "lexicon heuristic (approximate)";
        json vn = json::array();
        for (const VerbNounRow& row : verb_noun)
            vn.push_back(json{{"verb", row.verb}, {"noun", row.noun}, {"count", row.count}});
        report["verb_noun_pairs"] = vn;
        json cats = json::object();
        for (const auto& [cat, n] : categories.per_category) cats[cat] = n;
        report["categories"] = cats;
        json cat_kinds = json::object();
        for (const auto& [cat, kinds] : categories.per_category_kind) {
            json k = json::object();
            for (const auto& [kind, n] : kinds) k[kind] = n;
            cat_kinds[cat] = k;
        }
        report["categories_by_kind"] = cat_kinds;
        report["alignment_records"] = alignment_records;
        json hist = json::object();
        for (const auto& [rounds, n] : summary.rounds_histogram) hist[std::to_string(rounds)] = n;
        report["summary"] = json{{"n_clips", summary.n_clips},
                                 {"n_pairs", summary.n_pairs},
                                 {"mean_clip_length_s", summary.mean_clip_length_s},
                                 {"rounds_histogram", hist}};
        write_json_file(out("report.json"), report);
        write_text_file(out("report.txt"), render_report_text(verb_noun, categories,
                                                              alignment_records, summary));

        json info{{"records", records.size()}, {"responses", responses.size()}};
        return record_stage("stats", params, inputs, {"report.json", "report.txt"}, info);
    }

private:
    std::filesystem::path asr_path(const std::string& procedure_id) const {
        return config_.inputs.asr_dir / (procedure_id + ".json");
    }

    std::filesystem::path prompt_path(const std::string& family, const std::string& version,
                                      const std::string& file) const {
        return config_.inputs.prompts_dir / family / version / file;
    }

    static void require_input(const std::filesystem::path& path, const std::string& what) {
        if (path.empty()) throw ConfigError("config is missing " + what);
        if (!std::filesystem::exists(path))
            throw MissingInputError(what + " not found: " + path.string());
    }

    void require_stage_file(const std::string& file, const std::string& producer) const {
        if (!std::filesystem::exists(out(file)))
            throw MissingInputError(out(file).string() + " is missing; run the " + producer +
                                    " stage first");
    }

    std::map<std::string, std::string> clip_title_index() const {
        const auto catalog = load_catalog(config_.inputs.catalog);
        std::map<std::string, std::string> by_procedure;
        for (const auto& p : catalog) by_procedure[p.procedure_id] = p.title;
        const auto clips = read_jsonl<VideoClip>(out("clips.jsonl"));
        std::map<std::string, std::string> titles;
        for (const VideoClip& c : clips) {
            auto it = by_procedure.find(c.procedure_id);
            if (it == by_procedure.end())
                throw UnresolvedClipError("clip '" + c.clip_id +
                                          "' references unknown procedure '" + c.procedure_id + "'");
            titles[c.clip_id] = it->second;
        }
        return titles;
    }

    static std::string title_for(const std::map<std::string, std::string>& titles,
                                 const std::string& clip_id) {
        auto it = titles.find(clip_id);
        if (it == titles.end())
            throw UnresolvedClipError("no title for clip '" + clip_id + "'");
        return it->second;
    }

    // -- backend -----------------------------------------------------------

    std::shared_ptr<llm::Backend> backend() {
        if (backend_override_) return backend_override_;
        if (backend_) return backend_;
        switch (config_.backend.mode) {
            case BackendMode::mock:
                if (config_.backend.fixtures_dir.empty())
                    throw ConfigError("backend.fixtures_dir required for mock mode");
                backend_ = std::make_shared<llm::FixtureBackend>(config_.backend.fixtures_dir);
                break;
            case BackendMode::live:
                if (config_.backend.api_key.empty())
                    throw ConfigError(std::string(kApiKeyEnvVar) + " is not set");
                backend_ = std::make_shared<llm::HttpBackend>(config_.backend.endpoint,
                                                              config_.backend.api_key);
                break;
            case BackendMode::record: {
                if (config_.backend.api_key.empty())
                    throw ConfigError(std::string(kApiKeyEnvVar) + " is not set");
                if (config_.backend.fixtures_dir.empty())
                    throw ConfigError("backend.fixtures_dir required for record mode");
                auto live = std::make_shared<llm::HttpBackend>(config_.backend.endpoint,
                                                               config_.backend.api_key);
                backend_ = std::make_shared<llm::RecordingBackend>(live,
                                                                   config_.backend.fixtures_dir);
                break;
            }
        }
        return backend_;
    }

    std::string backend_name() { return backend()->name(); }

    llm::ChatClient make_client() {
        llm::RetryPolicy retry{config_.backend.max_retries,
                               std::chrono::milliseconds(config_.backend.base_delay_ms)};
        return llm::ChatClient(backend(), retry, config_.backend.requests_per_second);
    }

    // -- manifest ----------------------------------------------------------

    json& manifest() {
        if (!manifest_loaded_) {
            const auto path = out("manifest.json");
            manifest_ = std::filesystem::exists(path) ? read_json_file(path)
                                                      : json{{"stages", json::object()}};
            if (!manifest_.contains("stages")) manifest_["stages"] = json::object();
            manifest_loaded_ = true;
        }
        return manifest_;
    }

    json input_digests(const std::vector<std::filesystem::path>& inputs) const {
        json digests = json::object();
        for (const auto& path : inputs) {
            if (!std::filesystem::exists(path))
                throw MissingInputError("input not found: " + path.string());
            digests[path.string()] = digest_file(path);
        }
        return digests;
    }

    std::optional<StageStatus> maybe_skip(const std::string& name, const json& params,
                                          const std::vector<std::filesystem::path>& inputs,
                                          const std::vector<std::string>& outputs) {
        if (force_) return std::nullopt;
        const json& stages = manifest()["stages"];
        if (!stages.contains(name)) return std::nullopt;
        const json& entry = stages[name];
        if (entry.value("params", json::object()) != params) return std::nullopt;
        if (entry.value("inputs", json::object()) != input_digests(inputs)) return std::nullopt;
        const json recorded = entry.value("outputs", json::object());
        for (const std::string& file : outputs) {
            const auto path = out(file);
            if (!std::filesystem::exists(path)) return std::nullopt;
            if (!recorded.contains(file) || recorded[file] != digest_file(path))
                return std::nullopt;
        }
        log_line(name, "skipped (up to date)");
        StageStatus status;
        status.name = name;
        status.skipped = true;
        status.info = entry.value("info", json::object());
        return status;
    }

    StageStatus record_stage(const std::string& name, const json& params,
                             const std::vector<std::filesystem::path>& inputs,
                             const std::vector<std::string>& outputs, const json& info) {
        json output_digests = json::object();
        for (const std::string& file : outputs) output_digests[file] = digest_file(out(file));
        json entry{{"params", params},
                   {"inputs", input_digests(inputs)},
                   {"outputs", output_digests},
                   {"info", info}};
        manifest()["stages"][name] = entry;
        write_json_file(out("manifest.json"), manifest());
        log_line(name, "done", info);
        StageStatus status;
        status.name = name;
        status.skipped = false;
        status.info = info;
        return status;
    }

    void log_line(const std::string& stage, const std::string& status,
                  const json& kv = json::object()) const {
        if (!log_) return;
        *log_ << "stage=" << stage << " " << status;
        for (auto it = kv.begin(); it != kv.end(); ++it) {
            if (it.value().is_structured()) continue;
            *log_ << " " << it.key() << "=" << it.value().dump();
        }
        *log_ << "\n";
    }

    static std::string render_report_text(const std::vector<VerbNounRow>& verb_noun,
                                          const CategoryDistribution& categories,
                                          std::size_t alignment_records,
                                          const CorpusSummary& summary) {
        std::string text;
        text += "corpus summary\n";
        text += "  clips:               " + std::to_string(summary.n_clips) + "\n";
        text += "  qa pairs:            " + std::to_string(summary.n_pairs) + "\n";
        text += "  mean clip length s:  " + format_double(summary.mean_clip_length_s) + "\n";
        text += "  rounds histogram:   ";
        for (const auto& [rounds, n] : summary.rounds_histogram)
            text += " " + std::to_string(rounds) + "x" + std::to_string(n);
        text += "\n\ncategories (records)\n";
        for (const auto& [cat, n] : categories.per_category)
            text += "  " + cat + ": " + std::to_string(n) + "\n";
        text += "  [concept alignment]: " + std::to_string(alignment_records) + "\n";
        text += "\ntop verb-noun pairs (lexicon heuristic, approximate)\n";
        std::size_t shown = 0;
        for (const VerbNounRow& row : verb_noun) {
            if (++shown > 20) break;
            text += "  " + row.verb + " / " + row.noun + ": " + std::to_string(row.count) + "\n";
        }
        return text;
    }

    PipelineConfig config_;
    bool force_;
    std::ostream* log_;
    std::shared_ptr<llm::Backend> backend_override_;
    std::shared_ptr<llm::Backend> backend_;
    json manifest_;
    bool manifest_loaded_ = false;
};

}  // namespace surgforge
