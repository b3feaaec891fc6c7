#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "surgforge/json_codec.hpp"
#include "surgforge/llm/client.hpp"
#include "surgforge/llm_task.hpp"
#include "surgforge/parallel.hpp"
#include "surgforge/types.hpp"

namespace surgforge {

struct JudgePromptSpec {
    std::string system_text;
    std::string model = "gpt-3.5-turbo-0125";
    double temperature = 0.0;
    int max_tokens = 512;
    int max_retries = 2;
};

/// Judge prompt: numbered reference observations, the question, and the
/// candidate answer, with strict JSON output demanded by the system text.
inline llm::ChatRequest build_judge_prompt(const std::string& question,
                                           const std::vector<std::string>& reference_observations,
                                           const std::string& candidate_answer,
                                           const JudgePromptSpec& spec,
                                           const std::string& item_id = {}) {
    if (reference_observations.empty())
        throw ValidationError("judge prompt requires at least one reference observation");
    llm::ChatRequest request;
    request.model = spec.model;
    request.temperature = spec.temperature;
    request.max_tokens = spec.max_tokens;
    request.request_tag = "judge:" + item_id;
    request.messages.push_back({Role::system, spec.system_text});
    std::string user = "Reference observations:\n";
    for (std::size_t i = 0; i < reference_observations.size(); ++i)
        user += std::to_string(i + 1) + ". " + reference_observations[i] + "\n";
    user += "Question: " + question + "\n";
    user += "Candidate answer: " + candidate_answer + "\n";
    request.messages.push_back({Role::user, user});
    return request;
}

/// Parses a judge reply. Out-of-range values are errors, never clamped,
/// and the reported total must equal the known reference count.
inline JudgeVerdict parse_verdict(const std::string& raw, int expected_total,
                                  const std::string& item_id = {}) {
    const std::string body = detail::strip_code_fence(raw);
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) throw SchemaError("judge reply is not valid JSON");
    if (!j.is_object()) throw SchemaError("judge reply must be a JSON object");

    JudgeVerdict verdict;
    verdict.id = item_id;
    verdict.score = require_int(j, "score");
    verdict.matched = require_int(j, "matched");
    verdict.total = require_int(j, "total");
    verdict.comment = require_string(j, "comment");
    validate(verdict);  // throws RangeError on score/matched violations
    if (verdict.total != expected_total)
        throw MismatchError("judge reported total=" + std::to_string(verdict.total) +
                            " but there are " + std::to_string(expected_total) + " references");
    return verdict;
}

/// mean score, accuracy@1 (share of items with any match), and
/// accuracy@all (micro-averaged matched/total).
inline MetricsReport compute_metrics(const std::vector<JudgeVerdict>& verdicts) {
    if (verdicts.empty()) throw EmptyInputError("no verdicts to aggregate");
    MetricsReport report;
    report.n_items = verdicts.size();
    long scores = 0;
    long matched = 0;
    long total = 0;
    std::size_t any_match = 0;
    for (const JudgeVerdict& v : verdicts) {
        scores += v.score;
        matched += v.matched;
        total += v.total;
        if (v.matched >= 1) ++any_match;
    }
    report.mean_score = static_cast<double>(scores) / static_cast<double>(verdicts.size());
    report.accuracy_at_1 = static_cast<double>(any_match) / static_cast<double>(verdicts.size());
    report.accuracy_at_all = static_cast<double>(matched) / static_cast<double>(total);
    return report;
}

/// Average ranks (1-based), ties sharing the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

/// Tie-aware Spearman's rho: Pearson correlation of average ranks.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DegenerateInputError("input lengths differ");
    if (x.size() < 2) throw DegenerateInputError("need at least two pairs");
    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);

    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double dx = rx[i] - mx;
        const double dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DegenerateInputError("one side is constant; rank correlation undefined");
    return sxy / std::sqrt(sxx * syy);
}

struct EvalItem {
    Prediction prediction;
    Reference reference;
};

/// Pairs predictions with their references; JoinError names missing ids.
inline std::vector<EvalItem> join_eval_inputs(const std::vector<Prediction>& predictions,
                                              const std::vector<Reference>& references) {
    std::map<std::string, const Reference*> by_id;
    for (const Reference& r : references) by_id[r.id] = &r;
    std::vector<EvalItem> items;
    std::string missing;
    for (const Prediction& p : predictions) {
        auto it = by_id.find(p.id);
        if (it == by_id.end()) {
            if (!missing.empty()) missing += ", ";
            missing += p.id;
            continue;
        }
        items.push_back(EvalItem{p, *it->second});
    }
    if (!missing.empty())
        throw JoinError("predictions without references: " + missing);
    return items;
}

struct EvalRunResult {
    std::vector<JudgeVerdict> verdicts;
    std::vector<FailureRecord> failures;
    MetricsReport metrics;
};

/// Judges every prediction against its references. Per-item failures are
/// recorded; metrics aggregate the successful verdicts.
inline EvalRunResult evaluate_run(const std::vector<Prediction>& predictions,
                                  const std::vector<Reference>& references,
                                  llm::ChatClient& client, const JudgePromptSpec& spec,
                                  int max_in_flight = 1) {
    std::vector<EvalItem> items = join_eval_inputs(predictions, references);
    std::sort(items.begin(), items.end(),
              [](const EvalItem& a, const EvalItem& b) { return a.prediction.id < b.prediction.id; });

    using ItemOutcome = TaskOutcome<JudgeVerdict>;
    auto judge_one = [&](const EvalItem& item) -> ItemOutcome {
        const auto request = build_judge_prompt(item.reference.question,
                                                item.reference.reference_observations,
                                                item.prediction.answer, spec, item.prediction.id);
        const int expected_total = static_cast<int>(item.reference.reference_observations.size());
        return run_json_task<JudgeVerdict>(
            client, request,
            [&](const std::string& raw) {
                try {
                    return parse_verdict(raw, expected_total, item.prediction.id);
                } catch (const RangeError& e) {
                    // Feed range/mismatch violations back through the
                    // repair path like any other malformed reply.
                    throw SchemaError(e.what());
                } catch (const MismatchError& e) {
                    throw SchemaError(e.what());
                }
            },
            spec.max_retries);
    };

    const std::vector<ItemOutcome> outcomes = parallel_map(items, max_in_flight, judge_one);

    EvalRunResult result;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (const auto* verdict = std::get_if<JudgeVerdict>(&outcomes[i])) {
            result.verdicts.push_back(*verdict);
        } else {
            const auto& failure = std::get<TaskFailure>(outcomes[i]);
            result.failures.push_back(FailureRecord{items[i].prediction.id, "evaluate",
                                                    failure.reason, failure.attempts});
        }
    }
    if (!result.verdicts.empty()) result.metrics = compute_metrics(result.verdicts);
    return result;
}

/// Joins judge verdicts with human scores on id and correlates them.
inline double human_correlation(const std::vector<JudgeVerdict>& verdicts,
                                const std::vector<HumanScore>& human) {
    std::map<std::string, double> judge_by_id;
    for (const JudgeVerdict& v : verdicts) judge_by_id[v.id] = static_cast<double>(v.score);
    std::vector<double> x;
    std::vector<double> y;
    for (const HumanScore& h : human) {
        auto it = judge_by_id.find(h.id);
        if (it == judge_by_id.end()) continue;
        x.push_back(it->second);
        y.push_back(h.human_score);
    }
    if (x.empty()) throw JoinError("no overlapping ids between verdicts and human scores");
    return spearman(x, y);
}

}  // namespace surgforge
