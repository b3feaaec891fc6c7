#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "surgforge/errors.hpp"
#include "surgforge/jsonl.hpp"
#include "surgforge/text.hpp"
#include "surgforge/types.hpp"

namespace surgforge {

/// Word lists driving the verb-noun heuristic; one lowercase lemma per
/// line. A pluggable list, not a parser — results are approximate and the
/// report says so.
struct Lexicon {
    std::unordered_set<std::string> verbs;
    std::unordered_set<std::string> nouns;

    static Lexicon load(const std::filesystem::path& verbs_path,
                        const std::filesystem::path& nouns_path) {
        Lexicon lex;
        lex.verbs = load_words(verbs_path);
        lex.nouns = load_words(nouns_path);
        return lex;
    }

private:
    static std::unordered_set<std::string> load_words(const std::filesystem::path& path) {
        std::unordered_set<std::string> words;
        for (const std::string& line : split_lines(read_text_file(path))) {
            const std::string word = trim(line);
            if (!word.empty()) words.insert(to_lower(word));
        }
        return words;
    }

    static std::vector<std::string> split_lines(const std::string& text) {
        std::vector<std::string> lines;
        std::size_t start = 0;
        while (start <= text.size()) {
            const std::size_t end = text.find('\n', start);
            if (end == std::string::npos) {
                lines.push_back(text.substr(start));
                break;
            }
            lines.push_back(text.substr(start, end - start));
            start = end + 1;
        }
        return lines;
    }
};

namespace detail {

inline std::string strip_punct(const std::string& token) {
    std::size_t b = 0;
    std::size_t e = token.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(token[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(token[e - 1]))) --e;
    return token.substr(b, e - b);
}

/// Naive lemma candidates for a surface token: the token itself plus a few
/// suffix-stripped guesses ("divided" -> "divide", "retracts" -> "retract").
inline std::vector<std::string> lemma_candidates(const std::string& token) {
    std::vector<std::string> out{token};
    const auto add_strip = [&](std::size_t n) {
        if (token.size() > n + 2) out.push_back(token.substr(0, token.size() - n));
    };
    add_strip(1);  // -s / -d
    add_strip(2);  // -es / -ed
    add_strip(3);  // -ing
    if (token.size() > 5 && token.compare(token.size() - 3, 3, "ing") == 0)
        out.push_back(token.substr(0, token.size() - 3) + "e");
    return out;
}

inline bool in_list(const std::unordered_set<std::string>& words, const std::string& token) {
    for (const std::string& candidate : lemma_candidates(token))
        if (words.count(candidate)) return true;
    return false;
}

}  // namespace detail

struct VerbNounRow {
    std::string verb;
    std::string noun;
    std::size_t count = 0;

    auto operator<=>(const VerbNounRow&) const = default;
};

/// For each response: the first token matching the verb list becomes the
/// root verb, the first later token matching the noun list the direct
/// noun. Responses with no verb match land under (none, none). Rows are
/// sorted by count descending, then key.
inline std::vector<VerbNounRow> verb_noun_pairs(const std::vector<std::string>& responses,
                                                const Lexicon& lexicon) {
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    for (const std::string& response : responses) {
        std::string verb = "none";
        std::string noun = "none";
        const std::vector<std::string> tokens = split_words(response);
        std::size_t i = 0;
        for (; i < tokens.size(); ++i) {
            const std::string t = to_lower(detail::strip_punct(tokens[i]));
            if (!t.empty() && detail::in_list(lexicon.verbs, t)) {
                verb = t;
                break;
            }
        }
        if (verb != "none") {
            for (++i; i < tokens.size(); ++i) {
                const std::string t = to_lower(detail::strip_punct(tokens[i]));
                if (!t.empty() && detail::in_list(lexicon.nouns, t)) {
                    noun = t;
                    break;
                }
            }
        }
        counts[{verb, noun}]++;
    }

    std::vector<VerbNounRow> rows;
    for (const auto& [key, count] : counts) rows.push_back(VerbNounRow{key.first, key.second, count});
    std::sort(rows.begin(), rows.end(), [](const VerbNounRow& a, const VerbNounRow& b) {
        if (a.count != b.count) return a.count > b.count;
        if (a.verb != b.verb) return a.verb < b.verb;
        return a.noun < b.noun;
    });
    return rows;
}

struct CategoryDistribution {
    std::map<std::string, std::size_t> per_category;
    std::map<std::string, std::map<std::string, std::size_t>> per_category_kind;
    std::size_t total = 0;
};

/// Resolves each record through clip -> procedure -> category and counts
/// records per category and per QA kind within it.
inline CategoryDistribution category_distribution(const std::vector<DatasetRecord>& records,
                                                  const std::vector<VideoClip>& clips,
                                                  const std::vector<SurgicalProcedure>& catalog) {
    std::unordered_map<std::string, std::string> clip_to_procedure;
    for (const VideoClip& c : clips) clip_to_procedure[c.clip_id] = c.procedure_id;
    std::unordered_map<std::string, std::string> procedure_to_category;
    for (const SurgicalProcedure& p : catalog) procedure_to_category[p.procedure_id] = p.category;

    CategoryDistribution dist;
    for (const DatasetRecord& record : records) {
        auto clip_it = clip_to_procedure.find(record.conversation.clip_id);
        if (clip_it == clip_to_procedure.end())
            throw UnresolvedClipError("clip '" + record.conversation.clip_id +
                                      "' not present in the clip index");
        auto cat_it = procedure_to_category.find(clip_it->second);
        if (cat_it == procedure_to_category.end())
            throw UnresolvedClipError("procedure '" + clip_it->second + "' not in catalog");
        dist.per_category[cat_it->second]++;
        dist.per_category_kind[cat_it->second][to_string(record.kind)]++;
        dist.total++;
    }
    return dist;
}

struct CorpusSummary {
    std::size_t n_clips = 0;
    std::size_t n_pairs = 0;
    double mean_clip_length_s = 0.0;
    std::map<std::size_t, std::size_t> rounds_histogram;
};

inline CorpusSummary corpus_summary(const std::vector<VideoClip>& clips,
                                    const std::vector<DatasetRecord>& records) {
    CorpusSummary summary;
    summary.n_clips = clips.size();
    double total_s = 0.0;
    for (const VideoClip& c : clips) total_s += c.duration_s();
    if (!clips.empty()) summary.mean_clip_length_s = total_s / static_cast<double>(clips.size());
    for (const DatasetRecord& r : records) {
        const std::size_t rounds = r.conversation.rounds();
        summary.n_pairs += rounds;
        summary.rounds_histogram[rounds]++;
    }
    return summary;
}

}  // namespace surgforge
