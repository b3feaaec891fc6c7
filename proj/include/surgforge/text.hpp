#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace surgforge {

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) words.emplace_back(s.substr(start, i - start));
    }
    return words;
}

inline std::size_t word_count(std::string_view s) {
    return split_words(s).size();
}

inline bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

namespace detail {

/// Tolerates a fenced ```json ... ``` block around a model reply.
inline std::string strip_code_fence(const std::string& raw) {
    std::string s = trim(raw);
    if (s.size() >= 6 && s.compare(0, 3, "```") == 0 && s.compare(s.size() - 3, 3, "```") == 0) {
        s = s.substr(3, s.size() - 6);
        if (s.size() >= 4 && s.compare(0, 4, "json") == 0) s = s.substr(4);
        s = trim(s);
    }
    return s;
}

}  // namespace detail

}  // namespace surgforge
