#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "surgforge/errors.hpp"
#include "surgforge/json_codec.hpp"

namespace surgforge {

/// Reads one record per line. Schema errors are re-thrown with the
/// offending line number attached.
template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<T> records;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw SchemaError("line is not valid JSON", line_no);
        try {
            records.push_back(Codec<T>::from_json(j));
        } catch (const SchemaError& e) {
            throw SchemaError(std::string(e.what()), line_no, e.field());
        }
    }
    return records;
}

/// Writes records sorted by primary key, one compact JSON object per line.
/// Binary mode plus explicit '\n' keeps output byte-identical everywhere.
template <typename T>
void write_jsonl(const std::filesystem::path& path, std::vector<T> records) {
    std::stable_sort(records.begin(), records.end(), [](const T& a, const T& b) {
        return Codec<T>::key(a) < Codec<T>::key(b);
    });
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const T& record : records) {
        out << Codec<T>::to_json(record).dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw SchemaError("file is not valid JSON: " + path.string());
    return j;
}

inline void write_json_file(const std::filesystem::path& path, const json& j, int indent = 2) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(indent) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace surgforge
