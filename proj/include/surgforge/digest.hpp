#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "surgforge/errors.hpp"

namespace surgforge {

/// 64-bit FNV-1a. Stable across platforms; used for fixture keys,
/// content digests, and seeded coins. Not cryptographic.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t state = 0xcbf29ce484222325ULL) {
    for (unsigned char c : data) {
        state ^= c;
        state *= 0x100000001b3ULL;
    }
    return state;
}

inline std::string to_hex(std::uint64_t value) {
    static const char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

/// Shortest round-trip decimal form, identical on every platform.
inline std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline std::string digest_bytes(std::string_view data) {
    return to_hex(fnv1a64(data));
}

inline std::string digest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for digest: " + path.string());
    std::uint64_t state = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        state = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), state);
    }
    return to_hex(state);
}

}  // namespace surgforge
