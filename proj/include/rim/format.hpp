#pragma once

#include <charconv>
#include <string>

namespace rim {

/// Shortest decimal representation that round-trips the double exactly.
/// All numeric file output goes through this so reruns are byte-comparable.
inline std::string fmt_g(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_g(std::size_t v) { return std::to_string(v); }
inline std::string fmt_g(int v) { return std::to_string(v); }

}  // namespace rim
