#pragma once

#include <charconv>
#include <string>

namespace mvb {

// Shortest decimal text that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace mvb
