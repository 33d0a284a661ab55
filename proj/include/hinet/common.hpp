#pragma once
/// @file common.hpp
/// Shared error types and small checking helpers.

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace hinet {

/// Invalid or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unreadable, malformed, or mismatched input data (CLI exit code 3).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape disagreement between tensors that must match.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite value where a finite one is required (CLI exit code 4).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem or serialization failure.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
inline void append_one(std::ostringstream&) {}
template <typename T, typename... Rest>
void append_one(std::ostringstream& os, const T& v, const Rest&... rest) {
    os << v;
    append_one(os, rest...);
}
}  // namespace detail

template <typename Err = std::runtime_error, typename... Parts>
[[noreturn]] void fail(const Parts&... parts) {
    std::ostringstream os;
    detail::append_one(os, parts...);
    throw Err(os.str());
}

#define HINET_CHECK(cond, Err, ...)            \
    do {                                       \
        if (!(cond)) {                         \
            ::hinet::fail<Err>(__VA_ARGS__);   \
        }                                      \
    } while (0)

}  // namespace hinet
