#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tdmd {

enum class ErrorCode {
    invalid_dimension,
    invalid_transform,
    invalid_rank,
    invalid_parameter,
    degenerate_input,
    rank_deficiency,
    size_limit,
    insufficient_data,
    parse_error,
    io_error,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_dimension: return "invalid dimension";
    case ErrorCode::invalid_transform: return "invalid transform";
    case ErrorCode::invalid_rank: return "invalid rank";
    case ErrorCode::invalid_parameter: return "invalid parameter";
    case ErrorCode::degenerate_input: return "degenerate input";
    case ErrorCode::rank_deficiency: return "rank deficiency";
    case ErrorCode::size_limit: return "size limit";
    case ErrorCode::insufficient_data: return "insufficient data";
    case ErrorCode::parse_error: return "parse error";
    case ErrorCode::io_error: return "i/o error";
    }
    return "error";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

    ErrorCode code() const noexcept { return code_; }
    /// The message without the code prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

namespace detail {

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition)
        throw Error(code, what);
}

} // namespace detail
} // namespace tdmd
