#pragma once

#include <stdexcept>
#include <string>

namespace vsf {

/// Base for file-format problems.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct bad_header_error : parse_error {
    using parse_error::parse_error;
};

struct dimension_mismatch_error : parse_error {
    using parse_error::parse_error;
};

struct bad_cell_error : parse_error {
    using parse_error::parse_error;
};

/// Raised when the long-run variance estimate vanishes (e.g. constant field):
/// the rescaled-variance statistic is undefined there, and a silent infinity
/// would poison Monte Carlo aggregation downstream.
struct degenerate_field_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace vsf
