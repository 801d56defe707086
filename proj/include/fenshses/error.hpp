/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <stdexcept>
#include <string>

namespace fenshses {

// Failure categories map onto CLI exit codes and HTTP statuses, so each
// gets its own type instead of an error-code enum.

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Base for everything that means "the input data is bad" (CLI exit 2).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : DataError {
    using DataError::DataError;
};

struct CorruptionError : DataError {
    using DataError::DataError;
};

struct EmptyInputError : DataError {
    using DataError::DataError;
};

struct ParseError : DataError {
    using DataError::DataError;
};

struct InsufficientDataError : DataError {
    using DataError::DataError;
};

struct IoError : DataError {
    using DataError::DataError;
};

struct NotReadyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised by the benchmark when two strategies disagree on a query.
struct CorrectnessError : std::runtime_error {
    CorrectnessError(const std::string& what, size_t query_index, int radius)
            : std::runtime_error(what), query_index(query_index), radius(radius) {}
    size_t query_index;
    int radius;
};

}  // namespace fenshses
