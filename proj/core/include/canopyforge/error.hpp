#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace canopyforge {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Problems with input data: unreadable, malformed, truncated or unsupported.
class InputError : public Error {
public:
    using Error::Error;
};

class ParseError : public InputError {
public:
    /// Binary formats report the field name and its byte offset.
    ParseError(const std::string& field, std::uint64_t offset, const std::string& what);
    /// Text formats report a 1-based line number (0 when not line-bound).
    ParseError(const std::string& what, std::size_t line);
    explicit ParseError(const std::string& what) : InputError(what) {}

    const std::string& field() const noexcept { return field_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string field_;
    std::size_t line_ = 0;
};

class TruncationError : public InputError {
public:
    TruncationError(const std::string& what, std::uint64_t expected_bytes, std::uint64_t actual_bytes);

    std::uint64_t expected_bytes() const noexcept { return expected_; }
    std::uint64_t actual_bytes() const noexcept { return actual_; }

private:
    std::uint64_t expected_;
    std::uint64_t actual_;
};

class UnsupportedFormatError : public InputError {
public:
    using InputError::InputError;
};

class IoError : public InputError {
public:
    using InputError::InputError;
};

/// Numeric or precondition violations (bad parameters, mismatched grids, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

class CoverageError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class AlignmentError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class GridMismatchError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

} // namespace canopyforge
