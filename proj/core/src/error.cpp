#include "canopyforge/error.hpp"

namespace canopyforge {

ParseError::ParseError(const std::string& field, std::uint64_t offset, const std::string& what)
    : InputError(what + " (field '" + field + "' at byte offset " + std::to_string(offset) + ")"),
      field_(field) {}

ParseError::ParseError(const std::string& what, std::size_t line)
    : InputError(what + " at line " + std::to_string(line)), line_(line) {}

TruncationError::TruncationError(const std::string& what, std::uint64_t expected_bytes,
                                 std::uint64_t actual_bytes)
    : InputError(what + ": expected " + std::to_string(expected_bytes) + " bytes, got " +
                 std::to_string(actual_bytes)),
      expected_(expected_bytes), actual_(actual_bytes) {}

} // namespace canopyforge
