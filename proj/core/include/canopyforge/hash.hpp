#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace canopyforge {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Digest of a file's contents; throws IoError when unreadable.
std::uint64_t hash_file(const std::filesystem::path& path);

/// 16 lowercase hex digits.
std::string to_hex(std::uint64_t v);

} // namespace canopyforge
