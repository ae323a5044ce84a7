#pragma once

#include "canopyforge/pointcloud.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>

namespace canopyforge {

/// Public header block fields used by the reader (LAS 1.2 - 1.4).
struct LasHeader {
    std::uint8_t version_major = 1;
    std::uint8_t version_minor = 2;
    std::uint16_t header_size = 0;
    std::uint32_t offset_to_point_data = 0;
    std::uint32_t number_of_vlrs = 0;
    std::uint8_t point_format = 0;
    std::uint16_t point_record_length = 0;
    std::uint32_t legacy_point_count = 0;
    std::uint64_t extended_point_count = 0;
    std::array<double, 3> scale{1.0, 1.0, 1.0};
    std::array<double, 3> offset{0.0, 0.0, 0.0};
    double max_x = 0.0, min_x = 0.0;
    double max_y = 0.0, min_y = 0.0;
    double max_z = 0.0, min_z = 0.0;

    /// Extended count for 1.4 files that set it, legacy count otherwise.
    std::uint64_t point_count() const noexcept;
};

/// Parses the header; throws ParseError naming the offending field and offset.
LasHeader parse_las_header(std::span<const std::byte> blob);

/// Uncompressed LAS 1.2-1.4 with point formats 0, 1, 6 or 7. The CRS comes
/// from a GeoKeyDirectory VLR when present, otherwise `default_crs`.
/// LAZ-compressed data is rejected with UnsupportedFormatError.
PointCloud parse_las(std::span<const std::byte> blob, int default_crs = kDefaultCrs);

PointCloud read_las_file(const std::filesystem::path& path, int default_crs = kDefaultCrs);

/// Reads LAS when the file starts with "LASF", XYZ text otherwise.
PointCloud read_point_cloud(const std::filesystem::path& path, int default_crs = kDefaultCrs);

} // namespace canopyforge
