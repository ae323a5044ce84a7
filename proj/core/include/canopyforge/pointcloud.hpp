#pragma once

#include "canopyforge/raster.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace canopyforge {

inline constexpr std::uint8_t kGroundClass = 2;
inline constexpr std::uint8_t kUnclassified = 1;

struct PointRecord {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    std::uint8_t classification = kUnclassified;
    std::uint8_t return_number = 1;
    std::optional<std::uint16_t> intensity;
};

struct PointCloud {
    std::vector<PointRecord> points;
    Bounds bounds;
    int crs_code = kDefaultCrs;

    bool empty() const noexcept { return points.empty(); }
    std::size_t size() const noexcept { return points.size(); }
};

/// Tight bounds of `points`; throws PreconditionError on an empty range.
Bounds compute_bounds(const std::vector<PointRecord>& points);

/// Whitespace separated "x y z [classification]" lines; '#' starts a comment
/// line. Throws ParseError with the line number on malformed input and
/// InputError when no points are present.
PointCloud parse_xyz_text(std::istream& in, int crs_code = kDefaultCrs);
PointCloud parse_xyz_text(std::string_view text, int crs_code = kDefaultCrs);

/// Writes "x y z classification" with 12 significant digits.
void write_xyz_text(const PointCloud& cloud, std::ostream& out);

/// Points per square metre over the bounding box.
double point_density(const PointCloud& cloud);
double point_density(std::size_t point_count, const Bounds& bounds);

} // namespace canopyforge
