#pragma once

#include "canopyforge/pointcloud.hpp"
#include "canopyforge/raster.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace canopyforge {

/// Per-cell ground elevation. Observed cells hold the lowest ground return
/// in the cell; the rest are filled by inverse-distance weighting.
struct GroundGrid {
    GridSpec grid;
    std::vector<double> elevation;
    std::vector<std::uint8_t> filled; ///< 1 = interpolated, 0 = observed
    /// Set when the cloud had no class-2 points and every return was used.
    bool used_all_points = false;

    double at(std::int64_t row, std::int64_t col) const { return elevation[grid.flat(row, col)]; }
    MetricRaster to_raster(const std::string& band = "dtm") const;
};

struct GroundParams {
    double cell_size = 1.0;
    std::size_t neighbors = 8;
    double idw_power = 2.0;
};

GroundGrid build_ground_grid(const PointCloud& cloud, const GroundParams& params = {}, int threads = 1);

/// Ground grid on an explicit lattice (must cover the cloud).
GroundGrid build_ground_grid(const PointCloud& cloud, const GridSpec& grid, const GroundParams& params = {},
                             int threads = 1);

/// Bilinear interpolation of ground elevation between cell centres; outside
/// the centre lattice the nearest edge centre is used.
double ground_elevation_at(const GroundGrid& ground, double x, double y);

struct HagPoint {
    double x = 0.0;
    double y = 0.0;
    double hag = 0.0;
};

struct HagCloud {
    std::vector<HagPoint> points;
    Bounds source_bounds;
    int crs_code = kDefaultCrs;
    double max_height = 60.0;
    std::size_t clamped_count = 0; ///< negative heights raised to 0
    std::size_t dropped_count = 0; ///< points above max_height removed
};

inline constexpr double kDefaultMaxHeight = 60.0;

/// Height above ground for every point. Throws CoverageError for points
/// outside the ground grid.
HagCloud compute_hag(const PointCloud& cloud, const GroundGrid& ground, double max_height = kDefaultMaxHeight);

} // namespace canopyforge
