#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace canopyforge {

inline constexpr int kDefaultCrs = 25833;

/// Axis-aligned bounding rectangle in projected metres.
struct Bounds {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    double width() const noexcept { return max_x - min_x; }
    double height() const noexcept { return max_y - min_y; }
    double area() const noexcept { return width() * height(); }
    bool contains(double x, double y) const noexcept {
        return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
    }
    bool operator==(const Bounds&) const = default;
};

/// Row/column address of a grid cell. Rows run top to bottom.
struct CellIndex {
    std::int64_t row = 0;
    std::int64_t col = 0;
    bool operator==(const CellIndex&) const = default;
};

/// Georeferenced regular grid. The origin is the top-left corner of cell
/// (0, 0); row r spans y in [origin_y - (r+1)*cell_size, origin_y - r*cell_size].
struct GridSpec {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double cell_size = 1.0;
    std::int64_t width = 1;
    std::int64_t height = 1;
    int crs_code = kDefaultCrs;

    std::size_t cell_count() const noexcept {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    std::size_t flat(std::int64_t row, std::int64_t col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(col);
    }
    double max_x() const noexcept { return origin_x + static_cast<double>(width) * cell_size; }
    double min_y() const noexcept { return origin_y - static_cast<double>(height) * cell_size; }
    Bounds extent() const noexcept { return {origin_x, min_y(), max_x(), origin_y}; }
    double center_x(std::int64_t col) const noexcept {
        return origin_x + (static_cast<double>(col) + 0.5) * cell_size;
    }
    double center_y(std::int64_t row) const noexcept {
        return origin_y - (static_cast<double>(row) + 0.5) * cell_size;
    }

    /// Cell containing (x, y). The right and bottom outer edges belong to the
    /// last column/row; points outside the extent yield nullopt.
    std::optional<CellIndex> locate(double x, double y) const noexcept;

    /// Throws PreconditionError unless cell_size > 0 and width, height >= 1.
    void validate() const;

    /// Smallest grid snapped to multiples of `cell_size` that encloses `b`.
    static GridSpec covering(const Bounds& b, double cell_size, int crs_code = kDefaultCrs);

    bool operator==(const GridSpec&) const = default;
};

/// True when `a` and `b` can be aligned without interpolation: same CRS,
/// integer cell-size ratio and origins offset by a whole number of the
/// coarser cells.
bool alignment_compatible(const GridSpec& a, const GridSpec& b);

/// A single float64 band. Nodata cells are flagged in `nodata` and hold NaN.
struct MetricRaster {
    GridSpec grid;
    std::vector<double> values;
    std::vector<std::uint8_t> nodata;
    std::string band_name;
    /// Free-form provenance carried through the binary sidecar (e.g. resample method).
    std::map<std::string, std::string> metadata;

    MetricRaster() = default;
    MetricRaster(GridSpec g, std::string band);

    double at(std::int64_t row, std::int64_t col) const { return values[grid.flat(row, col)]; }
    bool is_valid(std::size_t i) const noexcept { return nodata[i] == 0; }
    void set(std::size_t i, double v) noexcept;
    void set_nodata(std::size_t i) noexcept;
    std::size_t valid_count() const noexcept;

    /// Dimensions match the grid, and every valid value is finite.
    void validate() const;
};

struct MaskRaster {
    GridSpec grid;
    std::vector<std::uint8_t> valid;

    MaskRaster() = default;
    MaskRaster(GridSpec g, bool fill);

    std::size_t valid_count() const noexcept;
};

enum class ResampleMethod { nearest, bilinear };

std::string to_string(ResampleMethod m);
ResampleMethod parse_resample_method(const std::string& s);

/// Places `src` on `ref`. Equal cell sizes shift/crop/pad only; a coarser
/// source is copied per containing cell; a finer source is block-averaged
/// over valid cells. Reference cells not covered by the source are nodata.
MetricRaster align_to_reference(const MetricRaster& src, const GridSpec& ref);

/// Resamples to `target_cell`, which must be an integer fraction or multiple
/// of the source cell size. Refinement uses `method`; coarsening aggregates
/// blocks (mode for nearest, valid-mean for bilinear).
MetricRaster resample(const MetricRaster& src, double target_cell, ResampleMethod method);

/// Nodata-aware bilinear interpolation between cell centres at (x, y).
/// Returns nullopt when no valid neighbour carries weight or the point lies
/// outside the grid.
std::optional<double> bilinear_sample(const MetricRaster& src, double x, double y);

enum class BlockStatistic { mean, mode };

/// Aggregates factor x factor blocks into one cell. Nodata cells are ignored;
/// an all-nodata block is nodata. Mode breaks ties toward the smaller value.
MetricRaster block_downsample(const MetricRaster& src, int factor, BlockStatistic stat);

/// Conjunction of per-raster validity and finiteness.
MaskRaster build_validity_mask(std::span<const MetricRaster> rasters);

} // namespace canopyforge
