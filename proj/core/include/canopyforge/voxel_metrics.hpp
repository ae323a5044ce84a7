#pragma once

#include "canopyforge/ground.hpp"
#include "canopyforge/raster.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace canopyforge {

/// Beer-Lambert inversion parameters.
struct PadParams {
    double k = 0.5;            ///< extinction coefficient
    double dz = 1.0;           ///< layer thickness (m)
    double max_height = 60.0;  ///< top of the column (m), a multiple of dz

    /// Throws PreconditionError naming the offending parameter.
    void validate() const;
    std::size_t layers() const;
};

/// Return counts per (cell, layer). Layer i covers [i*dz, (i+1)*dz); the
/// top layer also takes hag == max_height. Storage is cell-major.
struct ReturnHistogramGrid {
    GridSpec grid;
    std::size_t layers = 0;
    std::vector<std::uint32_t> counts;
    std::vector<std::uint64_t> total_per_cell;

    std::span<const std::uint32_t> profile(std::size_t cell) const {
        return {counts.data() + cell * layers, layers};
    }
};

/// Plant area density per (cell, layer), cell-major.
struct PadGrid {
    GridSpec grid;
    PadParams params;
    std::size_t layers = 0;
    std::vector<double> pad;
    std::vector<std::uint8_t> saturated;
    std::vector<std::uint64_t> returns_per_cell;

    std::span<const double> profile(std::size_t cell) const { return {pad.data() + cell * layers, layers}; }
    bool has_returns(std::size_t cell) const noexcept { return returns_per_cell[cell] > 0; }
};

ReturnHistogramGrid bin_returns(const HagCloud& hag, const GridSpec& grid, const PadParams& params);

/// With cumulative counts from the top, S_e(i) = returns at or above the
/// layer's lower bound and S_t(i) = returns at or above its upper bound:
///   PAD_i = ln(S_e / S_t) / (k * dz)
/// S_t = 0 with S_e > 0 is clamped to 1 and flagged saturated; S_e = 0 gives 0.
PadGrid compute_pad(const ReturnHistogramGrid& hist, const PadParams& params, int threads = 1);

/// Column sum of PAD; nodata where the cell had no returns.
MetricRaster compute_pai(const PadGrid& pad, int threads = 1);

enum class FhdBasis { pad, returns };

/// Shannon entropy of the vertical PAD distribution; nodata where the cell
/// had no returns.
MetricRaster compute_fhd(const PadGrid& pad, int threads = 1);
/// Same entropy over raw return proportions per layer.
MetricRaster compute_fhd_from_returns(const ReturnHistogramGrid& hist, int threads = 1);

double profile_pai(std::span<const double> profile);
double profile_fhd(std::span<const double> profile);

/// Highest HAG per cell; nodata where no point falls.
MetricRaster compute_chm(const HagCloud& hag, const GridSpec& grid);

inline const std::vector<double> kDefaultPercentiles{0.05, 0.50, 0.95};

/// Per-cell linear-interpolation percentiles (rank (n-1)*p over sorted HAG),
/// one raster per fraction.
std::vector<MetricRaster> compute_percentiles(const HagCloud& hag, const GridSpec& grid,
                                              std::span<const double> fractions, int threads = 1);

/// Percentile of an ascending sequence with rank h = (n-1)*p.
double linear_percentile(std::span<const double> sorted, double p);

/// "p05", "p50", "p95", ... for fractions 0.05, 0.5, 0.95.
std::string percentile_band_name(double fraction);

/// PAD grids use the binary raster conventions with a `layers` field and a
/// cell-major payload; cells without returns are stored as NaN. Saturation
/// flags are not persisted and return counts reload as 0/1 presence.
void save_pad_grid(const PadGrid& pad, const std::filesystem::path& stem);
PadGrid load_pad_grid(const std::filesystem::path& path);

} // namespace canopyforge
