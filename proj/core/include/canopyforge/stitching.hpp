#pragma once

#include "canopyforge/raster.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace canopyforge {

inline constexpr std::int64_t kWindowSize = 224;
inline constexpr std::int64_t kDefaultOverlap = 32;
inline constexpr double kWeightFloor = 1e-3;

struct WindowPlan {
    std::vector<CellIndex> windows; ///< top-left (row0, col0), row-major order
    std::int64_t window_size = kWindowSize;
    std::int64_t overlap = kDefaultOverlap;
    std::int64_t height = 0;
    std::int64_t width = 0;
};

/// Offsets 0, stride, 2*stride, ... per axis with the last one clamped to
/// dim - window, so every pixel is covered.
WindowPlan plan_windows(std::int64_t height, std::int64_t width, std::int64_t window = kWindowSize,
                        std::int64_t overlap = kDefaultOverlap);

std::vector<std::int64_t> axis_offsets(std::int64_t dim, std::int64_t window, std::int64_t overlap);

enum class BlendMode { hann, uniform };

std::string to_string(BlendMode m);
BlendMode parse_blend_mode(const std::string& s);

/// window x window weights: separable raised cosine floored at kWeightFloor,
/// symmetric bit-for-bit under flips; all ones for uniform.
std::vector<double> window_weight(std::int64_t window, BlendMode mode = BlendMode::hann);

/// Per-pixel total weight over every window covering it.
std::vector<double> accumulated_weights(const WindowPlan& plan, BlendMode mode = BlendMode::hann);

/// Weighted blend of one window_size^2 row-major array per planned window
/// onto `grid` (height x width of the plan). NaN window values are skipped;
/// a pixel with no finite contributor is nodata. The result is independent
/// of `threads`.
MetricRaster blend_stitch(const WindowPlan& plan, std::span<const std::vector<double>> preds, const GridSpec& grid,
                          BlendMode mode = BlendMode::hann, int threads = 1, std::string band = "value");

void write_plan_csv(const WindowPlan& plan, std::ostream& out);

/// Reads "row0,col0" rows; window size and overlap come from `shape`. A
/// zero height or width in `shape` is derived from the furthest window.
WindowPlan read_plan_csv(std::istream& in, const WindowPlan& shape);

} // namespace canopyforge
