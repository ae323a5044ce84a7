#pragma once

#include "canopyforge/raster.hpp"
#include "canopyforge/voxel_metrics.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace canopyforge {

inline constexpr std::int64_t kPatchSize = 224;

/// Layer-major (layer, row, col) profile block; NaN marks nodata.
struct ProfileArray {
    std::size_t layers = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;

    ProfileArray() = default;
    ProfileArray(std::size_t l, std::size_t h, std::size_t w);

    double& at(std::size_t l, std::size_t r, std::size_t c) { return values[(l * height + r) * width + c]; }
    double at(std::size_t l, std::size_t r, std::size_t c) const { return values[(l * height + r) * width + c]; }
};

struct Patch {
    std::string tile_id;
    std::int64_t row0 = 0;
    std::int64_t col0 = 0;
    std::int64_t size = kPatchSize;
    GridSpec grid; ///< georeferencing of the patch window
    std::map<std::string, std::vector<double>> channels; ///< size x size, row-major, NaN = nodata
    std::vector<std::uint8_t> valid;
    double valid_fraction = 0.0;
    std::optional<ProfileArray> pad_profile;
    int pad_factor = 0;

    std::size_t valid_count() const noexcept;
};

struct PatchSet {
    std::vector<Patch> patches;
    GridSpec source_grid;
    std::int64_t patch_size = kPatchSize;
    std::int64_t stride = kPatchSize;
    double min_valid_fraction = 0.0;
};

/// Co-registered bands of one tile plus their validity mask.
struct TileRasters {
    std::string tile_id;
    std::map<std::string, MetricRaster> bands;
    MaskRaster mask;
};

/// Windows at (i*stride, j*stride) that fit entirely inside the tile; partial
/// windows at the edges are dropped.
PatchSet extract_patches(const TileRasters& tile, std::int64_t patch_size = kPatchSize,
                         std::int64_t stride = kPatchSize);

/// Keeps patches whose valid fraction is >= the threshold, in order.
PatchSet filter_patches(const PatchSet& set, double min_valid_fraction);

/// Keeps patches where at least `min_fraction` of pixels have `band` > min_height.
PatchSet filter_forest_patches(const PatchSet& set, const std::string& band, double min_height,
                               double min_fraction);

/// Block mean over factor x factor pixels per layer, ignoring NaN; an
/// all-NaN block yields NaN.
ProfileArray reduce_profile_array(const ProfileArray& profiles, int factor);

/// PAD profiles sampled (nearest PAD cell) onto every pixel of `window`.
/// Pixels outside the PAD grid or over cells without returns are NaN.
ProfileArray sample_pad_profiles(const PadGrid& pad, const GridSpec& window);

/// reduce_profile_array(sample_pad_profiles(pad, window), factor) without
/// materialising the full-resolution block.
ProfileArray reduce_pad_profiles(const PadGrid& pad, const GridSpec& window, int factor);

void attach_pad_profiles(PatchSet& set, const PadGrid& pad, int factor);

struct PatchManifestEntry {
    std::string tile_id;
    std::int64_t row0 = 0;
    std::int64_t col0 = 0;
    double valid_fraction = 0.0;
};

void write_patch_manifest(const PatchSet& set, std::ostream& out);
std::vector<PatchManifestEntry> read_patch_manifest(std::istream& in);

/// Writes manifest.csv and one binary raster per channel named
/// "<tile>_<row0>_<col0>_<band>", plus "valid" and, when present, "pad".
void write_patch_set(const PatchSet& set, const std::filesystem::path& dir);

} // namespace canopyforge
