#pragma once

#include "canopyforge/raster.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace canopyforge {

inline constexpr double kAsciiNodata = -9999.0;

/// ESRI ASCII grid. Values are written row-major, top row first, with 12
/// significant digits; nodata cells are written as -9999.
void write_ascii_grid(const MetricRaster& r, std::ostream& out);

/// ASCII grids carry no CRS or band label, so the caller supplies them.
/// Throws ParseError naming the first missing or malformed header key.
MetricRaster read_ascii_grid(std::istream& in, int crs_code = kDefaultCrs, std::string band_name = {});

/// Binary raster: little-endian float64 payload (NaN = nodata) plus a text
/// sidecar of "key: value" lines (width, height, origin_x, origin_y,
/// cell_size, crs, band, and meta.* entries). Round trips are bit-exact.
void write_binary(const MetricRaster& r, std::ostream& payload, std::ostream& header);
MetricRaster read_binary(std::istream& payload, std::istream& header);

void save_ascii_grid(const MetricRaster& r, const std::filesystem::path& path);
MetricRaster load_ascii_grid(const std::filesystem::path& path, int crs_code = kDefaultCrs);

/// Writes `<stem>.f64` and `<stem>.hdr`.
void save_binary(const MetricRaster& r, const std::filesystem::path& stem);
/// Accepts the stem, the .f64 path or the .hdr path.
MetricRaster load_binary(const std::filesystem::path& path);

/// Loads .asc as ASCII grid, anything else as a binary raster.
MetricRaster load_raster(const std::filesystem::path& path);

// Building blocks shared with other binary payloads (PAD grids, patches).
using HeaderFields = std::map<std::string, std::string>;

HeaderFields read_header_fields(std::istream& in);
void write_f64_payload(std::span<const double> values, std::ostream& out);
std::vector<double> read_f64_payload(std::istream& in, std::size_t expected_count, const std::string& what);

const std::string& require_field(const HeaderFields& h, const std::string& key);
double field_as_double(const HeaderFields& h, const std::string& key);
std::int64_t field_as_int(const HeaderFields& h, const std::string& key);

/// Shortest text that parses back to exactly `v`.
std::string format_exact(double v);
/// `v` with 12 significant digits.
std::string format_12g(double v);

/// Writes grid fields in the sidecar convention.
void write_grid_fields(const GridSpec& g, std::ostream& header);
GridSpec read_grid_fields(const HeaderFields& h);

std::filesystem::path with_suffix(const std::filesystem::path& stem, const std::string& suffix);

} // namespace canopyforge
