#include "canopyforge/raster.hpp"

#include "canopyforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace canopyforge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool near_integer(double v) {
    return std::abs(v - std::round(v)) <= 1e-9 * std::max(1.0, std::abs(v));
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

} // namespace

std::optional<CellIndex> GridSpec::locate(double x, double y) const noexcept {
    const double fc = (x - origin_x) / cell_size;
    const double fr = (origin_y - y) / cell_size;
    if (!(fc >= 0.0) || !(fr >= 0.0)) return std::nullopt;
    auto col = static_cast<std::int64_t>(std::floor(fc));
    auto row = static_cast<std::int64_t>(std::floor(fr));
    if (col >= width) {
        if (x <= max_x()) col = width - 1;
        else return std::nullopt;
    }
    if (row >= height) {
        if (y >= min_y()) row = height - 1;
        else return std::nullopt;
    }
    return CellIndex{row, col};
}

void GridSpec::validate() const {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size))
        throw PreconditionError("grid cell_size must be > 0, got " + fmt(cell_size));
    if (width < 1 || height < 1)
        throw PreconditionError("grid width and height must be >= 1, got " + std::to_string(width) +
                                "x" + std::to_string(height));
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y))
        throw PreconditionError("grid origin must be finite");
}

GridSpec GridSpec::covering(const Bounds& b, double cell_size, int crs_code) {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size))
        throw PreconditionError("cell_size must be > 0, got " + fmt(cell_size));
    GridSpec g;
    g.cell_size = cell_size;
    g.crs_code = crs_code;
    g.origin_x = std::floor(b.min_x / cell_size) * cell_size;
    g.origin_y = std::ceil(b.max_y / cell_size) * cell_size;
    while (g.origin_x > b.min_x) g.origin_x -= cell_size;
    while (g.origin_y < b.max_y) g.origin_y += cell_size;
    g.width = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil((b.max_x - g.origin_x) / cell_size)));
    g.height = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil((g.origin_y - b.min_y) / cell_size)));
    while (g.max_x() < b.max_x) ++g.width;
    while (g.min_y() > b.min_y) ++g.height;
    return g;
}

bool alignment_compatible(const GridSpec& a, const GridSpec& b) {
    if (a.crs_code != b.crs_code) return false;
    const double coarse = std::max(a.cell_size, b.cell_size);
    const double fine = std::min(a.cell_size, b.cell_size);
    if (!near_integer(coarse / fine)) return false;
    return near_integer((a.origin_x - b.origin_x) / coarse) &&
           near_integer((a.origin_y - b.origin_y) / coarse);
}

MetricRaster::MetricRaster(GridSpec g, std::string band)
    : grid(g), values(g.cell_count(), kNaN), nodata(g.cell_count(), 1), band_name(std::move(band)) {}

void MetricRaster::set(std::size_t i, double v) noexcept {
    values[i] = v;
    nodata[i] = 0;
}

void MetricRaster::set_nodata(std::size_t i) noexcept {
    values[i] = kNaN;
    nodata[i] = 1;
}

std::size_t MetricRaster::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(nodata.begin(), nodata.end(), std::uint8_t{0}));
}

void MetricRaster::validate() const {
    grid.validate();
    if (values.size() != grid.cell_count() || nodata.size() != grid.cell_count())
        throw PreconditionError("raster '" + band_name + "' array size does not match its grid");
    for (std::size_t i = 0; i < values.size(); ++i)
        if (nodata[i] == 0 && !std::isfinite(values[i]))
            throw PreconditionError("raster '" + band_name + "' has a non-finite valid value at cell " +
                                    std::to_string(i));
}

MaskRaster::MaskRaster(GridSpec g, bool fill)
    : grid(g), valid(g.cell_count(), fill ? std::uint8_t{1} : std::uint8_t{0}) {}

std::size_t MaskRaster::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

std::string to_string(ResampleMethod m) {
    return m == ResampleMethod::nearest ? "nearest" : "bilinear";
}

ResampleMethod parse_resample_method(const std::string& s) {
    if (s == "nearest") return ResampleMethod::nearest;
    if (s == "bilinear") return ResampleMethod::bilinear;
    throw PreconditionError("unknown resample method '" + s + "' (expected nearest|bilinear)");
}

MetricRaster align_to_reference(const MetricRaster& src, const GridSpec& ref) {
    src.grid.validate();
    ref.validate();
    if (src.grid.crs_code != ref.crs_code)
        throw AlignmentError("CRS mismatch: source EPSG:" + std::to_string(src.grid.crs_code) +
                             " vs reference EPSG:" + std::to_string(ref.crs_code));
    const double coarse = std::max(src.grid.cell_size, ref.cell_size);
    const double fine = std::min(src.grid.cell_size, ref.cell_size);
    const double ratio = coarse / fine;
    if (!near_integer(ratio))
        throw AlignmentError("cell sizes " + fmt(src.grid.cell_size) + " and " + fmt(ref.cell_size) +
                             " do not have an integer ratio");
    const double ox = (ref.origin_x - src.grid.origin_x) / coarse;
    const double oy = (src.grid.origin_y - ref.origin_y) / coarse;
    if (!near_integer(ox) || !near_integer(oy)) {
        const double rx = (ox - std::round(ox)) * coarse;
        const double ry = (oy - std::round(oy)) * coarse;
        throw AlignmentError("grid origins are not aligned: residual offset (" + fmt(rx) + ", " + fmt(ry) +
                             ") m against a " + fmt(coarse) + " m lattice");
    }

    // Work in units of the finer cell so all index arithmetic is integral.
    const auto f = static_cast<std::int64_t>(std::llround(ratio));
    const std::int64_t dx_fine = std::llround((ref.origin_x - src.grid.origin_x) / fine);
    const std::int64_t dy_fine = std::llround((src.grid.origin_y - ref.origin_y) / fine);

    MetricRaster out(ref, src.band_name);
    out.metadata = src.metadata;
    const bool src_is_finer = src.grid.cell_size < ref.cell_size && f > 1;

    for (std::int64_t r = 0; r < ref.height; ++r) {
        for (std::int64_t c = 0; c < ref.width; ++c) {
            const std::size_t o = ref.flat(r, c);
            if (!src_is_finer) {
                // ref cell is the same size or finer: copy the containing source cell
                const std::int64_t sc = floor_div(c + dx_fine, f);
                const std::int64_t sr = floor_div(r + dy_fine, f);
                if (sc < 0 || sr < 0 || sc >= src.grid.width || sr >= src.grid.height) continue;
                const std::size_t i = src.grid.flat(sr, sc);
                if (src.is_valid(i)) out.set(o, src.values[i]);
            } else {
                double sum = 0.0;
                std::size_t n = 0;
                for (std::int64_t br = 0; br < f; ++br) {
                    const std::int64_t sr = r * f + dy_fine + br;
                    if (sr < 0 || sr >= src.grid.height) continue;
                    for (std::int64_t bc = 0; bc < f; ++bc) {
                        const std::int64_t sc = c * f + dx_fine + bc;
                        if (sc < 0 || sc >= src.grid.width) continue;
                        const std::size_t i = src.grid.flat(sr, sc);
                        if (!src.is_valid(i)) continue;
                        sum += src.values[i];
                        ++n;
                    }
                }
                if (n > 0) out.set(o, sum / static_cast<double>(n));
            }
        }
    }
    return out;
}

namespace {

// Interpolates between cell centres at fractional centre coordinates (u, v),
// where (0, 0) is the centre of cell (0, 0). Nodata neighbours are dropped and
// the remaining weights renormalised.
std::optional<double> bilinear_at(const MetricRaster& src, double u, double v) {
    const GridSpec& g = src.grid;
    u = std::clamp(u, 0.0, static_cast<double>(g.width - 1));
    v = std::clamp(v, 0.0, static_cast<double>(g.height - 1));
    const auto c0 = static_cast<std::int64_t>(std::floor(u));
    const auto r0 = static_cast<std::int64_t>(std::floor(v));
    const std::int64_t c1 = std::min(c0 + 1, g.width - 1);
    const std::int64_t r1 = std::min(r0 + 1, g.height - 1);
    const double t = u - static_cast<double>(c0);
    const double s = v - static_cast<double>(r0);

    const std::size_t idx[4] = {g.flat(r0, c0), g.flat(r0, c1), g.flat(r1, c0), g.flat(r1, c1)};
    const double w[4] = {(1.0 - t) * (1.0 - s), t * (1.0 - s), (1.0 - t) * s, t * s};

    double total = 0.0;
    int base = -1;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int k = 0; k < 4; ++k) {
        if (!src.is_valid(idx[k]) || w[k] <= 0.0) continue;
        total += w[k];
        if (base < 0) base = k;
        lo = std::min(lo, src.values[idx[k]]);
        hi = std::max(hi, src.values[idx[k]]);
    }
    if (base < 0 || total <= 0.0) return std::nullopt;

    // Offsets from one contributing value keep constant fields exact.
    const double ref = src.values[idx[base]];
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (!src.is_valid(idx[k]) || w[k] <= 0.0 || k == base) continue;
        acc += (w[k] / total) * (src.values[idx[k]] - ref);
    }
    return std::clamp(ref + acc, lo, hi);
}

} // namespace

std::optional<double> bilinear_sample(const MetricRaster& src, double x, double y) {
    if (!src.grid.locate(x, y)) return std::nullopt;
    const double u = (x - src.grid.origin_x) / src.grid.cell_size - 0.5;
    const double v = (src.grid.origin_y - y) / src.grid.cell_size - 0.5;
    return bilinear_at(src, u, v);
}

MetricRaster block_downsample(const MetricRaster& src, int factor, BlockStatistic stat) {
    if (factor < 1) throw PreconditionError("block_downsample factor must be >= 1");
    GridSpec g = src.grid;
    g.cell_size = src.grid.cell_size * factor;
    g.width = (src.grid.width + factor - 1) / factor;
    g.height = (src.grid.height + factor - 1) / factor;
    MetricRaster out(g, src.band_name);
    out.metadata = src.metadata;

    std::vector<double> block;
    block.reserve(static_cast<std::size_t>(factor) * static_cast<std::size_t>(factor));
    for (std::int64_t r = 0; r < g.height; ++r) {
        for (std::int64_t c = 0; c < g.width; ++c) {
            block.clear();
            for (std::int64_t sr = r * factor; sr < std::min((r + 1) * factor, src.grid.height); ++sr)
                for (std::int64_t sc = c * factor; sc < std::min((c + 1) * factor, src.grid.width); ++sc) {
                    const std::size_t i = src.grid.flat(sr, sc);
                    if (src.is_valid(i)) block.push_back(src.values[i]);
                }
            if (block.empty()) continue;
            double v = 0.0;
            if (stat == BlockStatistic::mean) {
                for (double x : block) v += x;
                v /= static_cast<double>(block.size());
            } else {
                std::sort(block.begin(), block.end());
                std::size_t best_run = 0;
                for (std::size_t i = 0; i < block.size();) {
                    std::size_t j = i;
                    while (j < block.size() && block[j] == block[i]) ++j;
                    if (j - i > best_run) {
                        best_run = j - i;
                        v = block[i];
                    }
                    i = j;
                }
            }
            out.set(g.flat(r, c), v);
        }
    }
    return out;
}

MetricRaster resample(const MetricRaster& src, double target_cell, ResampleMethod method) {
    src.grid.validate();
    if (!(target_cell > 0.0) || !std::isfinite(target_cell))
        throw PreconditionError("resample target cell must be > 0, got " + fmt(target_cell));
    const double ratio = src.grid.cell_size / target_cell;

    MetricRaster out;
    if (near_integer(ratio) && std::llround(ratio) >= 1) {
        const auto f = std::llround(ratio);
        GridSpec g = src.grid;
        g.cell_size = target_cell;
        g.width = src.grid.width * f;
        g.height = src.grid.height * f;
        out = MetricRaster(g, src.band_name);
        const double inv = 1.0 / static_cast<double>(f);
        for (std::int64_t r = 0; r < g.height; ++r) {
            for (std::int64_t c = 0; c < g.width; ++c) {
                const std::size_t coarse = src.grid.flat(r / f, c / f);
                if (!src.is_valid(coarse)) continue;
                const std::size_t o = g.flat(r, c);
                if (method == ResampleMethod::nearest || f == 1) {
                    out.set(o, src.values[coarse]);
                } else {
                    const double u = (static_cast<double>(c) + 0.5) * inv - 0.5;
                    const double v = (static_cast<double>(r) + 0.5) * inv - 0.5;
                    if (auto val = bilinear_at(src, u, v)) out.set(o, *val);
                }
            }
        }
    } else if (near_integer(1.0 / ratio)) {
        const auto f = static_cast<int>(std::llround(1.0 / ratio));
        out = block_downsample(src, f, method == ResampleMethod::nearest ? BlockStatistic::mode
                                                                          : BlockStatistic::mean);
    } else {
        throw PreconditionError("resample requires an integer ratio between cell sizes; " +
                                fmt(src.grid.cell_size) + " -> " + fmt(target_cell) + " is a factor of " +
                                fmt(ratio));
    }
    out.metadata = src.metadata;
    out.metadata["resample_method"] = to_string(method);
    out.metadata["resample_source_cell"] = fmt(src.grid.cell_size);
    return out;
}

MaskRaster build_validity_mask(std::span<const MetricRaster> rasters) {
    if (rasters.empty()) throw PreconditionError("build_validity_mask needs at least one raster");
    const GridSpec& g = rasters.front().grid;
    MaskRaster mask(g, true);
    for (const auto& r : rasters) {
        if (!(r.grid == g))
            throw GridMismatchError("validity mask: raster '" + r.band_name + "' is on a different grid than '" +
                                    rasters.front().band_name + "'");
        if (r.values.size() != g.cell_count() || r.nodata.size() != g.cell_count())
            throw GridMismatchError("validity mask: raster '" + r.band_name + "' array size mismatch");
        for (std::size_t i = 0; i < mask.valid.size(); ++i)
            if (r.nodata[i] != 0 || !std::isfinite(r.values[i])) mask.valid[i] = 0;
    }
    return mask;
}

} // namespace canopyforge
