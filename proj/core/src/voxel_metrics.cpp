#include "canopyforge/voxel_metrics.hpp"

#include "canopyforge/error.hpp"
#include "canopyforge/parallel.hpp"
#include "canopyforge/raster_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace canopyforge {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

std::size_t cell_of(const GridSpec& grid, const HagPoint& p) {
    const auto cell = grid.locate(p.x, p.y);
    if (!cell)
        throw CoverageError("point (" + fmt(p.x) + ", " + fmt(p.y) + ") lies outside the metric grid");
    return grid.flat(cell->row, cell->col);
}

std::size_t layer_of(double hag, double dz, std::size_t layers) {
    auto i = static_cast<std::int64_t>(std::floor(hag / dz));
    // Boundaries are i*dz exactly as multiplied, so nudge the quotient onto them.
    while (i > 0 && static_cast<double>(i) * dz > hag) --i;
    while (static_cast<double>(i + 1) * dz <= hag) ++i;
    return std::min(static_cast<std::size_t>(std::max<std::int64_t>(i, 0)), layers - 1);
}

double entropy_of(std::span<const double> weights) {
    double total = 0.0;
    std::size_t nonzero = 0;
    for (double w : weights) {
        total += w;
        if (w > 0.0) ++nonzero;
    }
    if (!(total > 0.0) || nonzero <= 1) return 0.0;
    double h = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) continue;
        const double p = w / total;
        h -= p * std::log(p);
    }
    return h;
}

} // namespace

void PadParams::validate() const {
    if (!(k > 0.0) || !std::isfinite(k)) throw PreconditionError("k (extinction coefficient) must be > 0, got " + fmt(k));
    if (!(dz > 0.0) || !std::isfinite(dz)) throw PreconditionError("dz (layer thickness) must be > 0, got " + fmt(dz));
    if (!(max_height > 0.0) || !std::isfinite(max_height))
        throw PreconditionError("max_height must be > 0, got " + fmt(max_height));
    const double n = max_height / dz;
    if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n) || std::round(n) < 1.0)
        throw PreconditionError("max_height (" + fmt(max_height) + ") must be a positive multiple of dz (" +
                                fmt(dz) + ")");
}

std::size_t PadParams::layers() const {
    validate();
    return static_cast<std::size_t>(std::llround(max_height / dz));
}

ReturnHistogramGrid bin_returns(const HagCloud& hag, const GridSpec& grid, const PadParams& params) {
    grid.validate();
    ReturnHistogramGrid h;
    h.grid = grid;
    h.layers = params.layers();
    h.counts.assign(grid.cell_count() * h.layers, 0);
    h.total_per_cell.assign(grid.cell_count(), 0);
    for (const auto& p : hag.points) {
        if (p.hag > params.max_height || !(p.hag >= 0.0))
            throw CoverageError("height above ground " + fmt(p.hag) + " is outside [0, " + fmt(params.max_height) +
                                "]");
        const std::size_t cell = cell_of(grid, p);
        ++h.counts[cell * h.layers + layer_of(p.hag, params.dz, h.layers)];
        ++h.total_per_cell[cell];
    }
    return h;
}

PadGrid compute_pad(const ReturnHistogramGrid& hist, const PadParams& params, int threads) {
    const std::size_t layers = params.layers();
    if (hist.layers != layers)
        throw PreconditionError("histogram has " + std::to_string(hist.layers) + " layers but parameters imply " +
                                std::to_string(layers));
    PadGrid out;
    out.grid = hist.grid;
    out.params = params;
    out.layers = layers;
    const std::size_t cells = hist.grid.cell_count();
    out.pad.assign(cells * layers, 0.0);
    out.saturated.assign(cells * layers, 0);
    out.returns_per_cell = hist.total_per_cell;

    const double scale = params.k * params.dz;
    parallel_for(cells, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            if (hist.total_per_cell[c] == 0) continue;
            const std::uint32_t* counts = hist.counts.data() + c * layers;
            std::uint64_t above = 0; // returns at or above the current layer's upper bound
            for (std::size_t i = layers; i-- > 0;) {
                const std::uint64_t s_t_raw = above;
                const std::uint64_t s_e = above + counts[i];
                above = s_e;
                if (s_e == 0) continue;
                std::uint64_t s_t = s_t_raw;
                if (s_t == 0) {
                    s_t = 1;
                    out.saturated[c * layers + i] = 1;
                }
                out.pad[c * layers + i] =
                    std::log(static_cast<double>(s_e) / static_cast<double>(s_t)) / scale;
            }
        }
    });
    return out;
}

double profile_pai(std::span<const double> profile) {
    double sum = 0.0;
    for (double v : profile) sum += v;
    return sum;
}

double profile_fhd(std::span<const double> profile) { return entropy_of(profile); }

MetricRaster compute_pai(const PadGrid& pad, int threads) {
    MetricRaster r(pad.grid, "pai");
    parallel_for(pad.grid.cell_count(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c)
            if (pad.has_returns(c)) r.set(c, profile_pai(pad.profile(c)));
    });
    return r;
}

MetricRaster compute_fhd(const PadGrid& pad, int threads) {
    MetricRaster r(pad.grid, "fhd");
    parallel_for(pad.grid.cell_count(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c)
            if (pad.has_returns(c)) r.set(c, profile_fhd(pad.profile(c)));
    });
    r.metadata["fhd_basis"] = "pad";
    return r;
}

MetricRaster compute_fhd_from_returns(const ReturnHistogramGrid& hist, int threads) {
    MetricRaster r(hist.grid, "fhd");
    parallel_for(hist.grid.cell_count(), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> w(hist.layers);
        for (std::size_t c = begin; c < end; ++c) {
            if (hist.total_per_cell[c] == 0) continue;
            const auto counts = hist.profile(c);
            std::copy(counts.begin(), counts.end(), w.begin());
            r.set(c, entropy_of(w));
        }
    });
    r.metadata["fhd_basis"] = "returns";
    return r;
}

MetricRaster compute_chm(const HagCloud& hag, const GridSpec& grid) {
    grid.validate();
    MetricRaster r(grid, "chm");
    for (const auto& p : hag.points) {
        const std::size_t c = cell_of(grid, p);
        if (r.nodata[c] != 0 || p.hag > r.values[c]) r.set(c, p.hag);
    }
    return r;
}

double linear_percentile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw PreconditionError("percentile of an empty sequence");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::string percentile_band_name(double fraction) {
    const double pct = fraction * 100.0;
    const double rounded = std::round(pct);
    if (std::abs(pct - rounded) < 1e-9) {
        std::string digits = std::to_string(static_cast<long long>(rounded));
        if (digits.size() < 2) digits.insert(0, "0");
        return "p" + digits;
    }
    return "p" + fmt(pct);
}

std::vector<MetricRaster> compute_percentiles(const HagCloud& hag, const GridSpec& grid,
                                              std::span<const double> fractions, int threads) {
    grid.validate();
    for (double f : fractions)
        if (!(f > 0.0 && f < 1.0)) throw PreconditionError("percentile fraction " + fmt(f) + " is not in (0, 1)");

    // Counting sort of heights by cell.
    const std::size_t cells = grid.cell_count();
    std::vector<std::size_t> cell_idx(hag.points.size());
    std::vector<std::size_t> offsets(cells + 1, 0);
    for (std::size_t i = 0; i < hag.points.size(); ++i) {
        cell_idx[i] = cell_of(grid, hag.points[i]);
        ++offsets[cell_idx[i] + 1];
    }
    for (std::size_t c = 0; c < cells; ++c) offsets[c + 1] += offsets[c];
    std::vector<double> heights(hag.points.size());
    {
        std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
        for (std::size_t i = 0; i < hag.points.size(); ++i) heights[cursor[cell_idx[i]]++] = hag.points[i].hag;
    }

    std::vector<MetricRaster> out;
    out.reserve(fractions.size());
    for (double f : fractions) out.emplace_back(grid, percentile_band_name(f));

    parallel_for(cells, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            const std::size_t lo = offsets[c];
            const std::size_t hi = offsets[c + 1];
            if (lo == hi) continue;
            std::sort(heights.begin() + static_cast<std::ptrdiff_t>(lo), heights.begin() + static_cast<std::ptrdiff_t>(hi));
            const std::span<const double> cell_heights(heights.data() + lo, hi - lo);
            for (std::size_t k = 0; k < fractions.size(); ++k) out[k].set(c, linear_percentile(cell_heights, fractions[k]));
        }
    });
    return out;
}

void save_pad_grid(const PadGrid& pad, const std::filesystem::path& stem) {
    std::ofstream header(with_suffix(stem, ".hdr"), std::ios::binary | std::ios::trunc);
    std::ofstream payload(with_suffix(stem, ".f64"), std::ios::binary | std::ios::trunc);
    if (!header || !payload) throw IoError("cannot write PAD grid '" + stem.string() + "'");
    write_grid_fields(pad.grid, header);
    header << "band: pad\n"
           << "layers: " << pad.layers << '\n'
           << "k: " << format_exact(pad.params.k) << '\n'
           << "dz: " << format_exact(pad.params.dz) << '\n'
           << "max_height: " << format_exact(pad.params.max_height) << '\n'
           << "layout: cell_major\n"
           << "nodata: nan\n"
           << "byte_order: little_endian\n";
    std::vector<double> values(pad.pad);
    for (std::size_t c = 0; c < pad.grid.cell_count(); ++c)
        if (!pad.has_returns(c))
            std::fill_n(values.begin() + static_cast<std::ptrdiff_t>(c * pad.layers), pad.layers,
                        std::numeric_limits<double>::quiet_NaN());
    write_f64_payload(values, payload);
}

PadGrid load_pad_grid(const std::filesystem::path& path) {
    std::filesystem::path stem = path;
    if (path.extension() == ".f64" || path.extension() == ".hdr") stem.replace_extension();
    std::ifstream header(with_suffix(stem, ".hdr"), std::ios::binary);
    std::ifstream payload(with_suffix(stem, ".f64"), std::ios::binary);
    if (!header || !payload) throw IoError("cannot open PAD grid '" + stem.string() + "'");
    const HeaderFields h = read_header_fields(header);
    PadGrid pad;
    pad.grid = read_grid_fields(h);
    pad.params.k = field_as_double(h, "k");
    pad.params.dz = field_as_double(h, "dz");
    pad.params.max_height = field_as_double(h, "max_height");
    pad.layers = static_cast<std::size_t>(field_as_int(h, "layers"));
    if (pad.layers != pad.params.layers()) throw ParseError("PAD header 'layers' disagrees with max_height / dz");
    const std::size_t cells = pad.grid.cell_count();
    pad.pad = read_f64_payload(payload, cells * pad.layers, "PAD grid");
    pad.saturated.assign(cells * pad.layers, 0);
    pad.returns_per_cell.assign(cells, 0);
    for (std::size_t c = 0; c < cells; ++c) {
        if (std::isnan(pad.pad[c * pad.layers])) {
            std::fill_n(pad.pad.begin() + static_cast<std::ptrdiff_t>(c * pad.layers), pad.layers, 0.0);
        } else {
            pad.returns_per_cell[c] = 1;
        }
    }
    return pad;
}

} // namespace canopyforge
