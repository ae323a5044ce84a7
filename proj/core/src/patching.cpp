#include "canopyforge/patching.hpp"

#include "canopyforge/error.hpp"
#include "canopyforge/raster_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace canopyforge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

GridSpec window_grid(const GridSpec& tile, std::int64_t row0, std::int64_t col0, std::int64_t size) {
    GridSpec g = tile;
    g.origin_x = tile.origin_x + static_cast<double>(col0) * tile.cell_size;
    g.origin_y = tile.origin_y - static_cast<double>(row0) * tile.cell_size;
    g.width = size;
    g.height = size;
    return g;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

ProfileArray::ProfileArray(std::size_t l, std::size_t h, std::size_t w)
    : layers(l), height(h), width(w), values(l * h * w, kNaN) {}

std::size_t Patch::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

PatchSet extract_patches(const TileRasters& tile, std::int64_t patch_size, std::int64_t stride) {
    if (stride < 1) throw PreconditionError("patch stride must be >= 1");
    if (patch_size < 1) throw PreconditionError("patch size must be >= 1");
    const GridSpec& g = tile.mask.grid;
    g.validate();
    if (tile.mask.valid.size() != g.cell_count()) throw GridMismatchError("tile mask size does not match its grid");
    for (const auto& [name, r] : tile.bands)
        if (!(r.grid == g))
            throw GridMismatchError("tile band '" + name + "' is not on the validity mask grid");
    if (patch_size > g.width || patch_size > g.height)
        throw PreconditionError("patch size " + std::to_string(patch_size) + " exceeds tile dimensions " +
                                std::to_string(g.height) + "x" + std::to_string(g.width));

    PatchSet set;
    set.source_grid = g;
    set.patch_size = patch_size;
    set.stride = stride;
    const auto n = static_cast<std::size_t>(patch_size * patch_size);
    for (std::int64_t row0 = 0; row0 + patch_size <= g.height; row0 += stride) {
        for (std::int64_t col0 = 0; col0 + patch_size <= g.width; col0 += stride) {
            Patch p;
            p.tile_id = tile.tile_id;
            p.row0 = row0;
            p.col0 = col0;
            p.size = patch_size;
            p.grid = window_grid(g, row0, col0, patch_size);
            p.valid.resize(n);
            for (const auto& [name, _] : tile.bands) p.channels[name].resize(n);
            for (std::int64_t r = 0; r < patch_size; ++r) {
                for (std::int64_t c = 0; c < patch_size; ++c) {
                    const std::size_t src = g.flat(row0 + r, col0 + c);
                    const auto dst = static_cast<std::size_t>(r * patch_size + c);
                    p.valid[dst] = tile.mask.valid[src];
                    for (const auto& [name, raster] : tile.bands) p.channels[name][dst] = raster.values[src];
                }
            }
            p.valid_fraction = static_cast<double>(p.valid_count()) / static_cast<double>(n);
            set.patches.push_back(std::move(p));
        }
    }
    return set;
}

PatchSet filter_patches(const PatchSet& set, double min_valid_fraction) {
    if (!(min_valid_fraction >= 0.0 && min_valid_fraction <= 1.0))
        throw PreconditionError("min_valid_fraction must be in [0, 1]");
    PatchSet out = set;
    out.patches.clear();
    out.min_valid_fraction = min_valid_fraction;
    for (const auto& p : set.patches)
        if (p.valid_fraction >= min_valid_fraction) out.patches.push_back(p);
    return out;
}

PatchSet filter_forest_patches(const PatchSet& set, const std::string& band, double min_height,
                               double min_fraction) {
    PatchSet out = set;
    out.patches.clear();
    for (const auto& p : set.patches) {
        auto it = p.channels.find(band);
        if (it == p.channels.end()) throw PreconditionError("patch has no '" + band + "' channel for forest filter");
        std::size_t above = 0;
        for (std::size_t i = 0; i < it->second.size(); ++i)
            if (p.valid[i] && it->second[i] > min_height) ++above;
        if (static_cast<double>(above) >= min_fraction * static_cast<double>(it->second.size()))
            out.patches.push_back(p);
    }
    return out;
}

ProfileArray reduce_profile_array(const ProfileArray& profiles, int factor) {
    if (factor < 1) throw PreconditionError("PAD reduction factor must be >= 1");
    const auto f = static_cast<std::size_t>(factor);
    if (profiles.height % f != 0 || profiles.width % f != 0)
        throw PreconditionError("PAD reduction factor " + std::to_string(factor) + " does not divide the " +
                                std::to_string(profiles.height) + "x" + std::to_string(profiles.width) + " window");
    ProfileArray out(profiles.layers, profiles.height / f, profiles.width / f);
    for (std::size_t l = 0; l < profiles.layers; ++l)
        for (std::size_t br = 0; br < out.height; ++br)
            for (std::size_t bc = 0; bc < out.width; ++bc) {
                double sum = 0.0;
                std::size_t n = 0;
                for (std::size_t r = br * f; r < (br + 1) * f; ++r)
                    for (std::size_t c = bc * f; c < (bc + 1) * f; ++c) {
                        const double v = profiles.at(l, r, c);
                        if (std::isnan(v)) continue;
                        sum += v;
                        ++n;
                    }
                if (n > 0) out.at(l, br, bc) = sum / static_cast<double>(n);
            }
    return out;
}

ProfileArray sample_pad_profiles(const PadGrid& pad, const GridSpec& window) {
    const auto h = static_cast<std::size_t>(window.height);
    const auto w = static_cast<std::size_t>(window.width);
    ProfileArray out(pad.layers, h, w);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            const auto cell = pad.grid.locate(window.center_x(static_cast<std::int64_t>(c)),
                                              window.center_y(static_cast<std::int64_t>(r)));
            if (!cell) continue;
            const std::size_t idx = pad.grid.flat(cell->row, cell->col);
            if (!pad.has_returns(idx)) continue;
            const auto prof = pad.profile(idx);
            for (std::size_t l = 0; l < pad.layers; ++l) out.at(l, r, c) = prof[l];
        }
    return out;
}

ProfileArray reduce_pad_profiles(const PadGrid& pad, const GridSpec& window, int factor) {
    if (factor < 1) throw PreconditionError("PAD reduction factor must be >= 1");
    const auto f = static_cast<std::size_t>(factor);
    const auto h = static_cast<std::size_t>(window.height);
    const auto w = static_cast<std::size_t>(window.width);
    if (h % f != 0 || w % f != 0)
        throw PreconditionError("PAD reduction factor " + std::to_string(factor) + " does not divide the " +
                                std::to_string(h) + "x" + std::to_string(w) + " window");
    ProfileArray out(pad.layers, h / f, w / f);
    std::vector<double> sums(pad.layers);
    for (std::size_t br = 0; br < out.height; ++br)
        for (std::size_t bc = 0; bc < out.width; ++bc) {
            std::fill(sums.begin(), sums.end(), 0.0);
            std::size_t n = 0;
            for (std::size_t r = br * f; r < (br + 1) * f; ++r)
                for (std::size_t c = bc * f; c < (bc + 1) * f; ++c) {
                    const auto cell = pad.grid.locate(window.center_x(static_cast<std::int64_t>(c)),
                                                      window.center_y(static_cast<std::int64_t>(r)));
                    if (!cell) continue;
                    const std::size_t idx = pad.grid.flat(cell->row, cell->col);
                    if (!pad.has_returns(idx)) continue;
                    const auto prof = pad.profile(idx);
                    for (std::size_t l = 0; l < pad.layers; ++l) sums[l] += prof[l];
                    ++n;
                }
            if (n == 0) continue;
            for (std::size_t l = 0; l < pad.layers; ++l) out.at(l, br, bc) = sums[l] / static_cast<double>(n);
        }
    return out;
}

void attach_pad_profiles(PatchSet& set, const PadGrid& pad, int factor) {
    for (auto& p : set.patches) {
        p.pad_profile = reduce_pad_profiles(pad, p.grid, factor);
        p.pad_factor = factor;
    }
}

void write_patch_manifest(const PatchSet& set, std::ostream& out) {
    out << "tile_id,row0,col0,valid_fraction\n";
    for (const auto& p : set.patches)
        out << p.tile_id << ',' << p.row0 << ',' << p.col0 << ',' << format_12g(p.valid_fraction) << '\n';
}

std::vector<PatchManifestEntry> read_patch_manifest(std::istream& in) {
    std::vector<PatchManifestEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line != "tile_id,row0,col0,valid_fraction")
                throw ParseError("patch manifest header must be 'tile_id,row0,col0,valid_fraction'", lineno);
            continue;
        }
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 4) throw ParseError("patch manifest row needs 4 fields", lineno);
        PatchManifestEntry e;
        e.tile_id = f[0];
        const auto r0 = std::from_chars(f[1].data(), f[1].data() + f[1].size(), e.row0);
        const auto c0 = std::from_chars(f[2].data(), f[2].data() + f[2].size(), e.col0);
        const auto vf = std::from_chars(f[3].data(), f[3].data() + f[3].size(), e.valid_fraction);
        if (r0.ec != std::errc{} || c0.ec != std::errc{} || vf.ec != std::errc{})
            throw ParseError("malformed patch manifest row", lineno);
        out.push_back(e);
    }
    return out;
}

void write_patch_set(const PatchSet& set, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream manifest(dir / "manifest.csv", std::ios::binary | std::ios::trunc);
        if (!manifest) throw IoError("cannot write patch manifest in '" + dir.string() + "'");
        write_patch_manifest(set, manifest);
    }
    for (const auto& p : set.patches) {
        const std::string prefix = p.tile_id + "_" + std::to_string(p.row0) + "_" + std::to_string(p.col0) + "_";
        for (const auto& [band, values] : p.channels) {
            MetricRaster r(p.grid, band);
            for (std::size_t i = 0; i < values.size(); ++i)
                if (std::isfinite(values[i])) r.set(i, values[i]);
            save_binary(r, dir / (prefix + band));
        }
        MetricRaster valid(p.grid, "valid");
        for (std::size_t i = 0; i < p.valid.size(); ++i) valid.set(i, p.valid[i] ? 1.0 : 0.0);
        save_binary(valid, dir / (prefix + "valid"));

        if (p.pad_profile) {
            const ProfileArray& prof = *p.pad_profile;
            GridSpec g = p.grid;
            g.cell_size = p.grid.cell_size * p.pad_factor;
            g.width = static_cast<std::int64_t>(prof.width);
            g.height = static_cast<std::int64_t>(prof.height * prof.layers);
            MetricRaster r(g, "pad");
            for (std::size_t i = 0; i < prof.values.size(); ++i)
                if (!std::isnan(prof.values[i])) r.set(i, prof.values[i]);
            r.metadata["layers"] = std::to_string(prof.layers);
            r.metadata["pad_factor"] = std::to_string(p.pad_factor);
            r.metadata["layout"] = "layer_stacked_rows";
            save_binary(r, dir / (prefix + "pad"));
        }
    }
}

} // namespace canopyforge
