#pragma once

#include <canopyforge/ground.hpp>
#include <canopyforge/pointcloud.hpp>
#include <canopyforge/raster.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace canopyforge::testing {

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "cf") {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline GridSpec make_grid(std::int64_t w, std::int64_t h, double cell = 1.0, double ox = 0.0, double oy = 0.0) {
    GridSpec g;
    g.origin_x = ox;
    g.origin_y = oy == 0.0 ? static_cast<double>(h) * cell : oy;
    g.cell_size = cell;
    g.width = w;
    g.height = h;
    return g;
}

inline MetricRaster random_raster(const GridSpec& g, std::mt19937_64& rng, double nodata_rate = 0.1,
                                  const std::string& band = "chm") {
    MetricRaster r(g, band);
    std::uniform_real_distribution<double> val(-50.0, 50.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        if (u(rng) < nodata_rate)
            r.set_nodata(i);
        else
            r.set(i, val(rng));
    }
    return r;
}

inline MetricRaster constant_raster(const GridSpec& g, double v, const std::string& band = "chm") {
    MetricRaster r(g, band);
    for (std::size_t i = 0; i < r.values.size(); ++i) r.set(i, v);
    return r;
}

// HAG cloud uniformly spread over [0, w) x [0, h) with heights in [0, max_h].
inline HagCloud random_hag_cloud(std::size_t n, double w, double h, double max_h, std::mt19937_64& rng) {
    HagCloud c;
    std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h), uz(0.0, max_h);
    c.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) c.points.push_back({ux(rng), uy(rng), uz(rng)});
    c.source_bounds = {0.0, 0.0, w, h};
    c.max_height = 60.0;
    return c;
}

// Synthetic forest over a gently sloping terrain; roughly a third of the
// returns are ground-classified.
inline PointCloud synthetic_forest(std::size_t n, double extent, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointCloud c;
    c.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        PointRecord p;
        p.x = 400000.0 + u(rng) * extent;
        p.y = 5600000.0 + u(rng) * extent;
        const double ground = 150.0 + 0.01 * (p.x - 400000.0) + 0.02 * (p.y - 5600000.0);
        if (u(rng) < 0.35) {
            p.z = ground;
            p.classification = 2;
        } else {
            const double canopy = 25.0 + 8.0 * std::sin((p.x - 400000.0) / 37.0) * std::cos((p.y - 5600000.0) / 53.0);
            p.z = ground + canopy * std::sqrt(u(rng));
            p.classification = 5;
        }
        c.points.push_back(p);
    }
    c.bounds = compute_bounds(c.points);
    return c;
}

} // namespace canopyforge::testing
