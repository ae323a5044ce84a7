#include "canopyforge/ground.hpp"

#include "canopyforge/error.hpp"
#include "canopyforge/parallel.hpp"
#include "knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace canopyforge {

MetricRaster GroundGrid::to_raster(const std::string& band) const {
    MetricRaster r(grid, band);
    for (std::size_t i = 0; i < elevation.size(); ++i) r.set(i, elevation[i]);
    return r;
}

GroundGrid build_ground_grid(const PointCloud& cloud, const GroundParams& params, int threads) {
    if (cloud.empty()) throw PreconditionError("build_ground_grid needs a non-empty cloud");
    return build_ground_grid(cloud, GridSpec::covering(cloud.bounds, params.cell_size, cloud.crs_code), params,
                             threads);
}

GroundGrid build_ground_grid(const PointCloud& cloud, const GridSpec& grid, const GroundParams& params,
                             int threads) {
    if (cloud.empty()) throw PreconditionError("build_ground_grid needs a non-empty cloud");
    if (!(params.cell_size > 0.0)) throw PreconditionError("ground cell_size must be > 0");
    if (params.neighbors == 0) throw PreconditionError("ground interpolation needs at least one neighbour");
    grid.validate();

    GroundGrid g;
    g.grid = grid;
    const std::size_t n = grid.cell_count();
    constexpr double inf = std::numeric_limits<double>::infinity();
    g.elevation.assign(n, inf);
    g.filled.assign(n, 1);

    const bool any_ground = std::any_of(cloud.points.begin(), cloud.points.end(),
                                        [](const PointRecord& p) { return p.classification == kGroundClass; });
    g.used_all_points = !any_ground;
    for (const auto& p : cloud.points) {
        if (any_ground && p.classification != kGroundClass) continue;
        const auto cell = grid.locate(p.x, p.y);
        if (!cell) throw CoverageError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                                       ") lies outside the ground grid");
        const std::size_t i = grid.flat(cell->row, cell->col);
        if (p.z < g.elevation[i]) g.elevation[i] = p.z;
        g.filled[i] = 0;
    }

    std::vector<std::pair<double, double>> centers;
    std::vector<double> observed_z;
    std::vector<std::size_t> holes;
    for (std::int64_t r = 0; r < grid.height; ++r)
        for (std::int64_t c = 0; c < grid.width; ++c) {
            const std::size_t i = grid.flat(r, c);
            if (g.filled[i] == 0) {
                centers.emplace_back(grid.center_x(c), grid.center_y(r));
                observed_z.push_back(g.elevation[i]);
            } else {
                holes.push_back(i);
            }
        }
    if (holes.empty()) return g;

    const detail::KdTree2 tree(std::move(centers));
    const std::size_t k = std::min(params.neighbors, tree.size());
    parallel_for(holes.size(), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<detail::KdTree2::Neighbor> nn;
        std::vector<double> w;
        for (std::size_t h = begin; h < end; ++h) {
            const std::size_t i = holes[h];
            const auto row = static_cast<std::int64_t>(i / static_cast<std::size_t>(grid.width));
            const auto col = static_cast<std::int64_t>(i % static_cast<std::size_t>(grid.width));
            tree.nearest(grid.center_x(col), grid.center_y(row), k, nn);
            w.resize(nn.size());
            double total = 0.0;
            for (std::size_t j = 0; j < nn.size(); ++j) {
                w[j] = 1.0 / std::pow(std::sqrt(nn[j].dist2), params.idw_power);
                total += w[j];
            }
            // Weighted offsets from the nearest neighbour keep flat terrain exact.
            const double base = observed_z[nn.front().index];
            double acc = 0.0;
            for (std::size_t j = 1; j < nn.size(); ++j) acc += (w[j] / total) * (observed_z[nn[j].index] - base);
            g.elevation[i] = base + acc;
        }
    });
    return g;
}

double ground_elevation_at(const GroundGrid& ground, double x, double y) {
    const GridSpec& g = ground.grid;
    double u = (x - g.origin_x) / g.cell_size - 0.5;
    double v = (g.origin_y - y) / g.cell_size - 0.5;
    u = std::clamp(u, 0.0, static_cast<double>(g.width - 1));
    v = std::clamp(v, 0.0, static_cast<double>(g.height - 1));
    const auto c0 = static_cast<std::int64_t>(std::floor(u));
    const auto r0 = static_cast<std::int64_t>(std::floor(v));
    const std::int64_t c1 = std::min(c0 + 1, g.width - 1);
    const std::int64_t r1 = std::min(r0 + 1, g.height - 1);
    const double t = u - static_cast<double>(c0);
    const double s = v - static_cast<double>(r0);
    const double e00 = ground.at(r0, c0);
    const double e01 = ground.at(r0, c1);
    const double e10 = ground.at(r1, c0);
    const double e11 = ground.at(r1, c1);
    const double top = e00 + t * (e01 - e00);
    const double bottom = e10 + t * (e11 - e10);
    return top + s * (bottom - top);
}

HagCloud compute_hag(const PointCloud& cloud, const GroundGrid& ground, double max_height) {
    if (!(max_height > 0.0)) throw PreconditionError("max_height must be > 0");
    HagCloud out;
    out.source_bounds = cloud.bounds;
    out.crs_code = cloud.crs_code;
    out.max_height = max_height;
    out.points.reserve(cloud.points.size());
    for (const auto& p : cloud.points) {
        if (!ground.grid.locate(p.x, p.y))
            throw CoverageError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                                ") lies outside the ground model coverage");
        double hag = p.z - ground_elevation_at(ground, p.x, p.y);
        if (hag < 0.0) {
            hag = 0.0;
            ++out.clamped_count;
        } else if (hag == 0.0) {
            hag = 0.0; // no negative zero
        }
        if (hag > max_height) {
            ++out.dropped_count;
            continue;
        }
        out.points.push_back({p.x, p.y, hag});
    }
    return out;
}

} // namespace canopyforge
