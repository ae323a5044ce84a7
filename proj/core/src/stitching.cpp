#include "canopyforge/stitching.hpp"

#include "canopyforge/error.hpp"
#include "canopyforge/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

namespace canopyforge {

std::vector<std::int64_t> axis_offsets(std::int64_t dim, std::int64_t window, std::int64_t overlap) {
    if (window < 1) throw PreconditionError("window size must be >= 1");
    if (overlap < 0 || overlap >= window)
        throw PreconditionError("overlap must be in [0, " + std::to_string(window) + "), got " +
                                std::to_string(overlap));
    if (dim < window)
        throw PreconditionError("tile dimension " + std::to_string(dim) + " is smaller than the window " +
                                std::to_string(window));
    const std::int64_t stride = window - overlap;
    std::vector<std::int64_t> out;
    for (std::int64_t o = 0;; o += stride) {
        if (o + window >= dim) {
            out.push_back(dim - window);
            break;
        }
        out.push_back(o);
    }
    return out;
}

WindowPlan plan_windows(std::int64_t height, std::int64_t width, std::int64_t window, std::int64_t overlap) {
    WindowPlan plan;
    plan.window_size = window;
    plan.overlap = overlap;
    plan.height = height;
    plan.width = width;
    const auto rows = axis_offsets(height, window, overlap);
    const auto cols = axis_offsets(width, window, overlap);
    for (auto r : rows)
        for (auto c : cols) plan.windows.push_back({r, c});
    return plan;
}

std::string to_string(BlendMode m) { return m == BlendMode::hann ? "hann" : "uniform"; }

BlendMode parse_blend_mode(const std::string& s) {
    if (s == "hann") return BlendMode::hann;
    if (s == "uniform") return BlendMode::uniform;
    throw InputError("unknown blend mode '" + s + "' (expected hann or uniform)");
}

std::vector<double> window_weight(std::int64_t window, BlendMode mode) {
    const auto n = static_cast<std::size_t>(window);
    std::vector<double> out(n * n, 1.0);
    if (mode == BlendMode::uniform) return out;
    std::vector<double> w1(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t m = std::min(i, n - 1 - i);
        const double s = std::sin(std::numbers::pi * (static_cast<double>(m) + 0.5) / static_cast<double>(n));
        w1[i] = s * s;
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) out[r * n + c] = std::max(w1[r] * w1[c], kWeightFloor);
    return out;
}

namespace {

void check_plan(const WindowPlan& plan) {
    if (plan.windows.empty()) throw PreconditionError("window plan is empty");
    for (const auto& w : plan.windows)
        if (w.row < 0 || w.col < 0 || w.row + plan.window_size > plan.height ||
            w.col + plan.window_size > plan.width)
            throw PreconditionError("window (" + std::to_string(w.row) + ", " + std::to_string(w.col) +
                                    ") lies outside the " + std::to_string(plan.height) + "x" +
                                    std::to_string(plan.width) + " tile");
}

} // namespace

std::vector<double> accumulated_weights(const WindowPlan& plan, BlendMode mode) {
    check_plan(plan);
    const auto weights = window_weight(plan.window_size, mode);
    const auto n = static_cast<std::size_t>(plan.window_size);
    const auto width = static_cast<std::size_t>(plan.width);
    std::vector<double> acc(static_cast<std::size_t>(plan.height) * width, 0.0);
    for (const auto& w : plan.windows)
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                acc[(static_cast<std::size_t>(w.row) + r) * width + static_cast<std::size_t>(w.col) + c] +=
                    weights[r * n + c];
    return acc;
}

MetricRaster blend_stitch(const WindowPlan& plan, std::span<const std::vector<double>> preds, const GridSpec& grid,
                          BlendMode mode, int threads, std::string band) {
    check_plan(plan);
    if (preds.size() != plan.windows.size())
        throw PreconditionError("expected " + std::to_string(plan.windows.size()) + " window predictions, got " +
                                std::to_string(preds.size()));
    if (grid.height != plan.height || grid.width != plan.width)
        throw GridMismatchError("output grid is " + std::to_string(grid.height) + "x" + std::to_string(grid.width) +
                                " but the plan covers " + std::to_string(plan.height) + "x" +
                                std::to_string(plan.width));
    const auto n = static_cast<std::size_t>(plan.window_size);
    for (std::size_t k = 0; k < preds.size(); ++k)
        if (preds[k].size() != n * n)
            throw PreconditionError("window prediction " + std::to_string(k) + " has " +
                                    std::to_string(preds[k].size()) + " values, expected " + std::to_string(n * n));

    const auto weights = window_weight(plan.window_size, mode);
    MetricRaster out(grid, std::move(band));
    out.metadata["blend"] = to_string(mode);
    out.metadata["window"] = std::to_string(plan.window_size);
    out.metadata["overlap"] = std::to_string(plan.overlap);
    const auto width = static_cast<std::size_t>(plan.width);

    parallel_for(static_cast<std::size_t>(plan.height), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> active;
        std::vector<double> total(width), base(width), lo(width), hi(width), acc(width);
        std::vector<std::uint8_t> seen(width);
        for (std::size_t row = begin; row < end; ++row) {
            active.clear();
            for (std::size_t k = 0; k < plan.windows.size(); ++k) {
                const auto r0 = static_cast<std::size_t>(plan.windows[k].row);
                if (row >= r0 && row < r0 + n) active.push_back(k);
            }
            std::fill(total.begin(), total.end(), 0.0);
            std::fill(acc.begin(), acc.end(), 0.0);
            std::fill(seen.begin(), seen.end(), std::uint8_t{0});
            for (std::size_t k : active) {
                const std::size_t wr = row - static_cast<std::size_t>(plan.windows[k].row);
                const auto c0 = static_cast<std::size_t>(plan.windows[k].col);
                for (std::size_t wc = 0; wc < n; ++wc) {
                    const double v = preds[k][wr * n + wc];
                    if (!std::isfinite(v)) continue;
                    const std::size_t c = c0 + wc;
                    total[c] += weights[wr * n + wc];
                    if (!seen[c]) {
                        seen[c] = 1;
                        base[c] = lo[c] = hi[c] = v;
                    } else {
                        lo[c] = std::min(lo[c], v);
                        hi[c] = std::max(hi[c], v);
                    }
                }
            }
            for (std::size_t k : active) {
                const std::size_t wr = row - static_cast<std::size_t>(plan.windows[k].row);
                const auto c0 = static_cast<std::size_t>(plan.windows[k].col);
                for (std::size_t wc = 0; wc < n; ++wc) {
                    const double v = preds[k][wr * n + wc];
                    if (!std::isfinite(v)) continue;
                    const std::size_t c = c0 + wc;
                    if (v != base[c]) acc[c] += weights[wr * n + wc] / total[c] * (v - base[c]);
                }
            }
            for (std::size_t c = 0; c < width; ++c) {
                const std::size_t i = row * width + c;
                if (!seen[c]) {
                    out.set_nodata(i);
                    continue;
                }
                out.set(i, std::clamp(base[c] + acc[c], lo[c], hi[c]));
            }
        }
    });
    return out;
}

void write_plan_csv(const WindowPlan& plan, std::ostream& out) {
    out << "row0,col0\n";
    for (const auto& w : plan.windows) out << w.row << ',' << w.col << '\n';
}

WindowPlan read_plan_csv(std::istream& in, const WindowPlan& shape) {
    WindowPlan plan = shape;
    plan.windows.clear();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line != "row0,col0") throw ParseError("window plan header must be 'row0,col0'", lineno);
            continue;
        }
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError("window plan row needs 2 fields", lineno);
        CellIndex w;
        const char* b = line.data();
        const char* e = b + line.size();
        const auto r1 = std::from_chars(b, b + comma, w.row);
        const auto r2 = std::from_chars(b + comma + 1, e, w.col);
        if (r1.ec != std::errc{} || r1.ptr != b + comma || r2.ec != std::errc{} || r2.ptr != e)
            throw ParseError("malformed window plan row '" + line + "'", lineno);
        plan.windows.push_back(w);
    }
    if (shape.height <= 0 || shape.width <= 0) {
        plan.height = plan.width = 0;
        for (const auto& w : plan.windows) {
            plan.height = std::max(plan.height, w.row + plan.window_size);
            plan.width = std::max(plan.width, w.col + plan.window_size);
        }
    }
    check_plan(plan);
    return plan;
}

} // namespace canopyforge
