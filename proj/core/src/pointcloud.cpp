#include "canopyforge/pointcloud.hpp"

#include "canopyforge/error.hpp"
#include "canopyforge/raster_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace canopyforge {

namespace {

bool parse_token(std::string_view tok, double& out) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return res.ec == std::errc{} && res.ptr == tok.data() + tok.size() && std::isfinite(out);
}

} // namespace

Bounds compute_bounds(const std::vector<PointRecord>& points) {
    if (points.empty()) throw PreconditionError("cannot compute bounds of an empty point set");
    Bounds b{points.front().x, points.front().y, points.front().x, points.front().y};
    for (const auto& p : points) {
        b.min_x = std::min(b.min_x, p.x);
        b.min_y = std::min(b.min_y, p.y);
        b.max_x = std::max(b.max_x, p.x);
        b.max_y = std::max(b.max_y, p.y);
    }
    return b;
}

PointCloud parse_xyz_text(std::istream& in, int crs_code) {
    PointCloud cloud;
    cloud.crs_code = crs_code;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string_view> tokens;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        tokens.clear();
        std::string_view rest(line);
        while (true) {
            const auto b = rest.find_first_not_of(" \t");
            if (b == std::string_view::npos) break;
            rest.remove_prefix(b);
            const auto e = rest.find_first_of(" \t");
            tokens.push_back(rest.substr(0, e));
            if (e == std::string_view::npos) break;
            rest.remove_prefix(e);
        }
        if (tokens.size() < 3 || tokens.size() > 4)
            throw ParseError("expected 'x y z [classification]', found " + std::to_string(tokens.size()) +
                                 " columns",
                             lineno);

        PointRecord p;
        double* coords[3] = {&p.x, &p.y, &p.z};
        for (int k = 0; k < 3; ++k)
            if (!parse_token(tokens[k], *coords[k]))
                throw ParseError("non-numeric token '" + std::string(tokens[k]) + "'", lineno);
        if (tokens.size() == 4) {
            unsigned cls = 0;
            const auto tok = tokens[3];
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), cls);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || cls > 255)
                throw ParseError("classification '" + std::string(tok) + "' is not an integer in 0..255", lineno);
            p.classification = static_cast<std::uint8_t>(cls);
        }
        cloud.points.push_back(p);
    }
    if (cloud.points.empty()) throw InputError("point text contains no points (empty cloud)");
    cloud.bounds = compute_bounds(cloud.points);
    return cloud;
}

PointCloud parse_xyz_text(std::string_view text, int crs_code) {
    std::istringstream in{std::string(text)};
    return parse_xyz_text(in, crs_code);
}

void write_xyz_text(const PointCloud& cloud, std::ostream& out) {
    std::string line;
    for (const auto& p : cloud.points) {
        line = format_12g(p.x);
        line.push_back(' ');
        line += format_12g(p.y);
        line.push_back(' ');
        line += format_12g(p.z);
        line.push_back(' ');
        line += std::to_string(p.classification);
        line.push_back('\n');
        out << line;
    }
}

double point_density(std::size_t point_count, const Bounds& bounds) {
    const double area = bounds.area();
    if (!(area > 0.0) || !std::isfinite(area))
        throw PreconditionError("point density needs bounds with positive area");
    return static_cast<double>(point_count) / area;
}

double point_density(const PointCloud& cloud) {
    return point_density(cloud.points.size(), cloud.bounds);
}

} // namespace canopyforge
