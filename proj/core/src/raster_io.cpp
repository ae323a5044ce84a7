#include "canopyforge/raster_io.hpp"

#include "canopyforge/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

namespace canopyforge {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open '" + p.string() + "' for reading");
    return in;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    return out;
}

} // namespace

std::string format_exact(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string format_12g(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 12);
    return std::string(buf.data(), res.ptr);
}

void write_ascii_grid(const MetricRaster& r, std::ostream& out) {
    r.validate();
    const GridSpec& g = r.grid;
    out << "ncols " << g.width << '\n'
        << "nrows " << g.height << '\n'
        << "xllcorner " << format_12g(g.origin_x) << '\n'
        << "yllcorner " << format_12g(g.min_y()) << '\n'
        << "cellsize " << format_12g(g.cell_size) << '\n'
        << "NODATA_value " << format_12g(kAsciiNodata) << '\n';
    std::string line;
    for (std::int64_t row = 0; row < g.height; ++row) {
        line.clear();
        for (std::int64_t col = 0; col < g.width; ++col) {
            const std::size_t i = g.flat(row, col);
            if (col > 0) line.push_back(' ');
            line += r.is_valid(i) ? format_12g(r.values[i]) : format_12g(kAsciiNodata);
        }
        line.push_back('\n');
        out << line;
    }
    if (!out) throw IoError("failed writing ASCII grid");
}

MetricRaster read_ascii_grid(std::istream& in, int crs_code, std::string band_name) {
    std::map<std::string, std::string> header;
    std::string token;
    std::string first_value;
    while (in >> token) {
        if (std::isalpha(static_cast<unsigned char>(token.front()))) {
            std::string value;
            if (!(in >> value)) throw ParseError("missing value for header key '" + token + "'");
            header[lower(token)] = value;
        } else {
            first_value = token;
            break;
        }
    }

    auto need = [&](const std::string& key) -> double {
        auto it = header.find(key);
        if (it == header.end()) throw ParseError("ASCII grid header is missing key '" + key + "'");
        double v = 0.0;
        if (!parse_double(it->second, v))
            throw ParseError("ASCII grid header key '" + key + "' has non-numeric value '" + it->second + "'");
        return v;
    };
    auto need_either = [&](const std::string& corner, const std::string& center, bool& is_center) -> double {
        if (header.count(corner) == 0 && header.count(center) != 0) {
            is_center = true;
            return need(center);
        }
        is_center = false;
        return need(corner);
    };

    const double ncols = need("ncols");
    const double nrows = need("nrows");
    bool x_center = false;
    bool y_center = false;
    const double xll = need_either("xllcorner", "xllcenter", x_center);
    const double yll = need_either("yllcorner", "yllcenter", y_center);
    const double cell = need("cellsize");
    const double nodata_value = header.count("nodata_value") ? need("nodata_value") : kAsciiNodata;

    if (ncols < 1 || nrows < 1 || ncols != std::floor(ncols) || nrows != std::floor(nrows))
        throw ParseError("ASCII grid ncols/nrows must be positive integers");

    GridSpec g;
    g.width = static_cast<std::int64_t>(ncols);
    g.height = static_cast<std::int64_t>(nrows);
    g.cell_size = cell;
    g.crs_code = crs_code;
    g.origin_x = x_center ? xll - 0.5 * cell : xll;
    const double lly = y_center ? yll - 0.5 * cell : yll;
    g.origin_y = lly + static_cast<double>(g.height) * cell;
    try {
        g.validate();
    } catch (const PreconditionError& e) {
        throw ParseError(std::string("ASCII grid header: ") + e.what());
    }

    MetricRaster r(g, std::move(band_name));
    const std::size_t n = g.cell_count();
    std::size_t i = 0;
    auto consume = [&](const std::string& tok) {
        if (i >= n) throw ParseError("ASCII grid has more than " + std::to_string(n) + " values");
        double v = 0.0;
        if (!parse_double(tok, v)) throw ParseError("ASCII grid value '" + tok + "' is not a number");
        if (v == nodata_value || !std::isfinite(v)) r.set_nodata(i);
        else r.set(i, v);
        ++i;
    };
    if (!first_value.empty()) consume(first_value);
    while (in >> token) consume(token);
    if (i != n)
        throw ParseError("ASCII grid body has " + std::to_string(i) + " values, expected " + std::to_string(n));
    return r;
}

void write_f64_payload(std::span<const double> values, std::ostream& out) {
    std::vector<char> buf(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto bits = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("failed writing float64 payload");
}

std::vector<double> read_f64_payload(std::istream& in, std::size_t expected_count, const std::string& what) {
    std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const std::uint64_t expected = static_cast<std::uint64_t>(expected_count) * 8;
    if (bytes.size() != expected) throw TruncationError(what + " payload length mismatch", expected, bytes.size());
    std::vector<double> values(expected_count);
    for (std::size_t i = 0; i < expected_count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
        values[i] = std::bit_cast<double>(bits);
    }
    return values;
}

HeaderFields read_header_fields(std::istream& in) {
    HeaderFields h;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto colon = t.find(':');
        if (colon == std::string::npos) throw ParseError("header line is not 'key: value'", lineno);
        h[trim(t.substr(0, colon))] = trim(t.substr(colon + 1));
    }
    return h;
}

const std::string& require_field(const HeaderFields& h, const std::string& key) {
    auto it = h.find(key);
    if (it == h.end()) throw ParseError("raster header is missing key '" + key + "'");
    return it->second;
}

double field_as_double(const HeaderFields& h, const std::string& key) {
    double v = 0.0;
    if (!parse_double(require_field(h, key), v))
        throw ParseError("raster header key '" + key + "' is not a number");
    return v;
}

std::int64_t field_as_int(const HeaderFields& h, const std::string& key) {
    const std::string& s = require_field(h, key);
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError("raster header key '" + key + "' is not an integer");
    return v;
}

void write_grid_fields(const GridSpec& g, std::ostream& header) {
    header << "width: " << g.width << '\n'
           << "height: " << g.height << '\n'
           << "origin_x: " << format_exact(g.origin_x) << '\n'
           << "origin_y: " << format_exact(g.origin_y) << '\n'
           << "cell_size: " << format_exact(g.cell_size) << '\n'
           << "crs: " << g.crs_code << '\n';
}

GridSpec read_grid_fields(const HeaderFields& h) {
    GridSpec g;
    g.width = field_as_int(h, "width");
    g.height = field_as_int(h, "height");
    g.origin_x = field_as_double(h, "origin_x");
    g.origin_y = field_as_double(h, "origin_y");
    g.cell_size = field_as_double(h, "cell_size");
    g.crs_code = static_cast<int>(field_as_int(h, "crs"));
    try {
        g.validate();
    } catch (const PreconditionError& e) {
        throw ParseError(std::string("raster header: ") + e.what());
    }
    return g;
}

void write_binary(const MetricRaster& r, std::ostream& payload, std::ostream& header) {
    if (r.values.size() != r.grid.cell_count() || r.nodata.size() != r.grid.cell_count())
        throw PreconditionError("raster '" + r.band_name + "' array size does not match its grid");
    write_grid_fields(r.grid, header);
    header << "band: " << r.band_name << '\n'
           << "nodata: nan\n"
           << "byte_order: little_endian\n";
    for (const auto& [k, v] : r.metadata) header << "meta." << k << ": " << v << '\n';
    if (!header) throw IoError("failed writing raster header");

    std::vector<double> vals(r.values);
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (r.nodata[i] != 0) vals[i] = std::numeric_limits<double>::quiet_NaN();
    write_f64_payload(vals, payload);
}

MetricRaster read_binary(std::istream& payload, std::istream& header) {
    const HeaderFields h = read_header_fields(header);
    MetricRaster r(read_grid_fields(h), require_field(h, "band"));
    for (const auto& [k, v] : h)
        if (k.rfind("meta.", 0) == 0) r.metadata[k.substr(5)] = v;
    std::vector<double> values = read_f64_payload(payload, r.grid.cell_count(), "raster '" + r.band_name + "'");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isnan(values[i])) r.set_nodata(i);
        else r.set(i, values[i]);
    }
    r.values = std::move(values); // keep NaN payload bits as stored
    return r;
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const std::string& suffix) {
    return std::filesystem::path(stem.string() + suffix);
}

void save_ascii_grid(const MetricRaster& r, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_ascii_grid(r, out);
}

MetricRaster load_ascii_grid(const std::filesystem::path& path, int crs_code) {
    auto in = open_in(path);
    return read_ascii_grid(in, crs_code, path.stem().string());
}

void save_binary(const MetricRaster& r, const std::filesystem::path& stem) {
    auto payload = open_out(with_suffix(stem, ".f64"));
    auto header = open_out(with_suffix(stem, ".hdr"));
    write_binary(r, payload, header);
}

MetricRaster load_binary(const std::filesystem::path& path) {
    std::filesystem::path stem = path;
    if (path.extension() == ".f64" || path.extension() == ".hdr") stem.replace_extension();
    auto payload = open_in(with_suffix(stem, ".f64"));
    auto header = open_in(with_suffix(stem, ".hdr"));
    return read_binary(payload, header);
}

MetricRaster load_raster(const std::filesystem::path& path) {
    if (path.extension() == ".asc") return load_ascii_grid(path);
    return load_binary(path);
}

} // namespace canopyforge
