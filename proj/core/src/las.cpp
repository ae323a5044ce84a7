#include "canopyforge/las.hpp"

#include "canopyforge/error.hpp"
#include "canopyforge/pointcloud.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace canopyforge {

namespace {

// Byte offsets of the public header block fields.
namespace off {
constexpr std::size_t signature = 0;
constexpr std::size_t version_major = 24;
constexpr std::size_t version_minor = 25;
constexpr std::size_t header_size = 94;
constexpr std::size_t offset_to_points = 96;
constexpr std::size_t number_of_vlrs = 100;
constexpr std::size_t point_format = 104;
constexpr std::size_t record_length = 105;
constexpr std::size_t legacy_count = 107;
constexpr std::size_t x_scale = 131;
constexpr std::size_t x_offset = 155;
constexpr std::size_t max_x = 179;
constexpr std::size_t min_x = 187;
constexpr std::size_t max_y = 195;
constexpr std::size_t min_y = 203;
constexpr std::size_t max_z = 211;
constexpr std::size_t min_z = 219;
constexpr std::size_t extended_count = 247;
} // namespace off

constexpr std::size_t kVlrHeaderSize = 54;

class ByteReader {
public:
    explicit ByteReader(std::span<const std::byte> data) : data_(data) {}

    template <typename T>
    T read(std::size_t offset, const char* field) const {
        if (offset + sizeof(T) > data_.size())
            throw ParseError(field, offset,
                             "LAS data ends before field (blob is " + std::to_string(data_.size()) + " bytes)");
        std::uint64_t bits = 0;
        for (std::size_t b = 0; b < sizeof(T); ++b)
            bits |= static_cast<std::uint64_t>(std::to_integer<unsigned>(data_[offset + b])) << (8 * b);
        if constexpr (std::is_same_v<T, double>) {
            return std::bit_cast<double>(bits);
        } else if constexpr (std::is_signed_v<T>) {
            using U = std::make_unsigned_t<T>;
            return std::bit_cast<T>(static_cast<U>(bits));
        } else {
            return static_cast<T>(bits);
        }
    }

    std::string text(std::size_t offset, std::size_t len, const char* field) const {
        if (offset + len > data_.size()) throw ParseError(field, offset, "LAS data ends before field");
        std::string s(len, '\0');
        std::memcpy(s.data(), data_.data() + offset, len);
        return s.substr(0, s.find('\0'));
    }

    std::size_t size() const noexcept { return data_.size(); }

private:
    std::span<const std::byte> data_;
};

std::size_t min_record_length(std::uint8_t format) {
    switch (format) {
    case 0: return 20;
    case 1: return 28;
    case 6: return 30;
    case 7: return 36;
    default: return 0;
    }
}

int crs_from_geokeys(const ByteReader& r, std::size_t data_offset, std::size_t length) {
    if (length < 8) return 0;
    const auto n_keys = r.read<std::uint16_t>(data_offset + 6, "GeoKeyDirectory NumberOfKeys");
    int geographic = 0;
    for (std::size_t k = 0; k < n_keys; ++k) {
        const std::size_t e = data_offset + 8 + 8 * k;
        if (e + 8 > data_offset + length) break;
        const auto key_id = r.read<std::uint16_t>(e, "GeoKey id");
        const auto location = r.read<std::uint16_t>(e + 2, "GeoKey location");
        const auto value = r.read<std::uint16_t>(e + 6, "GeoKey value");
        if (location != 0) continue;
        if (key_id == 3072 && value != 0 && value != 32767) return value; // ProjectedCSTypeGeoKey
        if (key_id == 2048 && value != 0 && value != 32767) geographic = value;
    }
    return geographic;
}

void check_within(double v, double lo, double hi, double tol, const char* field, std::size_t offset,
                  std::size_t index) {
    if (v < lo - tol || v > hi + tol)
        throw ParseError(field, offset,
                         "header bounds do not enclose point " + std::to_string(index) + " (coordinate " +
                             std::to_string(v) + ")");
}

} // namespace

std::uint64_t LasHeader::point_count() const noexcept {
    if (version_minor >= 4 && extended_point_count > 0) return extended_point_count;
    return legacy_point_count;
}

LasHeader parse_las_header(std::span<const std::byte> blob) {
    ByteReader r(blob);
    if (r.text(off::signature, 4, "file signature") != "LASF")
        throw ParseError("file signature", off::signature, "not a LAS file: signature is not 'LASF'");

    LasHeader h;
    h.version_major = r.read<std::uint8_t>(off::version_major, "version major");
    h.version_minor = r.read<std::uint8_t>(off::version_minor, "version minor");
    if (h.version_major != 1 || h.version_minor < 2 || h.version_minor > 4)
        throw UnsupportedFormatError("unsupported LAS version " + std::to_string(h.version_major) + "." +
                                     std::to_string(h.version_minor) + " (supported: 1.2 - 1.4)");

    h.header_size = r.read<std::uint16_t>(off::header_size, "header size");
    const std::size_t min_header = h.version_minor == 2 ? 227 : h.version_minor == 3 ? 235 : 375;
    if (h.header_size < min_header)
        throw ParseError("header size", off::header_size,
                         "header size " + std::to_string(h.header_size) + " is smaller than the " +
                             std::to_string(min_header) + " bytes required for LAS 1." +
                             std::to_string(h.version_minor));
    if (blob.size() < h.header_size)
        throw ParseError("header size", off::header_size,
                         "blob of " + std::to_string(blob.size()) + " bytes is shorter than the declared header");

    h.offset_to_point_data = r.read<std::uint32_t>(off::offset_to_points, "offset to point data");
    if (h.offset_to_point_data < h.header_size)
        throw ParseError("offset to point data", off::offset_to_points,
                         "point data offset " + std::to_string(h.offset_to_point_data) + " lies inside the header");
    h.number_of_vlrs = r.read<std::uint32_t>(off::number_of_vlrs, "number of variable length records");

    const auto raw_format = r.read<std::uint8_t>(off::point_format, "point data record format");
    if (raw_format & 0xC0)
        throw UnsupportedFormatError("LAZ-compressed point data (format byte " + std::to_string(raw_format) +
                                     ") is not supported; decompress to LAS first (e.g. with laszip or pdal)");
    h.point_format = raw_format;
    if (min_record_length(h.point_format) == 0)
        throw UnsupportedFormatError("unsupported point data record format " + std::to_string(h.point_format) +
                                     " (supported: 0, 1, 6, 7)");
    h.point_record_length = r.read<std::uint16_t>(off::record_length, "point data record length");
    if (h.point_record_length < min_record_length(h.point_format))
        throw ParseError("point data record length", off::record_length,
                         "record length " + std::to_string(h.point_record_length) + " is shorter than the " +
                             std::to_string(min_record_length(h.point_format)) + " bytes of format " +
                             std::to_string(h.point_format));

    h.legacy_point_count = r.read<std::uint32_t>(off::legacy_count, "legacy number of point records");
    static const char* scale_names[3] = {"x scale factor", "y scale factor", "z scale factor"};
    static const char* offset_names[3] = {"x offset", "y offset", "z offset"};
    for (std::size_t k = 0; k < 3; ++k) {
        h.scale[k] = r.read<double>(off::x_scale + 8 * k, scale_names[k]);
        h.offset[k] = r.read<double>(off::x_offset + 8 * k, offset_names[k]);
        if (!std::isfinite(h.scale[k]) || h.scale[k] == 0.0)
            throw ParseError(scale_names[k], off::x_scale + 8 * k, "scale factor must be finite and non-zero");
        if (!std::isfinite(h.offset[k]))
            throw ParseError(offset_names[k], off::x_offset + 8 * k, "offset must be finite");
    }
    h.max_x = r.read<double>(off::max_x, "max x");
    h.min_x = r.read<double>(off::min_x, "min x");
    h.max_y = r.read<double>(off::max_y, "max y");
    h.min_y = r.read<double>(off::min_y, "min y");
    h.max_z = r.read<double>(off::max_z, "max z");
    h.min_z = r.read<double>(off::min_z, "min z");
    if (h.version_minor >= 4)
        h.extended_point_count = r.read<std::uint64_t>(off::extended_count, "number of point records");
    if (h.point_format >= 6 && h.version_minor < 4)
        throw ParseError("point data record format", off::point_format,
                         "point format " + std::to_string(h.point_format) + " requires LAS 1.4");
    return h;
}

PointCloud parse_las(std::span<const std::byte> blob, int default_crs) {
    const LasHeader h = parse_las_header(blob);
    ByteReader r(blob);

    int crs = 0;
    std::size_t pos = h.header_size;
    for (std::uint32_t v = 0; v < h.number_of_vlrs; ++v) {
        if (pos + kVlrHeaderSize > h.offset_to_point_data)
            throw ParseError("variable length record header", pos,
                             "VLR " + std::to_string(v) + " runs past the point data offset");
        const std::string user = r.text(pos + 2, 16, "VLR user id");
        const auto record_id = r.read<std::uint16_t>(pos + 18, "VLR record id");
        const auto length = r.read<std::uint16_t>(pos + 20, "VLR record length after header");
        const std::size_t data = pos + kVlrHeaderSize;
        if (data + length > h.offset_to_point_data)
            throw ParseError("VLR record length after header", pos + 20,
                             "VLR " + std::to_string(v) + " payload runs past the point data offset");
        if (user == "LASF_Projection" && record_id == 34735) crs = crs_from_geokeys(r, data, length);
        pos = data + length;
    }

    const std::uint64_t count = h.point_count();
    const std::uint64_t expected = count * h.point_record_length;
    const std::uint64_t available =
        blob.size() > h.offset_to_point_data ? blob.size() - h.offset_to_point_data : 0;
    if (available < expected) throw TruncationError("truncated LAS point block", expected, available);

    PointCloud cloud;
    cloud.crs_code = crs != 0 ? crs : default_crs;
    cloud.points.resize(count);
    const bool extended = h.point_format >= 6;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t base = h.offset_to_point_data + i * h.point_record_length;
        PointRecord& p = cloud.points[i];
        p.x = r.read<std::int32_t>(base + 0, "point X") * h.scale[0] + h.offset[0];
        p.y = r.read<std::int32_t>(base + 4, "point Y") * h.scale[1] + h.offset[1];
        p.z = r.read<std::int32_t>(base + 8, "point Z") * h.scale[2] + h.offset[2];
        p.intensity = r.read<std::uint16_t>(base + 12, "point intensity");
        const auto flags = r.read<std::uint8_t>(base + 14, "point return flags");
        std::uint8_t ret = 0;
        if (extended) {
            ret = flags & 0x0F;
            p.classification = r.read<std::uint8_t>(base + 16, "point classification");
        } else {
            ret = flags & 0x07;
            p.classification = r.read<std::uint8_t>(base + 15, "point classification") & 0x1F;
        }
        // Return number 0 occurs in sloppily written files; treat it as a first return.
        p.return_number = ret == 0 ? 1 : ret;
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw ParseError("point record", base, "point " + std::to_string(i) + " has non-finite coordinates");
    }

    Bounds header_bounds{h.min_x, h.min_y, h.max_x, h.max_y};
    if (cloud.points.empty()) {
        cloud.bounds = header_bounds;
        return cloud;
    }
    const double tol_x = 0.5 * std::abs(h.scale[0]) + 1e-9 * std::max(std::abs(h.max_x), std::abs(h.min_x));
    const double tol_y = 0.5 * std::abs(h.scale[1]) + 1e-9 * std::max(std::abs(h.max_y), std::abs(h.min_y));
    const double tol_z = 0.5 * std::abs(h.scale[2]) + 1e-9 * std::max(std::abs(h.max_z), std::abs(h.min_z));
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const auto& p = cloud.points[i];
        check_within(p.x, h.min_x, h.max_x, tol_x, p.x < h.min_x ? "min x" : "max x",
                     p.x < h.min_x ? off::min_x : off::max_x, i);
        check_within(p.y, h.min_y, h.max_y, tol_y, p.y < h.min_y ? "min y" : "max y",
                     p.y < h.min_y ? off::min_y : off::max_y, i);
        check_within(p.z, h.min_z, h.max_z, tol_z, p.z < h.min_z ? "min z" : "max z",
                     p.z < h.min_z ? off::min_z : off::max_z, i);
    }
    // Header extents are rounded to the coordinate quantum; widen to the exact points.
    const Bounds tight = compute_bounds(cloud.points);
    cloud.bounds = {std::min(h.min_x, tight.min_x), std::min(h.min_y, tight.min_y),
                    std::max(h.max_x, tight.max_x), std::max(h.max_y, tight.max_y)};
    return cloud;
}

PointCloud read_las_file(const std::filesystem::path& path, int default_crs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_las(std::as_bytes(std::span<const char>(bytes)), default_crs);
}

PointCloud read_point_cloud(const std::filesystem::path& path, int default_crs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    char sig[4] = {};
    in.read(sig, 4);
    const bool is_las = in.gcount() == 4 && std::memcmp(sig, "LASF", 4) == 0;
    in.close();
    if (path.extension() == ".laz")
        throw UnsupportedFormatError("LAZ-compressed input '" + path.string() +
                                     "' is not supported; decompress to LAS first (e.g. with laszip or pdal)");
    if (is_las) return read_las_file(path, default_crs);
    std::ifstream text(path);
    return parse_xyz_text(text, default_crs);
}

} // namespace canopyforge
