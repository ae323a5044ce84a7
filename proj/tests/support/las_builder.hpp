#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string>
#include <type_traits>
#include <vector>

namespace canopyforge::testing {

// Writes LAS files byte by byte, independently of the reader under test.
struct LasPoint {
    std::int32_t x = 0, y = 0, z = 0;
    std::uint16_t intensity = 0;
    std::uint8_t return_number = 1;
    std::uint8_t classification = 1;
};

struct LasVlr {
    std::string user_id;
    std::uint16_t record_id = 0;
    std::vector<std::byte> payload;
};

class LasBuilder {
public:
    std::uint8_t version_minor = 2;
    std::uint8_t point_format = 0;
    std::uint16_t record_length = 0; // 0: minimum for the format
    std::array<double, 3> scale{0.01, 0.01, 0.01};
    std::array<double, 3> offset{0.0, 0.0, 0.0};
    std::vector<LasPoint> points;
    std::vector<LasVlr> vlrs;
    bool override_bounds = false;
    std::array<double, 6> bounds{}; // max_x, min_x, max_y, min_y, max_z, min_z
    bool extended_count_only = false;

    static std::uint16_t min_record_length(std::uint8_t fmt) {
        switch (fmt) {
        case 0: return 20;
        case 1: return 28;
        case 6: return 30;
        case 7: return 36;
        default: return 20;
        }
    }

    std::uint16_t header_size() const { return version_minor == 2 ? 227 : version_minor == 3 ? 235 : 375; }

    static LasVlr geokey_vlr(std::uint16_t epsg) {
        LasVlr v;
        v.user_id = "LASF_Projection";
        v.record_id = 34735;
        const std::uint16_t words[] = {1, 1, 0, 1, 3072, 0, 1, epsg};
        for (auto w : words) {
            v.payload.push_back(static_cast<std::byte>(w & 0xFF));
            v.payload.push_back(static_cast<std::byte>(w >> 8));
        }
        return v;
    }

    std::vector<std::byte> build() const {
        const std::uint16_t rec = record_length ? record_length : min_record_length(point_format);
        std::size_t vlr_bytes = 0;
        for (const auto& v : vlrs) vlr_bytes += 54 + v.payload.size();
        const std::uint32_t point_offset = static_cast<std::uint32_t>(header_size() + vlr_bytes);
        std::vector<std::byte> out(point_offset + points.size() * rec, std::byte{0});

        std::memcpy(out.data(), "LASF", 4);
        put<std::uint8_t>(out, 24, 1);
        put<std::uint8_t>(out, 25, version_minor);
        put<std::uint16_t>(out, 94, header_size());
        put<std::uint32_t>(out, 96, point_offset);
        put<std::uint32_t>(out, 100, static_cast<std::uint32_t>(vlrs.size()));
        put<std::uint8_t>(out, 104, point_format);
        put<std::uint16_t>(out, 105, rec);
        put<std::uint32_t>(out, 107, extended_count_only ? 0u : static_cast<std::uint32_t>(points.size()));
        for (int k = 0; k < 3; ++k) {
            put<double>(out, 131 + 8 * k, scale[k]);
            put<double>(out, 155 + 8 * k, offset[k]);
        }
        std::array<double, 6> b = override_bounds ? bounds : computed_bounds();
        for (int k = 0; k < 6; ++k) put<double>(out, 179 + 8 * k, b[k]);
        if (version_minor >= 4) put<std::uint64_t>(out, 247, points.size());

        std::size_t pos = header_size();
        for (const auto& v : vlrs) {
            std::memcpy(out.data() + pos + 2, v.user_id.data(), std::min<std::size_t>(16, v.user_id.size()));
            put<std::uint16_t>(out, pos + 18, v.record_id);
            put<std::uint16_t>(out, pos + 20, static_cast<std::uint16_t>(v.payload.size()));
            std::copy(v.payload.begin(), v.payload.end(), out.begin() + static_cast<std::ptrdiff_t>(pos + 54));
            pos += 54 + v.payload.size();
        }
        for (std::size_t i = 0; i < points.size(); ++i) {
            const std::size_t base = point_offset + i * rec;
            const auto& p = points[i];
            put<std::int32_t>(out, base, p.x);
            put<std::int32_t>(out, base + 4, p.y);
            put<std::int32_t>(out, base + 8, p.z);
            put<std::uint16_t>(out, base + 12, p.intensity);
            if (point_format >= 6) {
                put<std::uint8_t>(out, base + 14, static_cast<std::uint8_t>((p.return_number & 0x0F) | 0x10));
                put<std::uint8_t>(out, base + 16, p.classification);
            } else {
                put<std::uint8_t>(out, base + 14, static_cast<std::uint8_t>((p.return_number & 0x07) | 0x08));
                put<std::uint8_t>(out, base + 15, p.classification & 0x1F);
            }
        }
        return out;
    }

    std::array<double, 6> computed_bounds() const {
        if (points.empty()) return {0, 0, 0, 0, 0, 0};
        std::array<double, 6> b{-1e300, 1e300, -1e300, 1e300, -1e300, 1e300};
        for (const auto& p : points) {
            const double c[3] = {p.x * scale[0] + offset[0], p.y * scale[1] + offset[1], p.z * scale[2] + offset[2]};
            for (int k = 0; k < 3; ++k) {
                b[2 * k] = std::max(b[2 * k], c[k]);
                b[2 * k + 1] = std::min(b[2 * k + 1], c[k]);
            }
        }
        return b;
    }

    template <typename T>
    static void put(std::vector<std::byte>& buf, std::size_t off, T v) {
        std::uint64_t bits = 0;
        if constexpr (std::is_floating_point_v<T>)
            bits = std::bit_cast<std::uint64_t>(static_cast<double>(v));
        else
            bits = static_cast<std::uint64_t>(v);
        for (std::size_t b = 0; b < sizeof(T); ++b) buf[off + b] = static_cast<std::byte>((bits >> (8 * b)) & 0xFF);
    }
};

} // namespace canopyforge::testing
