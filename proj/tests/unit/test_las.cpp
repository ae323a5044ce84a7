#include <canopyforge/error.hpp>
#include <canopyforge/las.hpp>

#include "support/fixtures.hpp"
#include "support/las_builder.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace canopyforge;
using canopyforge::testing::LasBuilder;
using canopyforge::testing::LasPoint;

namespace {

LasBuilder three_point_fixture() {
    LasBuilder b;
    b.points = {{100, 200, 1500, 10, 1, 2}, {-250, 4000, 2210, 20, 2, 5}, {12345, -678, 0, 30, 3, 1}};
    return b;
}

std::span<const std::byte> view(const std::vector<std::byte>& v) { return {v.data(), v.size()}; }

} // namespace

TEST(LasReader, DecodesHandBuiltFormat0) {
    const auto blob = three_point_fixture().build();
    const PointCloud c = parse_las(view(blob));
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c.points[0].x, 100 * 0.01);
    EXPECT_EQ(c.points[0].y, 200 * 0.01);
    EXPECT_EQ(c.points[0].z, 1500 * 0.01);
    EXPECT_DOUBLE_EQ(c.points[0].x, 1.0);
    EXPECT_DOUBLE_EQ(c.points[0].z, 15.0);
    EXPECT_EQ(c.points[0].classification, 2);
    EXPECT_EQ(c.points[1].return_number, 2);
    EXPECT_EQ(c.points[1].classification, 5);
    EXPECT_EQ(c.points[2].x, 12345 * 0.01);
    EXPECT_EQ(c.points[2].y, -678 * 0.01);
    EXPECT_EQ(c.points[2].intensity, 30);
    EXPECT_EQ(c.crs_code, kDefaultCrs);
}

TEST(LasReader, OffsetsAndScalesApplied) {
    LasBuilder b;
    b.scale = {0.001, 0.002, 0.0005};
    b.offset = {400000.0, 5600000.0, 100.0};
    b.points = {{1, 2, 3}, {-7, 123456, 99}};
    const PointCloud c = parse_las(view(b.build()));
    EXPECT_EQ(c.points[0].x, 1 * 0.001 + 400000.0);
    EXPECT_EQ(c.points[1].y, 123456 * 0.002 + 5600000.0);
    EXPECT_EQ(c.points[1].z, 99 * 0.0005 + 100.0);
}

TEST(LasReader, ExtendedFormatsOn14) {
    for (std::uint8_t fmt : {std::uint8_t{6}, std::uint8_t{7}}) {
        LasBuilder b = three_point_fixture();
        b.version_minor = 4;
        b.point_format = fmt;
        b.points[2].return_number = 11;
        b.points[2].classification = 40;
        b.extended_count_only = true;
        const PointCloud c = parse_las(view(b.build()));
        ASSERT_EQ(c.size(), 3u) << int(fmt);
        EXPECT_EQ(c.points[2].return_number, 11);
        EXPECT_EQ(c.points[2].classification, 40);
        EXPECT_EQ(c.points[1].x, -250 * 0.01);
    }
}

TEST(LasReader, Format1WithPaddedRecords) {
    LasBuilder b = three_point_fixture();
    b.point_format = 1;
    b.record_length = 34;
    b.version_minor = 3;
    const PointCloud c = parse_las(view(b.build()));
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c.points[2].x, 12345 * 0.01);
}

TEST(LasReader, EmptyPointBlock) {
    LasBuilder b;
    b.override_bounds = true;
    b.bounds = {10, 0, 20, 5, 3, 1};
    const PointCloud c = parse_las(view(b.build()));
    EXPECT_TRUE(c.empty());
    EXPECT_EQ(c.bounds, (Bounds{0.0, 5.0, 10.0, 20.0}));
}

TEST(LasReader, BadSignatureNamesField) {
    auto blob = three_point_fixture().build();
    std::memcpy(blob.data(), "XXXX", 4);
    try {
        parse_las(view(blob));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.field(), "file signature");
    }
}

TEST(LasReader, UnsupportedVersionAndFormat) {
    LasBuilder b = three_point_fixture();
    auto blob = b.build();
    blob[25] = std::byte{1};
    EXPECT_THROW(parse_las(view(blob)), UnsupportedFormatError);

    b.point_format = 3;
    b.record_length = 34;
    EXPECT_THROW(parse_las(view(b.build())), UnsupportedFormatError);
}

TEST(LasReader, CompressedFormatBitRejected) {
    auto blob = three_point_fixture().build();
    blob[104] = std::byte{0x80};
    EXPECT_THROW(parse_las(view(blob)), UnsupportedFormatError);
}

TEST(LasReader, TruncatedPointBlockReportsBytes) {
    auto blob = three_point_fixture().build();
    blob.resize(blob.size() - 7);
    try {
        parse_las(view(blob));
        FAIL();
    } catch (const TruncationError& e) {
        EXPECT_EQ(e.expected_bytes(), 60u);
        EXPECT_EQ(e.actual_bytes(), 53u);
    }
}

TEST(LasReader, HeaderBoundsMustEnclosePoints) {
    LasBuilder b = three_point_fixture();
    b.override_bounds = true;
    b.bounds = {50, -3, 40, -7, 22.1, 0};
    try {
        parse_las(view(b.build()));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.field(), "max x");
    }
}

TEST(LasReader, MalformedHeaderFieldsNamed) {
    auto blob = three_point_fixture().build();
    auto bad = blob;
    LasBuilder::put<std::uint16_t>(bad, 94, 100);
    try {
        parse_las(view(bad));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.field(), "header size");
    }
    bad = blob;
    LasBuilder::put<double>(bad, 131, 0.0);
    try {
        parse_las(view(bad));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.field(), "x scale factor");
    }
    EXPECT_THROW(parse_las(view(std::vector<std::byte>(blob.begin(), blob.begin() + 100))), ParseError);
}

TEST(LasReader, CrsFromGeoKeys) {
    LasBuilder b = three_point_fixture();
    b.vlrs.push_back(LasBuilder::geokey_vlr(25832));
    const PointCloud c = parse_las(view(b.build()));
    EXPECT_EQ(c.crs_code, 25832);
    EXPECT_EQ(c.points[0].z, 1500 * 0.01);
}

TEST(LasReader, VlrOverrunRejected) {
    LasBuilder b = three_point_fixture();
    b.vlrs.push_back(LasBuilder::geokey_vlr(25833));
    auto blob = b.build();
    LasBuilder::put<std::uint16_t>(blob, 227 + 20, 4000);
    EXPECT_THROW(parse_las(view(blob)), ParseError);
}

TEST(LasReader, FileSniffingAndLazRejection) {
    canopyforge::testing::TempDir dir;
    const auto blob = three_point_fixture().build();
    {
        std::ofstream f(dir / "a.las", std::ios::binary);
        f.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
        std::ofstream t(dir / "b.txt");
        t << "1 2 3\n";
        std::ofstream z(dir / "c.laz", std::ios::binary);
        z.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
    }
    EXPECT_EQ(read_point_cloud(dir / "a.las").size(), 3u);
    EXPECT_EQ(read_point_cloud(dir / "b.txt").size(), 1u);
    EXPECT_THROW(read_point_cloud(dir / "c.laz"), UnsupportedFormatError);
    EXPECT_THROW(read_point_cloud(dir / "missing.las"), IoError);
}
