#include <canopyforge/error.hpp>
#include <canopyforge/pointcloud.hpp>

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace canopyforge;

TEST(XyzText, ReadsPointsWithDefaultClassification) {
    const PointCloud c = parse_xyz_text(std::string_view("1.0 2.0 3.0 2\n4 5 6"));
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c.points[0].classification, 2);
    EXPECT_EQ(c.points[1].classification, 1);
    EXPECT_DOUBLE_EQ(c.points[1].z, 6.0);
    EXPECT_EQ(c.bounds, (Bounds{1.0, 2.0, 4.0, 5.0}));
}

TEST(XyzText, CommentOnlyInputIsEmptyCloudError) {
    EXPECT_THROW(parse_xyz_text(std::string_view("# comment\n")), InputError);
}

TEST(XyzText, NonNumericTokenReportsLine) {
    try {
        parse_xyz_text(std::string_view("1 2 abc"));
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 1u);
    }
    try {
        parse_xyz_text(std::string_view("# header\n1 2 3\n4 5 x 2\n"));
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(XyzText, RejectsWrongColumnCount) {
    EXPECT_THROW(parse_xyz_text(std::string_view("1 2\n")), ParseError);
    EXPECT_THROW(parse_xyz_text(std::string_view("1 2 3 4 5\n")), ParseError);
}

TEST(XyzText, RoundTripAtTwelveDigits) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e5, 1e5);
    PointCloud c;
    for (int i = 0; i < 500; ++i) {
        PointRecord p;
        p.x = u(rng);
        p.y = u(rng);
        p.z = u(rng) * 1e-3;
        p.classification = static_cast<std::uint8_t>(i % 3);
        c.points.push_back(p);
    }
    c.bounds = compute_bounds(c.points);
    std::stringstream ss;
    write_xyz_text(c, ss);
    const PointCloud back = parse_xyz_text(ss);
    ASSERT_EQ(back.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_NEAR(back.points[i].x, c.points[i].x, std::abs(c.points[i].x) * 1e-11);
        EXPECT_NEAR(back.points[i].y, c.points[i].y, std::abs(c.points[i].y) * 1e-11);
        EXPECT_NEAR(back.points[i].z, c.points[i].z, std::abs(c.points[i].z) * 1e-11);
        EXPECT_EQ(back.points[i].classification, c.points[i].classification);
    }
}

TEST(PointDensity, DirectDivision) {
    PointCloud c;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) c.points.push_back({static_cast<double>(i), static_cast<double>(j), 0.0});
    c.bounds = {0.0, 0.0, 20.0, 20.0};
    EXPECT_DOUBLE_EQ(point_density(c), 1.0);
    EXPECT_DOUBLE_EQ(point_density(1, Bounds{0.0, 0.0, 1.0, 1.0}), 1.0);
}

TEST(PointDensity, PaperMeanDensity) {
    EXPECT_DOUBLE_EQ(point_density(15'820'000, Bounds{0.0, 0.0, 1000.0, 1000.0}), 15.82);
}

TEST(PointDensity, DegenerateBoundsRejected) {
    EXPECT_THROW(point_density(10, Bounds{0.0, 0.0, 0.0, 5.0}), PreconditionError);
}
