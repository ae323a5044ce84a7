#include <canopyforge/error.hpp>
#include <canopyforge/raster.hpp>

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace canopyforge;
using canopyforge::testing::constant_raster;
using canopyforge::testing::make_grid;
using canopyforge::testing::random_raster;

TEST(GridSpec, LocateUsesTopLeftOrigin) {
    const GridSpec g = make_grid(4, 3);
    EXPECT_EQ(g.locate(0.5, 2.5), (CellIndex{0, 0}));
    EXPECT_EQ(g.locate(3.5, 0.5), (CellIndex{2, 3}));
    EXPECT_EQ(g.locate(4.0, 0.0), (CellIndex{2, 3}));
    EXPECT_EQ(g.locate(1.0, 2.0), (CellIndex{1, 1}));
    EXPECT_FALSE(g.locate(-0.1, 1.0));
    EXPECT_FALSE(g.locate(1.0, 3.1));
}

TEST(GridSpec, CoveringSnapsToCellMultiples) {
    const GridSpec g = GridSpec::covering({10.3, 20.7, 15.2, 25.0}, 1.0);
    EXPECT_EQ(g.origin_x, 10.0);
    EXPECT_EQ(g.origin_y, 25.0);
    EXPECT_EQ(g.width, 6);
    EXPECT_EQ(g.height, 5);
    EXPECT_TRUE(g.locate(15.2, 20.7).has_value());
}

TEST(GridSpec, ValidateRejectsDegenerate) {
    GridSpec g = make_grid(2, 2);
    g.cell_size = 0.0;
    EXPECT_THROW(g.validate(), PreconditionError);
    g = make_grid(2, 2);
    g.width = 0;
    EXPECT_THROW(g.validate(), PreconditionError);
}

TEST(Alignment, CompatibilityRule) {
    const GridSpec a = make_grid(10, 10, 1.0, 0.0, 10.0);
    GridSpec b = make_grid(50, 50, 0.2, 2.0, 9.0);
    EXPECT_TRUE(alignment_compatible(a, b));
    b.origin_x = 2.1;
    EXPECT_FALSE(alignment_compatible(a, b));
    b = make_grid(10, 10, 0.3, 0.0, 10.0);
    EXPECT_FALSE(alignment_compatible(a, b));
}

TEST(AlignToReference, IdentityAndShift) {
    std::mt19937_64 rng(1);
    const MetricRaster src = random_raster(make_grid(5, 4), rng, 0.0);
    const MetricRaster same = align_to_reference(src, src.grid);
    EXPECT_EQ(same.values, src.values);

    GridSpec shifted = src.grid;
    shifted.origin_x += 1.0;
    const MetricRaster out = align_to_reference(src, shifted);
    for (std::int64_t r = 0; r < 4; ++r) {
        for (std::int64_t c = 0; c < 4; ++c) EXPECT_EQ(out.at(r, c), src.at(r, c + 1));
        EXPECT_FALSE(out.is_valid(shifted.flat(r, 4)));
    }
}

TEST(AlignToReference, Idempotent) {
    std::mt19937_64 rng(2);
    const MetricRaster src = random_raster(make_grid(6, 6, 1.0, 3.0, 20.0), rng);
    const GridSpec ref = make_grid(40, 40, 0.2, 2.0, 21.0);
    const MetricRaster once = align_to_reference(src, ref);
    const MetricRaster twice = align_to_reference(once, ref);
    EXPECT_EQ(once.nodata, twice.nodata);
    for (std::size_t i = 0; i < once.values.size(); ++i)
        if (once.is_valid(i)) EXPECT_EQ(once.values[i], twice.values[i]);
}

TEST(AlignToReference, FinerSourceIsBlockMeaned) {
    MetricRaster src(make_grid(2, 2, 0.5, 0.0, 1.0), "chm");
    src.set(0, 1.0);
    src.set(1, 2.0);
    src.set(2, 3.0);
    src.set_nodata(3);
    const MetricRaster out = align_to_reference(src, make_grid(1, 1, 1.0, 0.0, 1.0));
    EXPECT_DOUBLE_EQ(out.values[0], 2.0);
}

TEST(AlignToReference, Rejections) {
    const MetricRaster src = constant_raster(make_grid(3, 3), 1.0);
    GridSpec other = src.grid;
    other.crs_code = 25832;
    EXPECT_THROW(align_to_reference(src, other), AlignmentError);
    other = src.grid;
    other.origin_x += 0.5;
    try {
        align_to_reference(src, other);
        FAIL();
    } catch (const AlignmentError& e) {
        EXPECT_NE(std::string(e.what()).find("residual"), std::string::npos);
    }
}

TEST(Resample, ConstantInvariance) {
    const MetricRaster src = constant_raster(make_grid(3, 2), 7.0);
    for (auto m : {ResampleMethod::nearest, ResampleMethod::bilinear}) {
        const MetricRaster out = resample(src, 0.2, m);
        EXPECT_EQ(out.grid.width, 15);
        EXPECT_EQ(out.grid.height, 10);
        for (double v : out.values) EXPECT_EQ(v, 7.0);
        EXPECT_EQ(out.metadata.at("resample_method"), to_string(m));
    }
}

TEST(Resample, NearestCopiesContainingCell) {
    const MetricRaster src = constant_raster(make_grid(1, 1), 3.0);
    const MetricRaster out = resample(src, 0.2, ResampleMethod::nearest);
    ASSERT_EQ(out.values.size(), 25u);
    for (double v : out.values) EXPECT_EQ(v, 3.0);
}

TEST(Resample, BilinearMidpoint) {
    MetricRaster src(make_grid(2, 1), "chm");
    src.set(0, 0.0);
    src.set(1, 10.0);
    EXPECT_EQ(bilinear_sample(src, 1.0, 0.5).value(), 5.0);
    EXPECT_EQ(bilinear_sample(src, 0.5, 0.5).value(), 0.0);
    EXPECT_FALSE(bilinear_sample(src, 5.0, 0.5).has_value());
}

TEST(Resample, BilinearBoundedByNeighbours) {
    std::mt19937_64 rng(4);
    const MetricRaster src = random_raster(make_grid(6, 5), rng, 0.2);
    const MetricRaster out = resample(src, 0.25, ResampleMethod::bilinear);
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < src.values.size(); ++i)
        if (src.is_valid(i)) {
            lo = std::min(lo, src.values[i]);
            hi = std::max(hi, src.values[i]);
        }
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (!out.is_valid(i)) continue;
        EXPECT_GE(out.values[i], lo);
        EXPECT_LE(out.values[i], hi);
    }
}

TEST(Resample, NearestThenModeIsIdentity) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const MetricRaster src = random_raster(make_grid(7, 5), rng, 0.15);
        const MetricRaster fine = resample(src, 0.2, ResampleMethod::nearest);
        const MetricRaster back = block_downsample(fine, 5, BlockStatistic::mode);
        EXPECT_EQ(back.grid, src.grid);
        EXPECT_EQ(back.nodata, src.nodata);
        for (std::size_t i = 0; i < src.values.size(); ++i)
            if (src.is_valid(i)) EXPECT_EQ(back.values[i], src.values[i]);
    }
}

TEST(Resample, NonIntegerRatioRejected) {
    const MetricRaster src = constant_raster(make_grid(2, 2), 1.0);
    EXPECT_THROW(resample(src, 0.3, ResampleMethod::nearest), PreconditionError);
    EXPECT_THROW(parse_resample_method("cubic"), PreconditionError);
}

TEST(ValidityMask, Conjunction) {
    const GridSpec g = make_grid(3, 3);
    MetricRaster a = constant_raster(g, 1.0, "a");
    MetricRaster b = constant_raster(g, 2.0, "b");
    std::vector<MetricRaster> rs{a, b};
    MaskRaster m = build_validity_mask(rs);
    EXPECT_EQ(m.valid_count(), 9u);
    rs[1].set_nodata(4);
    m = build_validity_mask(rs);
    EXPECT_EQ(m.valid[4], 0);
    EXPECT_EQ(m.valid_count(), 8u);
    EXPECT_THROW(build_validity_mask(std::vector<MetricRaster>{}), PreconditionError);
    rs[1].grid.origin_x = 1.0;
    EXPECT_THROW(build_validity_mask(rs), GridMismatchError);
}
