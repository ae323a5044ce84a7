#include <canopyforge/gradcheck.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace canopyforge;

TEST(GradCheck, StandardCasesPass) {
    const auto cases = standard_gradcheck_cases();
    ASSERT_EQ(cases.size(), 7u);
    for (const auto& c : cases) {
        const GradCheckResult r = finite_difference_check(c.kernel, c.inputs);
        EXPECT_LT(r.max_rel_error, 1e-5) << c.name;
        EXPECT_GE(r.coords_checked, 64u) << c.name;
    }
}

TEST(GradCheck, StableAcrossSeeds) {
    for (std::uint64_t seed : {1u, 7u, 99u})
        for (const auto& c : standard_gradcheck_cases(seed)) {
            GradCheckOptions o;
            o.seed = seed;
            EXPECT_LT(finite_difference_check(c.kernel, c.inputs, o).max_rel_error, 1e-5) << c.name << " " << seed;
        }
}

TEST(GradCheck, FeatureProjectionGradientIsTight) {
    for (const auto& c : standard_gradcheck_cases()) {
        if (c.name != "feature_distill_loss") continue;
        const GradCheckResult r = finite_difference_check(c.kernel, c.inputs);
        EXPECT_LT(r.per_input.at("proj"), 1e-6);
        EXPECT_TRUE(r.per_input.count("student_feat"));
    }
}

TEST(GradCheck, DetectsWrongGradient) {
    LossKernel k = [](const TensorMap& in) {
        LossResult r;
        const Tensor& x = in.at("x");
        Tensor g(x.shape);
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.total += x[i] * x[i];
            g[i] = 3.0 * x[i];
        }
        r.grads["x"] = g;
        return r;
    };
    Tensor x({4, 4});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 + 0.1 * static_cast<double>(i);
    const GradCheckResult r = finite_difference_check(k, {{"x", x}});
    EXPECT_NEAR(r.max_rel_error, 1.0 / 3.0, 1e-6);
    EXPECT_EQ(r.coords_checked, 16u);
}
