#include <canopyforge/error.hpp>
#include <canopyforge/losses.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace canopyforge;

namespace {

Tensor map2(std::size_t h, std::size_t w, std::vector<double> v) {
    Tensor t({h, w});
    t.data = std::move(v);
    return t;
}

Tensor random_map(std::size_t h, std::size_t w, std::mt19937_64& rng, double lo = -3.0, double hi = 3.0) {
    Tensor t({h, w});
    std::uniform_real_distribution<double> u(lo, hi);
    for (auto& v : t.data) v = u(rng);
    return t;
}

Tensor random_feat(std::size_t c, std::size_t h, std::size_t w, std::mt19937_64& rng) {
    Tensor t({c, h, w});
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& v : t.data) v = n(rng);
    return t;
}

StructureMaps random_maps(std::size_t h, std::size_t w, std::mt19937_64& rng) {
    return {random_map(h, w, rng), random_map(h, w, rng), random_map(h, w, rng)};
}

Mask random_mask(std::size_t h, std::size_t w, std::mt19937_64& rng) {
    Mask m(h, w);
    std::bernoulli_distribution b(0.75);
    for (auto& v : m.valid) v = b(rng) ? 1 : 0;
    m.valid[0] = 1;
    m.valid[1] = 1;
    return m;
}

StudentLossInputs random_student_inputs(std::mt19937_64& rng) {
    StudentLossInputs in;
    in.student = random_maps(8, 8, rng);
    in.teacher = random_maps(8, 8, rng);
    in.target = random_maps(8, 8, rng);
    in.mask = random_mask(8, 8, rng);
    in.student_feat = random_feat(4, 8, 8, rng);
    in.teacher_feat = random_feat(3, 8, 8, rng);
    in.teacher_vert_feat = random_feat(3, 4, 4, rng);
    in.proj = random_feat(3, 4, 1, rng);
    in.proj.shape = {3, 4};
    in.down_factor = 2;
    return in;
}

} // namespace

TEST(MaskedHuber, Examples) {
    const Mask one(1, 1);
    EXPECT_EQ(masked_huber(map2(1, 1, {0.5}), map2(1, 1, {0.0}), one).total, 0.125);
    const LossResult lin = masked_huber(map2(1, 1, {2.0}), map2(1, 1, {0.0}), one);
    EXPECT_EQ(lin.total, 1.5);
    EXPECT_EQ(lin.grads.at("pred")[0], 1.0);

    std::mt19937_64 rng(1);
    const Tensor p = random_map(6, 6, rng);
    const LossResult same = masked_huber(p, p, Mask(6, 6));
    EXPECT_EQ(same.total, 0.0);
    for (double g : same.grads.at("pred").data) EXPECT_EQ(g, 0.0);
}

TEST(MaskedHuber, Rejections) {
    EXPECT_THROW(masked_huber(map2(1, 1, {1.0}), map2(1, 1, {0.0}), Mask(1, 1, false)), PreconditionError);
    EXPECT_THROW(masked_huber(map2(1, 2, {1.0, 2.0}), map2(1, 1, {0.0}), Mask(1, 2)), PreconditionError);
}

TEST(MaskedL1, MeanAbsolute) {
    Mask m(1, 3);
    m.valid[2] = 0;
    const LossResult r = masked_l1(map2(1, 3, {1.0, -2.0, 100.0}), map2(1, 3, {0.0, 0.0, 0.0}), m);
    EXPECT_EQ(r.total, 1.5);
    EXPECT_EQ(r.grads.at("pred")[0], 0.5);
    EXPECT_EQ(r.grads.at("pred")[1], -0.5);
    EXPECT_EQ(r.grads.at("pred")[2], 0.0);
}

TEST(GradientLoss, Examples) {
    EXPECT_EQ(gradient_loss(map2(1, 2, {0.0, 2.0}), map2(1, 2, {0.0, 0.0}), Mask(1, 2)).total, 2.0);

    std::mt19937_64 rng(2);
    const Tensor p = random_map(5, 7, rng);
    const Tensor t = random_map(5, 7, rng);
    EXPECT_EQ(gradient_loss(p, p, Mask(5, 7)).total, 0.0);

    Tensor shifted = p;
    for (auto& v : shifted.data) v += 3.0;
    EXPECT_NEAR(gradient_loss(shifted, p, Mask(5, 7)).total, 0.0, 1e-14);
    EXPECT_NEAR(gradient_loss(shifted, t, Mask(5, 7)).total, gradient_loss(p, t, Mask(5, 7)).total, 1e-12);
}

TEST(GradientLoss, NoValidPairThrows) {
    Mask m(2, 2, false);
    m.valid[0] = 1;
    m.valid[3] = 1;
    EXPECT_THROW(gradient_loss(Tensor({2, 2}), Tensor({2, 2}), m), PreconditionError);
}

TEST(TeacherLoss, Examples) {
    std::mt19937_64 rng(3);
    const StructureMaps y = random_maps(6, 6, rng);
    const Mask m(6, 6);
    EXPECT_EQ(teacher_loss(y, y, m).total, 0.0);

    StructureMaps off = y;
    for (auto& v : off.pai.data) v += 2.5;
    const LossResult r = teacher_loss(off, y, m);
    EXPECT_NEAR(r.total, 2.0, 1e-12);
    EXPECT_EQ(r.terms.at("grad_chm"), 0.0);
}

TEST(TeacherLoss, UnitComponentsGiveThreePointOne) {
    const Mask m(1, 2);
    StructureMaps pred{map2(1, 2, {1.0, 2.0}), map2(1, 2, {1.5, 1.5}), map2(1, 2, {1.5, 1.5})};
    StructureMaps target{map2(1, 2, {0.0, 0.0}), map2(1, 2, {0.0, 0.0}), map2(1, 2, {0.0, 0.0})};
    const LossResult r = teacher_loss(pred, target, m);
    for (const char* t : {"huber_chm", "huber_pai", "huber_fhd", "grad_chm"}) EXPECT_EQ(r.terms.at(t), 1.0) << t;
    EXPECT_NEAR(r.total, 3.1, 1e-12);
    EXPECT_NEAR(r.total, r.weighted_sum(), 1e-12);
}

TEST(TeacherLoss, ConfigValidation) {
    TeacherLossConfig c;
    c.huber_delta = 0.0;
    EXPECT_THROW(c.validate(), PreconditionError);
    c.huber_delta = 1.0;
    c.lambda_grad = -0.1;
    EXPECT_THROW(c.validate(), PreconditionError);
}

TEST(KdOutputLosses, Examples) {
    const Mask one(1, 1);
    const Tensor z = map2(1, 1, {0.0});
    const StructureMaps student{map2(1, 1, {1.0}), z, z};
    const StructureMaps teacher{map2(1, 1, {0.5}), z, z};
    const StructureMaps target{z, z, z};
    const LossResult r = kd_output_losses(student, teacher, target, one);
    EXPECT_EQ(r.terms.at("out"), 1.0);
    EXPECT_EQ(r.terms.at("kd"), 0.125);

    const LossResult ind = kd_output_losses(target, teacher, target, one);
    EXPECT_EQ(ind.terms.at("out"), 0.0);
    EXPECT_GT(ind.terms.at("kd"), 0.0);
    EXPECT_EQ(ind.grads.count("teacher"), 0u);
}

TEST(FeatureDistill, Examples) {
    Tensor s({1, 1, 1}, 2.0), t({1, 1, 1}, 5.0), p({1, 1}, 3.0);
    const LossResult r = feature_distill_loss(s, t, p);
    EXPECT_EQ(r.total, 1.0);
    EXPECT_EQ(r.grads.at("student_feat")[0], 6.0);
    EXPECT_EQ(r.grads.at("proj")[0], 4.0);

    std::mt19937_64 rng(4);
    const Tensor f = random_feat(3, 4, 5, rng);
    Tensor eye({3, 3});
    for (std::size_t i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
    EXPECT_EQ(feature_distill_loss(f, f, eye).total, 0.0);

    const Tensor teacher = random_feat(2, 4, 5, rng);
    double mean_sq = 0.0;
    for (double v : teacher.data) mean_sq += v * v;
    mean_sq /= static_cast<double>(teacher.size());
    EXPECT_NEAR(feature_distill_loss(f, teacher, Tensor({2, 3})).total, mean_sq, 1e-14);
}

TEST(FeatureDistill, Rejections) {
    EXPECT_THROW(feature_distill_loss(Tensor({2, 4, 4}), Tensor({3, 4, 5}), Tensor({3, 2})), PreconditionError);
    EXPECT_THROW(feature_distill_loss(Tensor({2, 4, 4}), Tensor({3, 4, 4}), Tensor({2, 3})), PreconditionError);
}

TEST(VerticalProxy, Examples) {
    Tensor s({1, 2, 2});
    s.data = {0.0, 0.0, 4.0, 4.0};
    EXPECT_EQ(vertical_proxy_loss(s, Tensor({1, 1, 1}, 2.0), Tensor({1, 1}, 1.0), 2).total, 0.0);

    std::mt19937_64 rng(5);
    const Tensor f = random_feat(3, 4, 4, rng);
    const Tensor t = random_feat(2, 4, 4, rng);
    const Tensor p = random_feat(2, 3, 1, rng);
    Tensor proj = p;
    proj.shape = {2, 3};
    const LossResult a = vertical_proxy_loss(f, t, proj, 1);
    const LossResult b = feature_distill_loss(f, t, proj);
    EXPECT_EQ(a.total, b.total);
    EXPECT_EQ(a.grads.at("student_feat").data, b.grads.at("student_feat").data);

    const Tensor c1({3, 4, 4}, 0.7);
    const Tensor tv({2, 2, 2}, 0.3);
    const Tensor tf({2, 4, 4}, 0.3);
    EXPECT_NEAR(vertical_proxy_loss(c1, tv, proj, 2).total, feature_distill_loss(c1, tf, proj).total, 1e-15);

    EXPECT_THROW(vertical_proxy_loss(Tensor({1, 3, 3}), Tensor({1, 1, 1}), Tensor({1, 1}), 2), PreconditionError);
}

TEST(AveragePool, BlockMeans) {
    Tensor s({1, 2, 4});
    s.data = {1, 2, 3, 4, 5, 6, 7, 8};
    const Tensor p = average_pool(s, 2);
    ASSERT_EQ(p.shape, (std::vector<std::size_t>{1, 1, 2}));
    EXPECT_EQ(p[0], 3.5);
    EXPECT_EQ(p[1], 5.5);
}

TEST(StudentTotal, UnitComponentsGiveOnePointSeven) {
    StudentLossInputs in;
    const Tensor z = map2(1, 1, {0.0});
    in.student = {map2(1, 1, {1.0}), z, z};
    in.teacher = {map2(1, 1, {-0.5}), z, z};
    in.target = {z, z, z};
    in.mask = Mask(1, 1);
    in.student_feat = Tensor({1, 1, 1}, 2.0);
    in.teacher_feat = Tensor({1, 1, 1}, 5.0);
    in.teacher_vert_feat = Tensor({1, 1, 1}, 7.0);
    in.proj = Tensor({1, 1}, 3.0);
    const StudentLossConfig cfg;
    const LossResult r = student_total_loss(in, cfg, cfg.warmup_epochs);
    for (const char* t : {"out", "kd", "feat", "vert"}) EXPECT_EQ(r.terms.at(t), 1.0) << t;
    EXPECT_EQ(r.weights.at("kd"), 0.5);
    EXPECT_NEAR(r.total, 1.7, 1e-12);

    const LossResult warm = student_total_loss(in, cfg, 0);
    EXPECT_EQ(warm.weights.at("kd"), 0.0);
    EXPECT_NEAR(warm.total, 1.2, 1e-12);
}

TEST(StudentTotal, ZeroComponentsGiveZero) {
    std::mt19937_64 rng(6);
    StudentLossInputs in = random_student_inputs(rng);
    in.teacher = in.student;
    in.target = in.student;
    in.student_feat = Tensor({4, 8, 8});
    in.teacher_feat = Tensor({3, 8, 8});
    in.teacher_vert_feat = Tensor({3, 4, 4});
    EXPECT_EQ(student_total_loss(in, {}, 10).total, 0.0);
}

TEST(StudentTotal, WarmupIgnoresTeacherExactly) {
    std::mt19937_64 rng(7);
    const StudentLossInputs base = random_student_inputs(rng);
    const StudentLossConfig cfg;
    const LossResult ref = student_total_loss(base, cfg, 0);
    for (int trial = 0; trial < 20; ++trial) {
        StudentLossInputs in = base;
        in.teacher = random_maps(8, 8, rng);
        const LossResult r = student_total_loss(in, cfg, cfg.warmup_epochs - 1);
        EXPECT_EQ(r.total, ref.total);
        for (const auto& [k, g] : ref.grads) EXPECT_EQ(r.grads.at(k).data, g.data) << k;
    }
    StudentLossInputs moved = base;
    moved.teacher = random_maps(8, 8, rng);
    EXPECT_NE(student_total_loss(moved, cfg, cfg.warmup_epochs).total, student_total_loss(base, cfg, cfg.warmup_epochs).total);
}

TEST(StudentTotal, LinearInWeights) {
    std::mt19937_64 rng(8);
    const StudentLossInputs in = random_student_inputs(rng);
    StudentLossConfig cfg;
    const LossResult a = student_total_loss(in, cfg, 10);
    cfg.w_feat *= 2.0;
    const LossResult b = student_total_loss(in, cfg, 10);
    EXPECT_EQ(a.terms.at("feat"), b.terms.at("feat"));
    EXPECT_NEAR(b.total - a.total, 0.1 * a.terms.at("feat"), 1e-12);
    EXPECT_NEAR(a.total, a.weighted_sum(), 1e-12);
}

TEST(StudentTotal, ConfigValidation) {
    StudentLossConfig c;
    c.w_sup = 0.0;
    EXPECT_THROW(c.validate(), PreconditionError);
    c.w_sup = 1.0;
    c.warmup_epochs = -1;
    EXPECT_THROW(c.validate(), PreconditionError);
    c.warmup_epochs = 5;
    c.w_kd = -0.5;
    EXPECT_THROW(c.validate(), PreconditionError);
}

TEST(Masking, MaskedPixelsAreInert) {
    std::mt19937_64 rng(9);
    const StructureMaps p = random_maps(8, 8, rng);
    const StructureMaps t = random_maps(8, 8, rng);
    const StructureMaps k = random_maps(8, 8, rng);
    const Mask m = random_mask(8, 8, rng);
    const LossResult ta = teacher_loss(p, t, m);
    const LossResult ka = kd_output_losses(p, k, t, m);
    StructureMaps flipped = p;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (!m.valid[i]) {
            flipped.chm[i] = 1e6;
            flipped.pai[i] = -1e6;
            flipped.fhd[i] = 42.0;
        }
    const LossResult tb = teacher_loss(flipped, t, m);
    const LossResult kb = kd_output_losses(flipped, k, t, m);
    EXPECT_EQ(ta.total, tb.total);
    EXPECT_EQ(ta.terms, tb.terms);
    EXPECT_EQ(ka.total, kb.total);
    for (const auto& [key, g] : ta.grads) EXPECT_EQ(tb.grads.at(key).data, g.data) << key;
    for (const auto& [key, g] : ka.grads) EXPECT_EQ(kb.grads.at(key).data, g.data) << key;
}

TEST(LossResult, WeightedSumSkipsZeroWeights) {
    LossResult r;
    r.terms = {{"a", 2.0}, {"b", std::numeric_limits<double>::infinity()}};
    r.weights = {{"a", 1.5}, {"b", 0.0}};
    EXPECT_EQ(r.weighted_sum(), 3.0);
}
