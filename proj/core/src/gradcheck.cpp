#include "canopyforge/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace canopyforge {

GradCheckResult finite_difference_check(const LossKernel& kernel, const TensorMap& inputs,
                                        const GradCheckOptions& opts) {
    GradCheckResult out;
    const LossResult base = kernel(inputs);
    std::mt19937_64 rng(opts.seed);
    TensorMap work = inputs;

    for (const auto& [name, tensor] : inputs) {
        auto g = base.grads.find(name);
        if (g == base.grads.end()) continue;
        std::vector<std::size_t> idx(tensor.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(std::min(idx.size(), opts.samples));

        double worst = 0.0;
        Tensor& x = work.at(name);
        for (std::size_t i : idx) {
            const double orig = x[i];
            x[i] = orig + opts.eps;
            const double fp = kernel(work).total;
            x[i] = orig - opts.eps;
            const double fm = kernel(work).total;
            x[i] = orig;
            const double numeric = (fp - fm) / (2.0 * opts.eps);
            const double analytic = g->second[i];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(analytic - numeric) / denom);
            ++out.coords_checked;
        }
        out.per_input[name] = worst;
        out.max_rel_error = std::max(out.max_rel_error, worst);
    }
    return out;
}

namespace {

struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
    double sign() { return uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0; }

    Tensor tensor(std::vector<std::size_t> shape, double a, double b) {
        Tensor t(std::move(shape));
        for (auto& v : t.data) v = uniform(a, b);
        return t;
    }

    // Huber residual on either side of delta = 1, never near the transition.
    double huber_residual() {
        return sign() * (uniform(0.0, 1.0) < 0.5 ? uniform(0.05, 0.9) : uniform(1.1, 3.0));
    }
    double l1_residual() { return sign() * uniform(0.1, 2.0); }

    Mask mask(std::size_t h, std::size_t w) {
        Mask m(h, w);
        for (auto& v : m.valid) v = uniform(0.0, 1.0) < 0.8 ? 1 : 0;
        return m;
    }
};

constexpr std::size_t kH = 16;
constexpr std::size_t kW = 16;
constexpr std::size_t kC = 8;

Tensor offset_by(const Tensor& base, Gen& gen, double (Gen::*residual)()) {
    Tensor t = base;
    for (auto& v : t.data) v -= (gen.*residual)();
    return t;
}

// Residual field whose forward differences alternate in sign (|d| >= 0.2),
// so no pixel's edge-term gradient cancels to zero.
Tensor alternating_residual(Gen& gen, double shift) {
    Tensor r({kH, kW});
    for (std::size_t i = 0; i < kH; ++i)
        for (std::size_t j = 0; j < kW; ++j)
            r[i * kW + j] = shift + 0.3 * static_cast<double>(j % 2) + 0.5 * static_cast<double>(i % 2) +
                            gen.uniform(-0.05, 0.05);
    return r;
}

// Differing pair counts along x and y keep the two directional terms from
// cancelling each other.
Mask edge_mask(Gen& gen) {
    for (;;) {
        Mask m = gen.mask(kH, kW);
        std::size_t nx = 0, ny = 0;
        for (std::size_t i = 0; i < kH; ++i)
            for (std::size_t j = 0; j < kW; ++j) {
                const std::size_t k = i * kW + j;
                if (j + 1 < kW && m.valid[k] && m.valid[k + 1]) ++nx;
                if (i + 1 < kH && m.valid[k] && m.valid[k + kW]) ++ny;
            }
        if (nx != ny && nx != 2 * ny && ny != 2 * nx) return m;
    }
}

// Teacher features offset below the projected student by a positive
// residual, which keeps every feature gradient entry away from zero.
Tensor teacher_below(const Tensor& student, const Tensor& proj, Gen& gen) {
    const std::size_t cs = student.shape[0];
    const std::size_t ct = proj.shape[0];
    const std::size_t hw = student.shape[1] * student.shape[2];
    Tensor t({ct, student.shape[1], student.shape[2]});
    for (std::size_t o = 0; o < ct; ++o)
        for (std::size_t p = 0; p < hw; ++p) {
            double v = 0.0;
            for (std::size_t i = 0; i < cs; ++i) v += proj[o * cs + i] * student[i * hw + p];
            t[o * hw + p] = v - gen.uniform(0.5, 1.5);
        }
    return t;
}

StructureMaps pick(const TensorMap& in) { return {in.at("chm"), in.at("pai"), in.at("fhd")}; }

} // namespace

std::vector<GradCheckCase> standard_gradcheck_cases(std::uint64_t seed) {
    Gen gen(seed);
    std::vector<GradCheckCase> cases;
    const Mask mask = edge_mask(gen);

    {
        Tensor pred = gen.tensor({kH, kW}, 0.0, 30.0);
        Tensor target = offset_by(pred, gen, &Gen::huber_residual);
        cases.push_back({"masked_huber",
                         [mask, target](const TensorMap& in) {
                             LossResult r = masked_huber(in.at("pred"), target, mask, 1.0);
                             return r;
                         },
                         {{"pred", pred}}});
    }
    {
        Tensor target = gen.tensor({kH, kW}, 0.0, 30.0);
        Tensor pred = target;
        const Tensor r = alternating_residual(gen, 0.0);
        for (std::size_t i = 0; i < pred.size(); ++i) pred[i] += r[i];
        cases.push_back({"gradient_loss",
                         [mask, target](const TensorMap& in) { return gradient_loss(in.at("pred"), target, mask); },
                         {{"pred", pred}}});
    }
    {
        StructureMaps targets{gen.tensor({kH, kW}, 0.0, 30.0), gen.tensor({kH, kW}, 0.0, 6.0),
                              gen.tensor({kH, kW}, 0.0, 3.0)};
        TensorMap preds;
        Tensor chm = targets.chm;
        const Tensor r = alternating_residual(gen, 1.5);
        for (std::size_t i = 0; i < chm.size(); ++i) chm[i] += r[i];
        preds["chm"] = chm;
        preds["pai"] = offset_by(targets.pai, gen, &Gen::huber_residual);
        preds["fhd"] = offset_by(targets.fhd, gen, &Gen::huber_residual);
        cases.push_back({"teacher_loss",
                         [mask, targets](const TensorMap& in) { return teacher_loss(pick(in), targets, mask); },
                         preds});
    }

    auto student_maps = [&](StructureMaps& teacher, StructureMaps& targets) {
        TensorMap s;
        const char* names[3] = {"chm", "pai", "fhd"};
        Tensor* tt[3] = {&teacher.chm, &teacher.pai, &teacher.fhd};
        Tensor* yy[3] = {&targets.chm, &targets.pai, &targets.fhd};
        for (int c = 0; c < 3; ++c) {
            // Both residuals share a sign per pixel so the L1 and Huber
            // slopes never cancel.
            Tensor v = gen.tensor({kH, kW}, 0.0, 20.0);
            Tensor t = v, y = v;
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double sg = gen.sign();
                t[i] -= sg * std::abs(gen.huber_residual());
                y[i] -= sg * std::abs(gen.l1_residual());
            }
            *tt[c] = std::move(t);
            *yy[c] = std::move(y);
            s[names[c]] = std::move(v);
        }
        return s;
    };

    {
        StructureMaps teacher, targets;
        TensorMap s = student_maps(teacher, targets);
        cases.push_back({"kd_output_losses",
                         [mask, teacher, targets](const TensorMap& in) {
                             return kd_output_losses(pick(in), teacher, targets, mask);
                         },
                         s});
    }
    {
        Tensor sf = gen.tensor({kC, kH, kW}, 0.5, 1.5);
        Tensor proj = gen.tensor({kC, kC}, 0.2, 0.8);
        Tensor tf = teacher_below(sf, proj, gen);
        cases.push_back({"feature_distill_loss",
                         [tf](const TensorMap& in) {
                             return feature_distill_loss(in.at("student_feat"), tf, in.at("proj"));
                         },
                         {{"student_feat", sf}, {"proj", proj}}});
    }
    {
        Tensor sf = gen.tensor({kC, kH, kW}, 0.5, 1.5);
        Tensor proj = gen.tensor({kC, kC}, 0.2, 0.8);
        Tensor tf = teacher_below(average_pool(sf, 2), proj, gen);
        cases.push_back({"vertical_proxy_loss",
                         [tf](const TensorMap& in) {
                             return vertical_proxy_loss(in.at("student_feat"), tf, in.at("proj"), 2);
                         },
                         {{"student_feat", sf}, {"proj", proj}}});
    }
    {
        StudentLossInputs fixed;
        TensorMap s = student_maps(fixed.teacher, fixed.target);
        fixed.mask = mask;
        Tensor sf = gen.tensor({kC, kH, kW}, 0.5, 1.5);
        Tensor proj = gen.tensor({kC, kC}, 0.2, 0.8);
        fixed.teacher_feat = teacher_below(sf, proj, gen);
        fixed.teacher_vert_feat = teacher_below(average_pool(sf, 2), proj, gen);
        fixed.down_factor = 2;
        s["student_feat"] = std::move(sf);
        s["proj"] = std::move(proj);
        const StudentLossConfig cfg;
        const int epoch = cfg.warmup_epochs;
        cases.push_back({"student_total_loss",
                         [fixed, cfg, epoch](const TensorMap& in) {
                             StudentLossInputs x = fixed;
                             x.student = pick(in);
                             x.student_feat = in.at("student_feat");
                             x.proj = in.at("proj");
                             return student_total_loss(x, cfg, epoch);
                         },
                         s});
    }
    return cases;
}

} // namespace canopyforge
