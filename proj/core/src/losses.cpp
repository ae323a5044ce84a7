#include "canopyforge/losses.hpp"

#include "canopyforge/error.hpp"

#include <cmath>

namespace canopyforge {

namespace {

const char* const kChannels[3] = {"chm", "pai", "fhd"};

void require_2d(const Tensor& t, const Mask& mask, const char* what) {
    if (t.shape.size() != 2 || t.shape[0] != mask.height || t.shape[1] != mask.width ||
        t.size() != mask.valid.size())
        throw PreconditionError(std::string(what) + " has shape " + t.shape_string() + " but the mask is " +
                                std::to_string(mask.height) + "x" + std::to_string(mask.width));
}

std::size_t valid_count(const Mask& mask) {
    std::size_t n = 0;
    for (auto v : mask.valid) n += v ? 1 : 0;
    return n;
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

double huber_value(double r, double delta) {
    const double a = std::abs(r);
    return a < delta ? 0.5 * r * r / delta : a - 0.5 * delta;
}

double huber_slope(double r, double delta) {
    return std::abs(r) < delta ? r / delta : sign(r);
}

const Tensor& channel(const StructureMaps& m, int c) { return c == 0 ? m.chm : c == 1 ? m.pai : m.fhd; }

double channel_weight(ChannelReduction reduction) { return reduction == ChannelReduction::mean ? 1.0 / 3.0 : 1.0; }

void finish(LossResult& r) { r.total = r.weighted_sum(); }

// grad += scale * g, creating grad with g's shape on first use.
void accumulate(std::map<std::string, Tensor>& grads, const std::string& key, const Tensor& g, double scale) {
    auto it = grads.find(key);
    if (it == grads.end()) {
        Tensor t(g.shape);
        for (std::size_t i = 0; i < g.size(); ++i) t[i] = scale * g[i];
        grads.emplace(key, std::move(t));
        return;
    }
    for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += scale * g[i];
}

} // namespace

void TeacherLossConfig::validate() const {
    if (!(huber_delta > 0.0)) throw PreconditionError("huber_delta must be > 0");
    if (!(lambda_grad >= 0.0)) throw PreconditionError("lambda_grad must be >= 0");
}

void StudentLossConfig::validate() const {
    if (!(huber_delta > 0.0)) throw PreconditionError("huber_delta must be > 0");
    if (!(w_sup > 0.0)) throw PreconditionError("w_sup must be > 0");
    if (!(w_kd >= 0.0) || !(w_feat >= 0.0) || !(w_vert >= 0.0))
        throw PreconditionError("student loss weights must be non-negative");
    if (warmup_epochs < 0) throw PreconditionError("warmup_epochs must be >= 0");
}

double LossResult::weighted_sum() const {
    double s = 0.0;
    for (const auto& [name, value] : terms) {
        auto w = weights.find(name);
        const double wt = w == weights.end() ? 1.0 : w->second;
        if (wt != 0.0) s += wt * value;
    }
    return s;
}

LossResult masked_huber(const Tensor& pred, const Tensor& target, const Mask& mask, double delta) {
    if (!(delta > 0.0)) throw PreconditionError("huber delta must be > 0");
    require_2d(pred, mask, "masked_huber pred");
    require_2d(target, mask, "masked_huber target");
    const std::size_t n = valid_count(mask);
    if (n == 0) throw PreconditionError("masked_huber: mask has no valid pixels");

    LossResult r;
    Tensor g(pred.shape);
    double sum = 0.0;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask.valid[i]) continue;
        const double res = pred[i] - target[i];
        sum += huber_value(res, delta);
        g[i] = huber_slope(res, delta) * inv;
    }
    r.terms["huber"] = sum * inv;
    r.weights["huber"] = 1.0;
    r.grads.emplace("pred", std::move(g));
    finish(r);
    return r;
}

LossResult masked_l1(const Tensor& pred, const Tensor& target, const Mask& mask) {
    require_2d(pred, mask, "masked_l1 pred");
    require_2d(target, mask, "masked_l1 target");
    const std::size_t n = valid_count(mask);
    if (n == 0) throw PreconditionError("masked_l1: mask has no valid pixels");

    LossResult r;
    Tensor g(pred.shape);
    double sum = 0.0;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask.valid[i]) continue;
        const double res = pred[i] - target[i];
        sum += std::abs(res);
        g[i] = sign(res) * inv;
    }
    r.terms["l1"] = sum * inv;
    r.weights["l1"] = 1.0;
    r.grads.emplace("pred", std::move(g));
    finish(r);
    return r;
}

LossResult gradient_loss(const Tensor& pred_chm, const Tensor& target_chm, const Mask& mask) {
    require_2d(pred_chm, mask, "gradient_loss pred");
    require_2d(target_chm, mask, "gradient_loss target");
    const std::size_t h = mask.height;
    const std::size_t w = mask.width;
    auto ok = [&](std::size_t i) { return mask.valid[i] != 0; };

    std::size_t nx = 0;
    std::size_t ny = 0;
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            const std::size_t i = r * w + c;
            if (c + 1 < w && ok(i) && ok(i + 1)) ++nx;
            if (r + 1 < h && ok(i) && ok(i + w)) ++ny;
        }
    if (nx + ny == 0) throw PreconditionError("gradient_loss: no valid finite-difference positions");

    LossResult res;
    Tensor g(pred_chm.shape);
    double sx = 0.0;
    double sy = 0.0;
    const double inv_x = nx ? 1.0 / static_cast<double>(nx) : 0.0;
    const double inv_y = ny ? 1.0 / static_cast<double>(ny) : 0.0;
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            const std::size_t i = r * w + c;
            if (c + 1 < w && ok(i) && ok(i + 1)) {
                const double d = (pred_chm[i + 1] - pred_chm[i]) - (target_chm[i + 1] - target_chm[i]);
                sx += std::abs(d);
                const double s = sign(d) * inv_x;
                g[i + 1] += s;
                g[i] -= s;
            }
            if (r + 1 < h && ok(i) && ok(i + w)) {
                const double d = (pred_chm[i + w] - pred_chm[i]) - (target_chm[i + w] - target_chm[i]);
                sy += std::abs(d);
                const double s = sign(d) * inv_y;
                g[i + w] += s;
                g[i] -= s;
            }
        }
    res.terms["grad"] = sx * inv_x + sy * inv_y;
    res.weights["grad"] = 1.0;
    res.grads.emplace("pred", std::move(g));
    finish(res);
    return res;
}

LossResult teacher_loss(const StructureMaps& preds, const StructureMaps& targets, const Mask& mask,
                        const TeacherLossConfig& cfg) {
    cfg.validate();
    LossResult out;
    const double cw = channel_weight(cfg.reduction);
    for (int c = 0; c < 3; ++c) {
        const LossResult h = masked_huber(channel(preds, c), channel(targets, c), mask, cfg.huber_delta);
        const std::string term = std::string("huber_") + kChannels[c];
        out.terms[term] = h.total;
        out.weights[term] = cw;
        accumulate(out.grads, kChannels[c], h.grads.at("pred"), cw);
    }
    const LossResult gl = gradient_loss(preds.chm, targets.chm, mask);
    out.terms["grad_chm"] = gl.total;
    out.weights["grad_chm"] = cfg.lambda_grad;
    if (cfg.lambda_grad != 0.0) accumulate(out.grads, "chm", gl.grads.at("pred"), cfg.lambda_grad);
    finish(out);
    return out;
}

namespace {

struct OutputTerms {
    double out = 0.0;
    double kd = 0.0;
    Tensor g_out[3];
    Tensor g_kd[3];
};

OutputTerms output_terms(const StructureMaps& student, const StructureMaps& teacher, const StructureMaps& targets,
                         const Mask& mask, double delta, ChannelReduction reduction, bool with_kd) {
    OutputTerms t;
    const double cw = channel_weight(reduction);
    for (int c = 0; c < 3; ++c) {
        LossResult l1 = masked_l1(channel(student, c), channel(targets, c), mask);
        t.out += cw * l1.total;
        t.g_out[c] = std::move(l1.grads.at("pred"));
        if (cw != 1.0)
            for (auto& v : t.g_out[c].data) v *= cw;
        if (!with_kd) continue;
        LossResult kd = masked_huber(channel(student, c), channel(teacher, c), mask, delta);
        t.kd += cw * kd.total;
        t.g_kd[c] = std::move(kd.grads.at("pred"));
        if (cw != 1.0)
            for (auto& v : t.g_kd[c].data) v *= cw;
    }
    return t;
}

void check_feature_shapes(const Tensor& student_feat, const Tensor& teacher_feat, const Tensor& proj) {
    if (student_feat.shape.size() != 3 || teacher_feat.shape.size() != 3 || proj.shape.size() != 2)
        throw PreconditionError("feature loss expects C x H x W features and a C_t x C_s projection, got " +
                                student_feat.shape_string() + ", " + teacher_feat.shape_string() + ", " +
                                proj.shape_string());
    if (student_feat.shape[1] != teacher_feat.shape[1] || student_feat.shape[2] != teacher_feat.shape[2])
        throw PreconditionError("feature loss spatial dims differ: " + student_feat.shape_string() + " vs " +
                                teacher_feat.shape_string());
    if (proj.shape[0] != teacher_feat.shape[0] || proj.shape[1] != student_feat.shape[0])
        throw PreconditionError("projection " + proj.shape_string() + " does not map " +
                                std::to_string(student_feat.shape[0]) + " student channels to " +
                                std::to_string(teacher_feat.shape[0]) + " teacher channels");
}

} // namespace

LossResult kd_output_losses(const StructureMaps& student, const StructureMaps& teacher, const StructureMaps& targets,
                            const Mask& mask, double delta, ChannelReduction reduction) {
    OutputTerms t = output_terms(student, teacher, targets, mask, delta, reduction, true);
    LossResult r;
    r.terms["out"] = t.out;
    r.terms["kd"] = t.kd;
    r.weights["out"] = 1.0;
    r.weights["kd"] = 1.0;
    for (int c = 0; c < 3; ++c) {
        accumulate(r.grads, kChannels[c], t.g_out[c], 1.0);
        accumulate(r.grads, kChannels[c], t.g_kd[c], 1.0);
    }
    finish(r);
    return r;
}

LossResult feature_distill_loss(const Tensor& student_feat, const Tensor& teacher_feat, const Tensor& proj) {
    check_feature_shapes(student_feat, teacher_feat, proj);
    const std::size_t cs = student_feat.shape[0];
    const std::size_t ct = teacher_feat.shape[0];
    const std::size_t hw = student_feat.shape[1] * student_feat.shape[2];
    const double inv_n = 1.0 / static_cast<double>(ct * hw);

    // dL/dP for P = proj * student at every (teacher channel, pixel).
    std::vector<double> dp(ct * hw);
    double sum = 0.0;
    for (std::size_t o = 0; o < ct; ++o)
        for (std::size_t p = 0; p < hw; ++p) {
            double v = 0.0;
            for (std::size_t i = 0; i < cs; ++i) v += proj[o * cs + i] * student_feat[i * hw + p];
            const double e = v - teacher_feat[o * hw + p];
            sum += e * e;
            dp[o * hw + p] = 2.0 * e * inv_n;
        }

    Tensor g_student(student_feat.shape);
    Tensor g_proj(proj.shape);
    for (std::size_t o = 0; o < ct; ++o)
        for (std::size_t i = 0; i < cs; ++i) {
            const double w = proj[o * cs + i];
            double acc = 0.0;
            for (std::size_t p = 0; p < hw; ++p) {
                const double d = dp[o * hw + p];
                g_student[i * hw + p] += w * d;
                acc += d * student_feat[i * hw + p];
            }
            g_proj[o * cs + i] = acc;
        }

    LossResult r;
    r.terms["feat"] = sum * inv_n;
    r.weights["feat"] = 1.0;
    r.grads.emplace("student_feat", std::move(g_student));
    r.grads.emplace("proj", std::move(g_proj));
    finish(r);
    return r;
}

Tensor average_pool(const Tensor& feat, int factor) {
    if (feat.shape.size() != 3) throw PreconditionError("average_pool expects a C x H x W tensor");
    if (factor < 1) throw PreconditionError("pooling factor must be >= 1");
    const auto f = static_cast<std::size_t>(factor);
    const std::size_t c = feat.shape[0], h = feat.shape[1], w = feat.shape[2];
    if (h % f != 0 || w % f != 0)
        throw PreconditionError("pooling factor " + std::to_string(factor) + " does not divide " +
                                std::to_string(h) + "x" + std::to_string(w));
    if (f == 1) return feat;
    const std::size_t oh = h / f, ow = w / f;
    Tensor out({c, oh, ow});
    const double inv = 1.0 / static_cast<double>(f * f);
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t r = 0; r < oh; ++r)
            for (std::size_t q = 0; q < ow; ++q) {
                double s = 0.0;
                for (std::size_t dr = 0; dr < f; ++dr)
                    for (std::size_t dq = 0; dq < f; ++dq) s += feat[(k * h + r * f + dr) * w + q * f + dq];
                out[(k * oh + r) * ow + q] = s * inv;
            }
    return out;
}

LossResult vertical_proxy_loss(const Tensor& student_feat, const Tensor& teacher_feat, const Tensor& proj,
                               int down_factor) {
    const Tensor pooled = average_pool(student_feat, down_factor);
    LossResult inner = feature_distill_loss(pooled, teacher_feat, proj);

    LossResult r;
    r.terms["vert"] = inner.total;
    r.weights["vert"] = 1.0;
    r.grads.emplace("proj", std::move(inner.grads.at("proj")));
    const Tensor& gp = inner.grads.at("student_feat");
    if (down_factor == 1) {
        r.grads.emplace("student_feat", gp);
    } else {
        const auto f = static_cast<std::size_t>(down_factor);
        const std::size_t c = student_feat.shape[0], h = student_feat.shape[1], w = student_feat.shape[2];
        const std::size_t oh = h / f, ow = w / f;
        const double inv = 1.0 / static_cast<double>(f * f);
        Tensor g(student_feat.shape);
        for (std::size_t k = 0; k < c; ++k)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) g[(k * h + y) * w + x] = gp[(k * oh + y / f) * ow + x / f] * inv;
        r.grads.emplace("student_feat", std::move(g));
    }
    finish(r);
    return r;
}

LossResult student_total_loss(const StudentLossInputs& in, const StudentLossConfig& cfg, int epoch) {
    cfg.validate();
    const double w_kd = cfg.effective_w_kd(epoch);
    const bool with_kd = w_kd != 0.0;

    LossResult r;
    OutputTerms t = output_terms(in.student, in.teacher, in.target, in.mask, cfg.huber_delta, cfg.reduction, with_kd);
    r.terms["out"] = t.out;
    r.weights["out"] = cfg.w_sup;
    r.terms["kd"] = t.kd;
    r.weights["kd"] = w_kd;
    for (int c = 0; c < 3; ++c) {
        accumulate(r.grads, kChannels[c], t.g_out[c], cfg.w_sup);
        if (with_kd) accumulate(r.grads, kChannels[c], t.g_kd[c], w_kd);
    }

    const bool with_features = !in.student_feat.empty() && !in.proj.empty();
    r.terms["feat"] = 0.0;
    r.weights["feat"] = cfg.w_feat;
    r.terms["vert"] = 0.0;
    r.weights["vert"] = cfg.w_vert;
    if (with_features && !in.teacher_feat.empty()) {
        LossResult f = feature_distill_loss(in.student_feat, in.teacher_feat, in.proj);
        r.terms["feat"] = f.total;
        if (cfg.w_feat != 0.0) {
            accumulate(r.grads, "student_feat", f.grads.at("student_feat"), cfg.w_feat);
            accumulate(r.grads, "proj", f.grads.at("proj"), cfg.w_feat);
        }
    }
    if (with_features && !in.teacher_vert_feat.empty()) {
        LossResult v = vertical_proxy_loss(in.student_feat, in.teacher_vert_feat, in.proj, in.down_factor);
        r.terms["vert"] = v.total;
        if (cfg.w_vert != 0.0) {
            accumulate(r.grads, "student_feat", v.grads.at("student_feat"), cfg.w_vert);
            accumulate(r.grads, "proj", v.grads.at("proj"), cfg.w_vert);
        }
    }
    finish(r);
    return r;
}

} // namespace canopyforge
