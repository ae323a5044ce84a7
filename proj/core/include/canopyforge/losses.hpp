#pragma once

#include "canopyforge/tensor.hpp"

#include <map>
#include <string>

namespace canopyforge {

/// How per-channel CHM/PAI/FHD losses are combined.
enum class ChannelReduction { sum, mean };

struct TeacherLossConfig {
    double huber_delta = 1.0;
    double lambda_grad = 0.1;
    ChannelReduction reduction = ChannelReduction::sum;

    void validate() const;
};

struct StudentLossConfig {
    double w_sup = 1.0;
    double w_kd = 0.5;
    double w_feat = 0.1;
    double w_vert = 0.1;
    int warmup_epochs = 5;
    double huber_delta = 1.0;
    ChannelReduction reduction = ChannelReduction::sum;

    void validate() const;
    /// Zero before `warmup_epochs`, `w_kd` afterwards.
    double effective_w_kd(int epoch) const noexcept { return epoch < warmup_epochs ? 0.0 : w_kd; }
};

/// Scalar loss with its per-term breakdown. `total` equals the sum of
/// weights[t] * terms[t]; `grads` holds d(total)/d(input) keyed by input name.
struct LossResult {
    double total = 0.0;
    std::map<std::string, double> terms;
    std::map<std::string, double> weights;
    std::map<std::string, Tensor> grads;

    double weighted_sum() const;
};

/// The three dense targets, each H x W.
struct StructureMaps {
    Tensor chm;
    Tensor pai;
    Tensor fhd;
};

/// Mean over valid pixels of the Smooth L1 penalty on r = pred - target:
/// 0.5 r^2 / delta for |r| < delta, |r| - 0.5 delta otherwise. Grad key "pred".
LossResult masked_huber(const Tensor& pred, const Tensor& target, const Mask& mask, double delta = 1.0);

/// Mean absolute error over valid pixels. Grad key "pred".
LossResult masked_l1(const Tensor& pred, const Tensor& target, const Mask& mask);

/// Mean L1 mismatch of forward differences along x plus the same along y.
/// A difference is used only when both of its pixels are valid; a direction
/// without any valid pair contributes 0. Grad key "pred".
LossResult gradient_loss(const Tensor& pred_chm, const Tensor& target_chm, const Mask& mask);

/// Robust per-channel regression plus the weighted CHM edge term. Grad keys
/// "chm", "pai", "fhd" (w.r.t. the teacher predictions).
LossResult teacher_loss(const StructureMaps& preds, const StructureMaps& targets, const Mask& mask,
                        const TeacherLossConfig& cfg = {});

/// L_out (masked L1 to targets) and L_KD (masked Smooth L1 to the frozen
/// teacher), each summed over channels. Grad keys "chm", "pai", "fhd"
/// (w.r.t. the student only).
LossResult kd_output_losses(const StructureMaps& student, const StructureMaps& teacher, const StructureMaps& targets,
                            const Mask& mask, double delta = 1.0,
                            ChannelReduction reduction = ChannelReduction::sum);

/// Mean squared error between the 1x1 projection of student features
/// (C_s x H x W) and teacher features (C_t x H x W); proj is C_t x C_s.
/// Grad keys "student_feat" and "proj".
LossResult feature_distill_loss(const Tensor& student_feat, const Tensor& teacher_feat, const Tensor& proj);

/// Spatial average pooling of a C x H x W tensor by `factor`.
Tensor average_pool(const Tensor& feat, int factor);

/// feature_distill_loss after average-pooling the student to the teacher
/// scale; gradients flow back through the pooling.
LossResult vertical_proxy_loss(const Tensor& student_feat, const Tensor& teacher_feat, const Tensor& proj,
                               int down_factor);

struct StudentLossInputs {
    StructureMaps student;
    StructureMaps teacher;
    StructureMaps target;
    Mask mask;
    Tensor student_feat;      ///< C_s x H x W
    Tensor teacher_feat;      ///< C_t x H x W
    Tensor teacher_vert_feat; ///< C_t x H/f x W/f
    Tensor proj;              ///< C_t x C_s
    int down_factor = 1;
};

/// w_sup L_out + w_kd(epoch) L_KD + w_feat L_feat + w_vert L_vert. Empty
/// feature tensors drop the corresponding term. Grad keys "chm", "pai",
/// "fhd", "student_feat", "proj".
LossResult student_total_loss(const StudentLossInputs& in, const StudentLossConfig& cfg, int epoch);

} // namespace canopyforge
