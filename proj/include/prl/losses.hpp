#pragma once

#include "prl/geometry.hpp"
#include "prl/tensor.hpp"

namespace prl {

struct LossWeights {
    Real lambda1 = 1.0;      // SDM loss weight
    Real lambda2 = 1.0;      // DF loss weight
    Real alpha_edge = 10.0;  // edge-awareness factor in the smoothness loss
    Real psi_eps = 0.001;    // psi(m) = sqrt(m^2 + psi_eps^2)
    Real df_angle_eps = 1e-8;  // vectors below this norm contribute no angle term
    Real smooth_w_max = 1.0;   // cap on the 1/||F|| foreground weight

    void validate() const;
};

Tensor to_tensor(const SignedDistanceMap& sdm, bool use_normalized = true);
Tensor to_tensor(const DirectionField& df);  // [H,W,2], channel 0 = fx, 1 = fy
Tensor to_tensor(const BinaryMask& mask);    // [H,W]

// Sum of squared differences over all pixels. pred: [H,W] or [H,W,1].
Tensor loss_sdm(const Tensor& pred, const Tensor& target);
Tensor loss_sdm(const Tensor& pred, const SignedDistanceMap& target);

// Per pixel: ||F - F_gt||_2 plus the squared angle between the two vectors,
// summed over the map. The angle uses unit-normalized vectors with the inner
// product clamped to [-1,1] and is 0 wherever either vector's norm is below
// angle_eps. The L2 term supervises raw pixel offsets.
Tensor loss_df(const Tensor& pred, const Tensor& target, Real angle_eps = 1e-8);
Tensor loss_df(const Tensor& pred, const DirectionField& target, Real angle_eps = 1e-8);

// Direction-aware smoothness: forward differences of pred on the valid
// interior grid, attenuated where the ground truth has an edge, weighted by
// min(1/||F_gt||, w_max) on foreground pixels and 1 on background. The weight
// anchors at the base pixel of each difference stencil.
Tensor loss_ds(const Tensor& pred, const BinaryMask& gt, const DirectionField& gt_field,
               const LossWeights& weights = {});

// L_prl = L_sal + lambda1 * L_sdm + lambda2 * L_df.
Tensor loss_prl(const Tensor& sal_loss, const Tensor& sdm_loss, const Tensor& df_loss,
                const LossWeights& weights = {});

}  // namespace prl
