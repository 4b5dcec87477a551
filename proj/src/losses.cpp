#include "prl/losses.hpp"

#include <algorithm>
#include <cmath>

#include "prl/ops.hpp"

namespace prl {

using detail::Node;
using detail::make_op;

void LossWeights::validate() const {
    if (lambda1 < 0.0 || lambda2 < 0.0) throw Error("loss weights must be nonnegative");
    if (alpha_edge <= 0.0 || psi_eps <= 0.0 || df_angle_eps <= 0.0 || smooth_w_max <= 0.0)
        throw Error("alpha_edge, psi_eps, df_angle_eps and smooth_w_max must be positive");
}

Tensor to_tensor(const SignedDistanceMap& sdm, bool use_normalized) {
    return Tensor::from_data({sdm.height, sdm.width},
                             use_normalized ? sdm.normalized : sdm.raw);
}

Tensor to_tensor(const DirectionField& df) {
    std::vector<Real> v(static_cast<size_t>(df.height) * df.width * 2);
    for (size_t i = 0; i < df.fx.size(); ++i) {
        v[2 * i] = df.fx[i];
        v[2 * i + 1] = df.fy[i];
    }
    return Tensor::from_data({df.height, df.width, 2}, std::move(v));
}

Tensor to_tensor(const BinaryMask& mask) {
    std::vector<Real> v(mask.values.begin(), mask.values.end());
    return Tensor::from_data({mask.height, mask.width}, std::move(v));
}

namespace {

// Accepts [H,W] or [H,W,1] prediction maps.
Tensor as_plane(const char* op, const Tensor& t, int h, int w) {
    const auto& s = t.shape();
    const bool ok = (s.size() == 2 && s[0] == h && s[1] == w) ||
                    (s.size() == 3 && s[0] == h && s[1] == w && s[2] == 1);
    if (!ok) {
        throw ShapeError(std::string(op) + ": expected [" + std::to_string(h) + "," +
                         std::to_string(w) + "(,1)], got " + shape_str(t.shape()));
    }
    return s.size() == 2 ? t : reshape(t, {h, w});
}

}  // namespace

Tensor loss_sdm(const Tensor& pred, const Tensor& target) {
    if (numel(pred.shape()) != numel(target.shape()))
        throw ShapeError("loss_sdm: shape mismatch");
    Tensor p = pred.rank() == target.rank() ? pred : reshape(pred, target.shape());
    if (p.shape() != target.shape()) throw ShapeError("loss_sdm: shape mismatch");
    return sum(square(sub(p, target)));
}

Tensor loss_sdm(const Tensor& pred, const SignedDistanceMap& target) {
    return loss_sdm(pred, to_tensor(target));
}

Tensor loss_df(const Tensor& pred, const Tensor& target, Real angle_eps) {
    if (pred.rank() != 3 || pred.dim(2) != 2) throw ShapeError("loss_df: pred must be [H,W,2]");
    if (pred.shape() != target.shape()) throw ShapeError("loss_df: shape mismatch");
    if (target.requires_grad()) throw Error("loss_df: target gradients are not supported");
    const int64_t n = pred.size() / 2;
    const auto& vp = pred.values();
    const auto& vt = target.values();

    Real total = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const Real f0 = vp[2 * i], f1 = vp[2 * i + 1];
        const Real g0 = vt[2 * i], g1 = vt[2 * i + 1];
        const Real d0 = f0 - g0, d1 = f1 - g1;
        total += std::sqrt(d0 * d0 + d1 * d1);
        const Real nf = std::sqrt(f0 * f0 + f1 * f1);
        const Real ng = std::sqrt(g0 * g0 + g1 * g1);
        if (nf < angle_eps || ng < angle_eps) continue;
        const Real u = std::clamp((f0 * g0 + f1 * g1) / (nf * ng), -1.0, 1.0);
        const Real ang = std::acos(u);
        total += ang * ang;
    }
    return make_op("loss_df", {1}, {total}, {pred, target}, [pred, target, n,
                                                             angle_eps](Node& node) {
        auto& gp = pred.node()->ensure_grad();
        const auto& vp = pred.node()->value;
        const auto& vt = target.node()->value;
        const Real gy = node.grad[0];
        for (int64_t i = 0; i < n; ++i) {
            const Real f0 = vp[2 * i], f1 = vp[2 * i + 1];
            const Real g0 = vt[2 * i], g1 = vt[2 * i + 1];
            const Real d0 = f0 - g0, d1 = f1 - g1;
            const Real l2 = std::sqrt(d0 * d0 + d1 * d1);
            if (l2 > 0.0) {
                gp[2 * i] += gy * d0 / l2;
                gp[2 * i + 1] += gy * d1 / l2;
            }
            const Real nf = std::sqrt(f0 * f0 + f1 * f1);
            const Real ng = std::sqrt(g0 * g0 + g1 * g1);
            if (nf < angle_eps || ng < angle_eps) continue;
            const Real u = std::clamp((f0 * g0 + f1 * g1) / (nf * ng), -1.0, 1.0);
            // d(acos(u)^2)/du = -2 acos(u)/sqrt(1-u^2); the floor on 1-u^2
            // keeps the parallel limit (-2) finite and bounds the
            // anti-parallel blow-up.
            const Real ang = std::acos(u);
            const Real denom = std::sqrt(std::max(1.0 - u * u, 1e-12));
            const Real dang_du = -2.0 * ang / denom;
            const Real inv = 1.0 / (nf * ng);
            const Real du_df0 = g0 * inv - u * f0 / (nf * nf);
            const Real du_df1 = g1 * inv - u * f1 / (nf * nf);
            gp[2 * i] += gy * dang_du * du_df0;
            gp[2 * i + 1] += gy * dang_du * du_df1;
        }
    });
}

Tensor loss_df(const Tensor& pred, const DirectionField& target, Real angle_eps) {
    return loss_df(pred, to_tensor(target), angle_eps);
}

Tensor loss_ds(const Tensor& pred, const BinaryMask& gt, const DirectionField& gt_field,
               const LossWeights& weights) {
    weights.validate();
    gt.validate();
    const int h = gt.height, w = gt.width;
    if (gt_field.height != h || gt_field.width != w)
        throw ShapeError("loss_ds: field extents do not match the mask");
    Tensor p = as_plane("loss_ds", pred, h, w);

    // Constant per-pixel factors: edge attenuation from the ground truth and
    // the foreground weight from the field magnitude.
    const Real alpha = weights.alpha_edge;
    const Real eps2 = weights.psi_eps * weights.psi_eps;
    const Real wmax = weights.smooth_w_max;
    std::vector<Real> wmap(static_cast<size_t>(h) * w, 1.0);
    for (int64_t i = 0; i < static_cast<int64_t>(wmap.size()); ++i) {
        if (!gt.values[i]) continue;
        const Real mag = std::hypot(gt_field.fx[i], gt_field.fy[i]);
        wmap[i] = mag * wmax <= 1.0 ? wmax : 1.0 / mag;
    }
    std::vector<Real> sx(static_cast<size_t>(h) * std::max(w - 1, 0));
    std::vector<Real> sy(static_cast<size_t>(std::max(h - 1, 0)) * w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c + 1 < w; ++c) {
            const Real dg = std::abs(static_cast<Real>(gt.at(r, c + 1)) - gt.at(r, c));
            sx[static_cast<size_t>(r) * (w - 1) + c] = std::exp(-alpha * dg);
        }
    for (int r = 0; r + 1 < h; ++r)
        for (int c = 0; c < w; ++c) {
            const Real dg = std::abs(static_cast<Real>(gt.at(r + 1, c)) - gt.at(r, c));
            sy[static_cast<size_t>(r) * w + c] = std::exp(-alpha * dg);
        }

    const auto& vp = p.values();
    Real total = 0.0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c + 1 < w; ++c) {
            const Real d = vp[static_cast<size_t>(r) * w + c + 1] -
                           vp[static_cast<size_t>(r) * w + c];
            const Real m = d * sx[static_cast<size_t>(r) * (w - 1) + c];
            total += wmap[static_cast<size_t>(r) * w + c] * std::sqrt(m * m + eps2);
        }
    for (int r = 0; r + 1 < h; ++r)
        for (int c = 0; c < w; ++c) {
            const Real d = vp[static_cast<size_t>(r + 1) * w + c] -
                           vp[static_cast<size_t>(r) * w + c];
            const Real m = d * sy[static_cast<size_t>(r) * w + c];
            total += wmap[static_cast<size_t>(r) * w + c] * std::sqrt(m * m + eps2);
        }

    return make_op("loss_ds", {1}, {total}, {p},
                   [p, h, w, eps2, wmap = std::move(wmap), sx = std::move(sx),
                    sy = std::move(sy)](Node& node) {
                       auto& gp = p.node()->ensure_grad();
                       const auto& vp = p.node()->value;
                       const Real gy = node.grad[0];
                       for (int r = 0; r < h; ++r)
                           for (int c = 0; c + 1 < w; ++c) {
                               const size_t i = static_cast<size_t>(r) * w + c;
                               const Real s = sx[static_cast<size_t>(r) * (w - 1) + c];
                               const Real d = vp[i + 1] - vp[i];
                               const Real term = std::sqrt(d * d * s * s + eps2);
                               const Real g = gy * wmap[i] * d * s * s / term;
                               gp[i + 1] += g;
                               gp[i] -= g;
                           }
                       for (int r = 0; r + 1 < h; ++r)
                           for (int c = 0; c < w; ++c) {
                               const size_t i = static_cast<size_t>(r) * w + c;
                               const Real s = sy[i];
                               const Real d = vp[i + w] - vp[i];
                               const Real term = std::sqrt(d * d * s * s + eps2);
                               const Real g = gy * wmap[i] * d * s * s / term;
                               gp[i + w] += g;
                               gp[i] -= g;
                           }
                   });
}

Tensor loss_prl(const Tensor& sal_loss, const Tensor& sdm_loss, const Tensor& df_loss,
                const LossWeights& weights) {
    weights.validate();
    if (sal_loss.size() != 1 || sdm_loss.size() != 1 || df_loss.size() != 1)
        throw ShapeError("loss_prl: component losses must be scalar");
    return add(sal_loss,
               add(mul_scalar(sdm_loss, weights.lambda1), mul_scalar(df_loss, weights.lambda2)));
}

}  // namespace prl
