// Independent naive reference implementations used as test oracles. These
// deliberately share no code with the library paths they check: plain loops
// over raw buffers, transcribed straight from the definitions.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "prl/geometry.hpp"
#include "prl/rng.hpp"

namespace oracle {

// Sum over pixels of squared difference.
inline double loss_sdm(const std::vector<double>& pred, const std::vector<double>& target) {
    double total = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        total += d * d;
    }
    return total;
}

// Per pixel: Euclidean norm of the offset difference plus the squared angle
// between the vectors (unit-normalized, inner product clamped, zero-norm
// guard).
inline double loss_df(const std::vector<double>& pred, const std::vector<double>& target,
                      int64_t pixels, double angle_eps = 1e-8) {
    double total = 0.0;
    for (int64_t i = 0; i < pixels; ++i) {
        const double f0 = pred[2 * i], f1 = pred[2 * i + 1];
        const double g0 = target[2 * i], g1 = target[2 * i + 1];
        total += std::sqrt((f0 - g0) * (f0 - g0) + (f1 - g1) * (f1 - g1));
        const double nf = std::sqrt(f0 * f0 + f1 * f1);
        const double ng = std::sqrt(g0 * g0 + g1 * g1);
        if (nf < angle_eps || ng < angle_eps) continue;
        double u = (f0 * g0 + f1 * g1) / (nf * ng);
        u = u < -1.0 ? -1.0 : (u > 1.0 ? 1.0 : u);
        const double ang = std::acos(u);
        total += ang * ang;
    }
    return total;
}

// Forward differences on the valid grid, edge attenuation from the mask,
// foreground weight min(1/||F||, w_max) anchored at the stencil base pixel.
inline double loss_ds(const std::vector<double>& pred, const prl::BinaryMask& gt,
                      const prl::DirectionField& field, double alpha = 10.0,
                      double psi_eps = 0.001, double w_max = 1.0) {
    const int h = gt.height, w = gt.width;
    auto psi = [psi_eps](double m) { return std::sqrt(m * m + psi_eps * psi_eps); };
    auto weight = [&](int r, int c) {
        if (!gt.at(r, c)) return 1.0;
        const double mag = std::sqrt(field.fx_at(r, c) * field.fx_at(r, c) +
                                     field.fy_at(r, c) * field.fy_at(r, c));
        if (mag == 0.0) return w_max;
        return std::min(1.0 / mag, w_max);
    };
    double total = 0.0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c + 1 < w; ++c) {
            const double dO = pred[static_cast<size_t>(r) * w + c + 1] -
                              pred[static_cast<size_t>(r) * w + c];
            const double dG = std::abs(static_cast<double>(gt.at(r, c + 1)) - gt.at(r, c));
            total += weight(r, c) * psi(std::abs(dO) * std::exp(-alpha * dG));
        }
    for (int r = 0; r + 1 < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double dO = pred[static_cast<size_t>(r + 1) * w + c] -
                              pred[static_cast<size_t>(r) * w + c];
            const double dG = std::abs(static_cast<double>(gt.at(r + 1, c)) - gt.at(r, c));
            total += weight(r, c) * psi(std::abs(dO) * std::exp(-alpha * dG));
        }
    return total;
}

// Per-threshold precision/recall by literal TP/FP/FN counting.
struct PrPoint {
    double precision, recall;
};
inline std::vector<PrPoint> pr_curve(const std::vector<double>& pred,
                                     const std::vector<uint8_t>& gt) {
    std::vector<PrPoint> out(256);
    for (int t = 0; t < 256; ++t) {
        const double thr = t / 255.0;
        int64_t tp = 0, fp = 0, fn = 0;
        for (size_t i = 0; i < pred.size(); ++i) {
            const bool p = pred[i] >= thr;
            const bool g = gt[i] != 0;
            if (p && g) ++tp;
            if (p && !g) ++fp;
            if (!p && g) ++fn;
        }
        out[t].precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
        out[t].recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn);
    }
    return out;
}

// Random masks mixing structure (rectangles, discs) with pixel noise,
// guaranteed non-constant.
inline prl::BinaryMask random_mask(prl::Rng& rng, int h, int w) {
    prl::BinaryMask m{h, w, std::vector<uint8_t>(static_cast<size_t>(h) * w, 0)};
    const int kind = static_cast<int>(rng.uniform_index(3));
    if (kind == 0) {
        for (auto& v : m.values) v = rng.uniform() < 0.35 ? 1 : 0;
    } else if (kind == 1) {
        const int n_rect = 1 + static_cast<int>(rng.uniform_index(3));
        for (int k = 0; k < n_rect; ++k) {
            const int r0 = static_cast<int>(rng.uniform_index(h));
            const int c0 = static_cast<int>(rng.uniform_index(w));
            const int r1 = std::min<int>(h, r0 + 1 + static_cast<int>(rng.uniform_index(h / 2 + 1)));
            const int c1 = std::min<int>(w, c0 + 1 + static_cast<int>(rng.uniform_index(w / 2 + 1)));
            for (int r = r0; r < r1; ++r)
                for (int c = c0; c < c1; ++c) m.values[static_cast<size_t>(r) * w + c] = 1;
        }
    } else {
        const int cy = static_cast<int>(rng.uniform_index(h));
        const int cx = static_cast<int>(rng.uniform_index(w));
        const int rad = 2 + static_cast<int>(rng.uniform_index(std::min(h, w) / 2));
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                if ((r - cy) * (r - cy) + (c - cx) * (c - cx) <= rad * rad)
                    m.values[static_cast<size_t>(r) * w + c] = 1;
    }
    bool has_fg = false, has_bg = false;
    for (auto v : m.values) (v ? has_fg : has_bg) = true;
    if (!has_fg) m.values[static_cast<size_t>(h / 2) * w + w / 2] = 1;
    if (!has_bg) m.values[0] = 0;
    return m;
}

}  // namespace oracle
