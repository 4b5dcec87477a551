#include "prl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace prl {

namespace {

constexpr int64_t kInf64 = std::numeric_limits<int64_t>::max() / 4;

bool is_boundary_pixel(const BinaryMask& m, int r, int c, BorderRule rule) {
    if (!m.at(r, c)) return false;
    const bool edge = r == 0 || r == m.height - 1 || c == 0 || c == m.width - 1;
    if (edge && rule == BorderRule::kIncludeBorder) return true;
    if (r > 0 && !m.at(r - 1, c)) return true;
    if (r + 1 < m.height && !m.at(r + 1, c)) return true;
    if (c > 0 && !m.at(r, c - 1)) return true;
    if (c + 1 < m.width && !m.at(r, c + 1)) return true;
    return false;
}

// Boundary indicator grid; empty vector if no boundary pixel exists.
std::vector<uint8_t> boundary_grid(const BinaryMask& m, BorderRule rule, bool* any) {
    std::vector<uint8_t> g(static_cast<size_t>(m.height) * m.width, 0);
    *any = false;
    for (int r = 0; r < m.height; ++r)
        for (int c = 0; c < m.width; ++c)
            if (is_boundary_pixel(m, r, c, rule)) {
                g[static_cast<size_t>(r) * m.width + c] = 1;
                *any = true;
            }
    return g;
}

// Per column: vertical distance to the nearest site row, and that row with
// ties broken to the smaller row. row_out may be null.
void column_pass(const std::vector<uint8_t>& site, int h, int w, std::vector<int32_t>& dist_out,
                 std::vector<int32_t>* row_out) {
    dist_out.assign(static_cast<size_t>(h) * w, INT32_MAX);
    if (row_out) row_out->assign(static_cast<size_t>(h) * w, -1);
    for (int c = 0; c < w; ++c) {
        int last = INT32_MIN;  // nearest site row at or above
        for (int r = 0; r < h; ++r) {
            if (site[static_cast<size_t>(r) * w + c]) last = r;
            if (last != INT32_MIN) {
                dist_out[static_cast<size_t>(r) * w + c] = r - last;
                if (row_out) (*row_out)[static_cast<size_t>(r) * w + c] = last;
            }
        }
        int next = INT32_MAX;  // nearest site row below
        for (int r = h - 1; r >= 0; --r) {
            if (site[static_cast<size_t>(r) * w + c]) next = r;
            if (next != INT32_MAX) {
                const int cand = next - r;
                const size_t i = static_cast<size_t>(r) * w + c;
                // Strict improvement only: on ties the earlier (smaller) row wins.
                if (cand < dist_out[i]) {
                    dist_out[i] = cand;
                    if (row_out) (*row_out)[i] = next;
                }
            }
        }
    }
}

// 1-D squared distance transform via the lower envelope of the parabolas
// j -> f[j] + (q - j)^2. Columns without sites (f == kInf64) are skipped.
void envelope_pass(const std::vector<int64_t>& f, int n, std::vector<int64_t>& d,
                   std::vector<int>& v, std::vector<double>& z) {
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] >= kInf64) continue;
        double s;
        while (k >= 0) {
            const int p = v[k];
            s = (static_cast<double>(f[q] - f[p]) + static_cast<double>(q) * q -
                 static_cast<double>(p) * p) /
                (2.0 * (q - p));
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = k == 0 ? -std::numeric_limits<double>::infinity() : s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    if (k < 0) {
        std::fill(d.begin(), d.begin() + n, kInf64);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const int64_t dq = q - v[j];
        d[q] = dq * dq + f[v[j]];
    }
}

}  // namespace

void BinaryMask::validate() const {
    if (height < 1 || width < 1) throw Error("mask extents must be >= 1");
    if (static_cast<int64_t>(values.size()) != static_cast<int64_t>(height) * width)
        throw Error("mask buffer does not match extents");
    for (uint8_t v : values)
        if (v > 1) throw Error("mask values must be strictly binary");
}

bool BoundarySet::contains(int r, int c) const {
    return std::binary_search(pixels.begin(), pixels.end(), std::make_pair(r, c));
}

BoundarySet extract_boundary(const BinaryMask& mask, BorderRule rule) {
    mask.validate();
    BoundarySet b;
    for (int r = 0; r < mask.height; ++r)
        for (int c = 0; c < mask.width; ++c)
            if (is_boundary_pixel(mask, r, c, rule)) b.pixels.emplace_back(r, c);
    return b;
}

std::vector<int64_t> edt_squared(const BinaryMask& mask, BorderRule rule) {
    mask.validate();
    const int h = mask.height, w = mask.width;
    bool any = false;
    const auto site = boundary_grid(mask, rule, &any);
    if (!any) throw DegenerateMask("constant mask has no boundary");

    std::vector<int32_t> coldist;
    column_pass(site, h, w, coldist, nullptr);

    std::vector<int64_t> out(static_cast<size_t>(h) * w);
    std::vector<int64_t> f(w), d(w);
    std::vector<int> v(w);
    std::vector<double> z(w + 1);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int32_t cd = coldist[static_cast<size_t>(r) * w + c];
            f[c] = cd == INT32_MAX ? kInf64 : static_cast<int64_t>(cd) * cd;
        }
        envelope_pass(f, w, d, v, z);
        std::copy(d.begin(), d.end(), out.begin() + static_cast<size_t>(r) * w);
    }
    return out;
}

std::vector<int64_t> brute_force_edt_squared(const BinaryMask& mask, BorderRule rule) {
    const BoundarySet b = extract_boundary(mask, rule);
    if (b.pixels.empty()) throw DegenerateMask("constant mask has no boundary");
    std::vector<int64_t> out(static_cast<size_t>(mask.height) * mask.width);
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            int64_t best = kInf64;
            for (const auto& [br, bc] : b.pixels) {
                const int64_t dr = r - br, dc = c - bc;
                best = std::min(best, dr * dr + dc * dc);
            }
            out[static_cast<size_t>(r) * mask.width + c] = best;
        }
    }
    return out;
}

namespace {

SignedDistanceMap sdm_from_squared(const BinaryMask& mask, const std::vector<int64_t>& sq) {
    SignedDistanceMap s;
    s.height = mask.height;
    s.width = mask.width;
    s.raw.resize(sq.size());
    for (size_t i = 0; i < sq.size(); ++i) {
        const double d = std::sqrt(static_cast<double>(sq[i]));
        s.raw[i] = mask.values[i] ? -d : d;  // boundary pixels have sq == 0
    }
    s.normalized = s.raw;
    return s;
}

}  // namespace

SignedDistanceMap signed_distance_map(const BinaryMask& mask, BorderRule rule) {
    return sdm_from_squared(mask, edt_squared(mask, rule));
}

SignedDistanceMap brute_force_sdm(const BinaryMask& mask, BorderRule rule) {
    return sdm_from_squared(mask, brute_force_edt_squared(mask, rule));
}

SignedDistanceMap normalize_sdm(SignedDistanceMap sdm, SdmNormalization mode) {
    sdm.mode = mode;
    switch (mode) {
        case SdmNormalization::kNone:
            sdm.normalized = sdm.raw;
            break;
        case SdmNormalization::kMaxAbs: {
            double m = 0.0;
            for (double v : sdm.raw) m = std::max(m, std::abs(v));
            if (m == 0.0) {
                sdm.normalized = sdm.raw;  // all-zero map stays all-zero
            } else {
                sdm.normalized.resize(sdm.raw.size());
                for (size_t i = 0; i < sdm.raw.size(); ++i) sdm.normalized[i] = sdm.raw[i] / m;
            }
            break;
        }
        case SdmNormalization::kDiagonal: {
            const double diag = std::sqrt(static_cast<double>(sdm.height) * sdm.height +
                                          static_cast<double>(sdm.width) * sdm.width);
            sdm.normalized.resize(sdm.raw.size());
            for (size_t i = 0; i < sdm.raw.size(); ++i) sdm.normalized[i] = sdm.raw[i] / diag;
            break;
        }
    }
    return sdm;
}

DirectionField direction_field(const BinaryMask& mask, BorderRule rule) {
    mask.validate();
    const int h = mask.height, w = mask.width;
    bool any = false;
    const auto site = boundary_grid(mask, rule, &any);
    if (!any) throw DegenerateMask("constant mask has no boundary");

    std::vector<int32_t> coldist, colrow;
    column_pass(site, h, w, coldist, &colrow);

    DirectionField f;
    f.height = h;
    f.width = w;
    f.fx.assign(static_cast<size_t>(h) * w, 0.0);
    f.fy.assign(static_cast<size_t>(h) * w, 0.0);

    // Per pixel, expand columns outward; a column farther than the current
    // best squared distance cannot improve it or tie it (ties need cd == 0).
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!mask.at(r, c)) continue;  // background stays (0,0)
            int64_t best = kInf64;
            int br = INT32_MAX, bc = INT32_MAX;
            for (int dj = 0; static_cast<int64_t>(dj) * dj <= best; ++dj) {
                for (int sgn = 0; sgn < (dj == 0 ? 1 : 2); ++sgn) {
                    const int cc = sgn == 0 ? c + dj : c - dj;
                    if (cc < 0 || cc >= w) continue;
                    const int32_t cd = coldist[static_cast<size_t>(r) * w + cc];
                    if (cd == INT32_MAX) continue;
                    const int64_t d2 = static_cast<int64_t>(cd) * cd +
                                       static_cast<int64_t>(dj) * dj;
                    const int sr = colrow[static_cast<size_t>(r) * w + cc];
                    if (d2 < best || (d2 == best && (sr < br || (sr == br && cc < bc)))) {
                        best = d2;
                        br = sr;
                        bc = cc;
                    }
                }
            }
            f.fx[static_cast<size_t>(r) * w + c] = c - bc;
            f.fy[static_cast<size_t>(r) * w + c] = r - br;
        }
    }
    return f;
}

DirectionField brute_force_df(const BinaryMask& mask, BorderRule rule) {
    const BoundarySet b = extract_boundary(mask, rule);
    if (b.pixels.empty()) throw DegenerateMask("constant mask has no boundary");
    DirectionField f;
    f.height = mask.height;
    f.width = mask.width;
    f.fx.assign(static_cast<size_t>(mask.height) * mask.width, 0.0);
    f.fy.assign(f.fx.size(), 0.0);
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            if (!mask.at(r, c)) continue;
            int64_t best = kInf64;
            int br = INT32_MAX, bc = INT32_MAX;
            for (const auto& [sr, sc] : b.pixels) {
                const int64_t dr = r - sr, dc = c - sc;
                const int64_t d2 = dr * dr + dc * dc;
                // b.pixels is row-major sorted, so on ties the first hit is
                // already the row-major minimum.
                if (d2 < best) {
                    best = d2;
                    br = sr;
                    bc = sc;
                }
            }
            f.fx[static_cast<size_t>(r) * mask.width + c] = c - bc;
            f.fy[static_cast<size_t>(r) * mask.width + c] = r - br;
        }
    }
    return f;
}

SignedDistanceMap zero_sdm(int height, int width) {
    SignedDistanceMap s;
    s.height = height;
    s.width = width;
    s.raw.assign(static_cast<size_t>(height) * width, 0.0);
    s.normalized = s.raw;
    return s;
}

DirectionField zero_df(int height, int width) {
    DirectionField f;
    f.height = height;
    f.width = width;
    f.fx.assign(static_cast<size_t>(height) * width, 0.0);
    f.fy = f.fx;
    return f;
}

}  // namespace prl
