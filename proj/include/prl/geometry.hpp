#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "prl/errors.hpp"

namespace prl {

// Ground-truth mask: 1 = salient, 0 = background.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> values;  // row-major, strictly {0,1}

    uint8_t at(int r, int c) const { return values[static_cast<size_t>(r) * width + c]; }
    void validate() const;
};

// Foreground pixels with at least one 4-connected background neighbor, in
// row-major order.
struct BoundarySet {
    std::vector<std::pair<int, int>> pixels;  // (row, col)
    bool contains(int r, int c) const;
};

// Interface: the image border alone does not make a foreground pixel a
// boundary pixel (objects crossing the image edge keep their interior).
// IncludeBorder: pixels outside the image count as background.
enum class BorderRule { kInterface, kIncludeBorder };

enum class SdmNormalization { kMaxAbs, kDiagonal, kNone };

// Per-pixel signed Euclidean distance to the nearest boundary pixel:
// negative strictly inside the object, zero on the boundary, positive on the
// background.
struct SignedDistanceMap {
    int height = 0;
    int width = 0;
    std::vector<double> raw;         // pixel units
    std::vector<double> normalized;  // == raw until normalize_sdm is applied
    SdmNormalization mode = SdmNormalization::kNone;

    double raw_at(int r, int c) const { return raw[static_cast<size_t>(r) * width + c]; }
};

// Per-pixel offset p - b from the nearest boundary pixel b to p, for
// foreground pixels; (0,0) on background. fx is the column offset, fy the row
// offset. Nearest-boundary ties break to the row-major minimal coordinate.
struct DirectionField {
    int height = 0;
    int width = 0;
    std::vector<double> fx, fy;

    double fx_at(int r, int c) const { return fx[static_cast<size_t>(r) * width + c]; }
    double fy_at(int r, int c) const { return fy[static_cast<size_t>(r) * width + c]; }
};

BoundarySet extract_boundary(const BinaryMask& mask, BorderRule rule = BorderRule::kInterface);

// Exact squared Euclidean distance to the nearest boundary pixel, integer
// arithmetic throughout. Column pre-pass plus a lower-envelope-of-parabolas
// pass per row. Throws DegenerateMask when the boundary set is empty.
std::vector<int64_t> edt_squared(const BinaryMask& mask, BorderRule rule = BorderRule::kInterface);
std::vector<int64_t> brute_force_edt_squared(const BinaryMask& mask,
                                             BorderRule rule = BorderRule::kInterface);

SignedDistanceMap signed_distance_map(const BinaryMask& mask,
                                      BorderRule rule = BorderRule::kInterface);
SignedDistanceMap normalize_sdm(SignedDistanceMap sdm, SdmNormalization mode);

DirectionField direction_field(const BinaryMask& mask, BorderRule rule = BorderRule::kInterface);

// Exhaustive transcriptions of the definitions; meant for small masks.
SignedDistanceMap brute_force_sdm(const BinaryMask& mask,
                                  BorderRule rule = BorderRule::kInterface);
DirectionField brute_force_df(const BinaryMask& mask, BorderRule rule = BorderRule::kInterface);

// Documented fallbacks for degenerate (constant) masks in pipeline use.
SignedDistanceMap zero_sdm(int height, int width);
DirectionField zero_df(int height, int width);

}  // namespace prl
