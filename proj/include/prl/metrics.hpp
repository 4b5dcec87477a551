#pragma once

#include <array>
#include <string>
#include <vector>

#include "prl/geometry.hpp"

namespace prl {

// Saliency prediction in [0,1], row-major.
struct SaliencyMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;
};

struct PrCurve {
    std::array<double, 256> precision{};
    std::array<double, 256> recall{};
};

// Binarize at t/255 for t = 0..255 (pixel salient iff pred >= t/255) and
// count against the ground truth. Empty-denominator conventions: P = 1 when
// no pixel is predicted salient, R = 1 when the ground truth has no salient
// pixel.
PrCurve pr_curve(const SaliencyMap& pred, const BinaryMask& gt);

// (1+b^2)PR / (b^2 P + R); 0 when the denominator is 0.
double f_measure(double precision, double recall, double beta2 = 0.3);

double mae(const SaliencyMap& pred, const BinaryMask& gt);

// Structure measure, object term plus region term at the ground-truth
// centroid, following the cited 2017 construction. Degenerate ground truths:
// all background scores 1 - mean(pred), all foreground scores mean(pred).
double s_measure(const SaliencyMap& pred, const BinaryMask& gt, double alpha = 0.5);

// Enhanced-alignment measure on the prediction binarized at twice its mean
// (clipped to 1), per the cited 2018 construction, averaged over H*W.
// Degenerate ground truths: all background -> mean(1 - bin), all foreground
// -> mean(bin).
double e_measure(const SaliencyMap& pred, const BinaryMask& gt);

struct ImageMetrics {
    std::string id;
    double s = 0.0;
    double e = 0.0;
    double mae = 0.0;
    double max_f = 0.0;
    double mean_f = 0.0;
    double adaptive_f = 0.0;  // threshold = min(2*mean(pred), 1)
};

struct MetricReport {
    std::vector<ImageMetrics> per_image;  // sorted by id
    ImageMetrics aggregate;               // arithmetic means, id = "mean"
    PrCurve pr;                           // per-threshold means across images
};

ImageMetrics evaluate_pair(const std::string& id, const SaliencyMap& pred, const BinaryMask& gt,
                           PrCurve* curve_out = nullptr);

// Pairs files by stem across the two directories (8-bit grayscale PNG/PGM,
// value/255 = saliency). Throws on an empty intersection or unreadable files.
MetricReport evaluate_dir(const std::string& pred_dir, const std::string& gt_dir);

void write_report_csv(const std::string& path, const MetricReport& report);
void write_pr_csv(const std::string& path, const PrCurve& pr);

}  // namespace prl
