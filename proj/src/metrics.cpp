#include "prl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include "prl/image_io.hpp"

namespace prl {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_same_extent(const char* op, int ph, int pw, const BinaryMask& gt) {
    if (ph != gt.height || pw != gt.width)
        throw ShapeError(std::string(op) + ": prediction and ground truth extents differ");
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

PrCurve pr_curve(const SaliencyMap& pred, const BinaryMask& gt) {
    require_same_extent("pr_curve", pred.height, pred.width, gt);
    const int64_t n = static_cast<int64_t>(pred.values.size());
    for (double v : pred.values)
        if (v < 0.0 || v > 1.0) throw Error("pr_curve: prediction outside [0,1]");
    PrCurve out;
    for (int t = 0; t < 256; ++t) {
        const double thr = t / 255.0;
        int64_t tp = 0, pp = 0, fg = 0;
        for (int64_t i = 0; i < n; ++i) {
            const bool p = pred.values[i] >= thr;
            const bool g = gt.values[i] != 0;
            pp += p;
            fg += g;
            tp += p && g;
        }
        out.precision[t] = pp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(pp);
        out.recall[t] = fg == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(fg);
    }
    return out;
}

double f_measure(double precision, double recall, double beta2) {
    const double denom = beta2 * precision + recall;
    if (denom == 0.0) return 0.0;
    return (1.0 + beta2) * precision * recall / denom;
}

double mae(const SaliencyMap& pred, const BinaryMask& gt) {
    require_same_extent("mae", pred.height, pred.width, gt);
    double s = 0.0;
    for (size_t i = 0; i < pred.values.size(); ++i)
        s += std::abs(pred.values[i] - static_cast<double>(gt.values[i]));
    return s / static_cast<double>(pred.values.size());
}

namespace {

// Object term over one region: 2 x_bar / (x_bar^2 + 1 + sigma_x + eps).
double object_score(const std::vector<double>& pred, const std::vector<uint8_t>& region) {
    int64_t n = 0;
    double mean = 0.0;
    for (size_t i = 0; i < pred.size(); ++i)
        if (region[i]) {
            mean += pred[i];
            ++n;
        }
    if (n == 0) return 0.0;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (size_t i = 0; i < pred.size(); ++i)
        if (region[i]) var += (pred[i] - mean) * (pred[i] - mean);
    // Sample standard deviation, matching the reference implementation.
    const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    return 2.0 * mean / (mean * mean + 1.0 + sd + kEps);
}

double s_object(const SaliencyMap& pred, const BinaryMask& gt) {
    std::vector<double> fg(pred.values.size()), bg(pred.values.size());
    std::vector<uint8_t> inv(gt.values.size());
    for (size_t i = 0; i < pred.values.size(); ++i) {
        fg[i] = gt.values[i] ? pred.values[i] : 0.0;
        bg[i] = gt.values[i] ? 0.0 : 1.0 - pred.values[i];
        inv[i] = gt.values[i] ? 0 : 1;
    }
    double mu = 0.0;
    for (uint8_t v : gt.values) mu += v;
    mu /= static_cast<double>(gt.values.size());
    return mu * object_score(fg, gt.values) + (1.0 - mu) * object_score(bg, inv);
}

struct Block {
    int r0, r1, c0, c1;  // half-open
    double weight;
};

// Blocks split at the foreground centroid, weighted by area.
std::array<Block, 4> centroid_blocks(const BinaryMask& gt) {
    int64_t sum_r = 0, sum_c = 0, count = 0;
    for (int r = 0; r < gt.height; ++r)
        for (int c = 0; c < gt.width; ++c)
            if (gt.at(r, c)) {
                sum_r += r;
                sum_c += c;
                ++count;
            }
    // Split coordinates: one past the centroid pixel, so every block is
    // non-empty for interior centroids.
    int cy, cx;
    if (count == 0) {
        cy = gt.height / 2;
        cx = gt.width / 2;
    } else {
        cy = static_cast<int>(std::lround(static_cast<double>(sum_r) / count));
        cx = static_cast<int>(std::lround(static_cast<double>(sum_c) / count));
    }
    const int sr = std::min(cy + 1, gt.height);
    const int sc = std::min(cx + 1, gt.width);
    const double area = static_cast<double>(gt.height) * gt.width;
    std::array<Block, 4> blocks{{
        {0, sr, 0, sc, 0.0},
        {0, sr, sc, gt.width, 0.0},
        {sr, gt.height, 0, sc, 0.0},
        {sr, gt.height, sc, gt.width, 0.0},
    }};
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
        blocks[i].weight =
            static_cast<double>(blocks[i].r1 - blocks[i].r0) * (blocks[i].c1 - blocks[i].c0) / area;
        acc += blocks[i].weight;
    }
    blocks[3].weight = 1.0 - acc;
    return blocks;
}

// SSIM-style similarity on one block of the two maps.
double block_ssim(const SaliencyMap& pred, const BinaryMask& gt, const Block& b) {
    const int64_t n = static_cast<int64_t>(b.r1 - b.r0) * (b.c1 - b.c0);
    if (n <= 0) return 1.0;
    double mx = 0.0, my = 0.0;
    for (int r = b.r0; r < b.r1; ++r)
        for (int c = b.c0; c < b.c1; ++c) {
            mx += pred.values[static_cast<size_t>(r) * pred.width + c];
            my += gt.at(r, c);
        }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sx = 0.0, sy = 0.0, sxy = 0.0;
    for (int r = b.r0; r < b.r1; ++r)
        for (int c = b.c0; c < b.c1; ++c) {
            const double dx = pred.values[static_cast<size_t>(r) * pred.width + c] - mx;
            const double dy = gt.at(r, c) - my;
            sx += dx * dx;
            sy += dy * dy;
            sxy += dx * dy;
        }
    const double div = static_cast<double>(n) - 1.0 + kEps;
    sx /= div;
    sy /= div;
    sxy /= div;
    const double num = 4.0 * mx * my * sxy;
    const double den = (mx * mx + my * my) * (sx + sy);
    if (num != 0.0) return num / (den + kEps);
    return den == 0.0 ? 1.0 : 0.0;
}

double s_region(const SaliencyMap& pred, const BinaryMask& gt) {
    double q = 0.0;
    for (const Block& b : centroid_blocks(gt)) q += b.weight * block_ssim(pred, gt, b);
    return q;
}

}  // namespace

double s_measure(const SaliencyMap& pred, const BinaryMask& gt, double alpha) {
    require_same_extent("s_measure", pred.height, pred.width, gt);
    double mu = 0.0;
    for (uint8_t v : gt.values) mu += v;
    mu /= static_cast<double>(gt.values.size());
    if (mu == 0.0) return 1.0 - mean_of(pred.values);  // no foreground
    if (mu == 1.0) return mean_of(pred.values);        // no background
    const double q = alpha * s_object(pred, gt) + (1.0 - alpha) * s_region(pred, gt);
    return std::clamp(q, 0.0, 1.0);
}

double e_measure(const SaliencyMap& pred, const BinaryMask& gt) {
    require_same_extent("e_measure", pred.height, pred.width, gt);
    const double thr = std::min(2.0 * mean_of(pred.values), 1.0);
    const size_t n = pred.values.size();
    std::vector<double> bin(n);
    for (size_t i = 0; i < n; ++i) bin[i] = pred.values[i] >= thr ? 1.0 : 0.0;

    int64_t fg = 0;
    for (uint8_t v : gt.values) fg += v;
    if (fg == 0) {
        double s = 0.0;
        for (double b : bin) s += 1.0 - b;
        return s / static_cast<double>(n);
    }
    if (fg == static_cast<int64_t>(n)) return mean_of(bin);

    const double mu_gt = static_cast<double>(fg) / static_cast<double>(n);
    const double mu_bin = mean_of(bin);
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double a = gt.values[i] - mu_gt;
        const double b = bin[i] - mu_bin;
        const double phi = 2.0 * a * b / (a * a + b * b + kEps);
        sum += (phi + 1.0) * (phi + 1.0) / 4.0;
    }
    return sum / static_cast<double>(n);
}

ImageMetrics evaluate_pair(const std::string& id, const SaliencyMap& pred, const BinaryMask& gt,
                           PrCurve* curve_out) {
    ImageMetrics m;
    m.id = id;
    m.s = s_measure(pred, gt);
    m.e = e_measure(pred, gt);
    m.mae = mae(pred, gt);
    const PrCurve pr = pr_curve(pred, gt);
    double maxf = 0.0, meanf = 0.0;
    for (int t = 0; t < 256; ++t) {
        const double f = f_measure(pr.precision[t], pr.recall[t]);
        maxf = std::max(maxf, f);
        meanf += f;
    }
    m.max_f = maxf;
    m.mean_f = meanf / 256.0;
    // Adaptive F at threshold 2*mean(pred), clipped to 1.
    const double thr = std::min(2.0 * mean_of(pred.values), 1.0);
    int64_t tp = 0, pp = 0, fg = 0;
    for (size_t i = 0; i < pred.values.size(); ++i) {
        const bool p = pred.values[i] >= thr;
        pp += p;
        fg += gt.values[i];
        tp += p && gt.values[i];
    }
    const double ap = pp == 0 ? 1.0 : static_cast<double>(tp) / pp;
    const double ar = fg == 0 ? 1.0 : static_cast<double>(tp) / fg;
    m.adaptive_f = f_measure(ap, ar);
    if (curve_out) *curve_out = pr;
    return m;
}

namespace {

std::map<std::string, std::string> list_images(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");
    std::map<std::string, std::string> out;  // stem -> path
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".pgm") out[entry.path().stem().string()] = entry.path().string();
    }
    return out;
}

SaliencyMap load_saliency(const std::string& path) {
    const GrayImage img = load_gray(path);
    SaliencyMap s{img.height, img.width, std::vector<double>(img.values.size())};
    for (size_t i = 0; i < img.values.size(); ++i) s.values[i] = img.values[i] / 255.0;
    return s;
}

}  // namespace

MetricReport evaluate_dir(const std::string& pred_dir, const std::string& gt_dir) {
    const auto preds = list_images(pred_dir);
    const auto gts = list_images(gt_dir);
    MetricReport report;
    PrCurve pr_sum;
    int matched = 0;
    for (const auto& [stem, pred_path] : preds) {  // std::map: sorted by id
        const auto it = gts.find(stem);
        if (it == gts.end()) continue;
        const SaliencyMap pred = load_saliency(pred_path);
        const BinaryMask gt = mask_from_gray(load_gray(it->second));
        PrCurve pr;
        report.per_image.push_back(evaluate_pair(stem, pred, gt, &pr));
        for (int t = 0; t < 256; ++t) {
            pr_sum.precision[t] += pr.precision[t];
            pr_sum.recall[t] += pr.recall[t];
        }
        ++matched;
    }
    if (matched == 0) throw Error("no prediction/ground-truth filename pairs matched");
    report.aggregate.id = "mean";
    for (const auto& m : report.per_image) {
        report.aggregate.s += m.s;
        report.aggregate.e += m.e;
        report.aggregate.mae += m.mae;
        report.aggregate.max_f += m.max_f;
        report.aggregate.mean_f += m.mean_f;
        report.aggregate.adaptive_f += m.adaptive_f;
    }
    const double inv = 1.0 / matched;
    report.aggregate.s *= inv;
    report.aggregate.e *= inv;
    report.aggregate.mae *= inv;
    report.aggregate.max_f *= inv;
    report.aggregate.mean_f *= inv;
    report.aggregate.adaptive_f *= inv;
    for (int t = 0; t < 256; ++t) {
        report.pr.precision[t] = pr_sum.precision[t] * inv;
        report.pr.recall[t] = pr_sum.recall[t] * inv;
    }
    return report;
}

namespace {

void write_metrics_row(std::ofstream& out, const ImageMetrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", m.id.c_str(), m.s,
                  m.max_f, m.mean_f, m.adaptive_f, m.e, m.mae);
    out << buf;
}

}  // namespace

void write_report_csv(const std::string& path, const MetricReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "id,s_measure,max_f,mean_f,adaptive_f,e_measure,mae\n";
    for (const auto& m : report.per_image) write_metrics_row(out, m);
    write_metrics_row(out, report.aggregate);
}

void write_pr_csv(const std::string& path, const PrCurve& pr) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "threshold,precision,recall\n";
    for (int t = 0; t < 256; ++t) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f\n", t, pr.precision[t], pr.recall[t]);
        out << buf;
    }
}

}  // namespace prl
