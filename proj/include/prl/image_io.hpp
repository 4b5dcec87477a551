#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prl/errors.hpp"
#include "prl/geometry.hpp"

namespace prl {

struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> values;  // row-major
};

struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> values;  // row-major, interleaved r,g,b
};

// 8-bit grayscale PNG or PGM (chosen by magic bytes); PNG color inputs are
// converted to luma, 16-bit depth is stripped.
GrayImage load_gray(const std::string& path);
RgbImage load_rgb(const std::string& path);

void save_gray_png(const std::string& path, const GrayImage& img);
void save_gray_pgm(const std::string& path, const GrayImage& img);

// Threshold at 128: pixel >= 128 is salient.
BinaryMask mask_from_gray(const GrayImage& img);
GrayImage gray_from_mask(const BinaryMask& mask);

GrayImage resize_bilinear(const GrayImage& img, int height, int width);
RgbImage resize_bilinear(const RgbImage& img, int height, int width);
GrayImage resize_nearest(const GrayImage& img, int height, int width);

// Single-channel PFM: "Pf", "<width> <height>", negative scale meaning
// little-endian 32-bit floats, rows bottom-up per the PFM convention. The
// in-memory layout here is top-down; conversion happens at the file border.
void write_pfm(const std::string& path, int height, int width, const std::vector<double>& data);
std::vector<double> read_pfm(const std::string& path, int* height, int* width);

}  // namespace prl
