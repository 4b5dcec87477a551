#include "prl/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace prl {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_png_magic(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    unsigned char magic[8] = {};
    in.read(reinterpret_cast<char*>(magic), 8);
    return in.gcount() == 8 && png_sig_cmp(magic, 0, 8) == 0;
}

// Decodes a PNG to 8-bit with `channels` (1 = gray, 3 = rgb).
std::vector<uint8_t> load_png(const std::string& path, int channels, int* h, int* w) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng init failed");
    }
    std::vector<uint8_t> out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode PNG " + path);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    if (channels == 1) {
        if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray(png, 1, -1.0, -1.0);
    } else {
        if (!(color & PNG_COLOR_MASK_COLOR)) png_set_gray_to_rgb(png);
    }
    png_read_update_info(png, info);

    *h = static_cast<int>(png_get_image_height(png, info));
    *w = static_cast<int>(png_get_image_width(png, info));
    out.resize(static_cast<size_t>(*h) * *w * channels);
    std::vector<png_bytep> rows(*h);
    for (int r = 0; r < *h; ++r) rows[r] = out.data() + static_cast<size_t>(r) * *w * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void skip_pnm_space(std::istream& in) {
    int c = in.peek();
    while (c == '#' || std::isspace(c)) {
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            in.get();
        }
        c = in.peek();
    }
}

GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P2") throw IoError(path + ": not a P5/P2 PGM file");
    int w = 0, h = 0, maxval = 0;
    skip_pnm_space(in);
    in >> w;
    skip_pnm_space(in);
    in >> h;
    skip_pnm_space(in);
    in >> maxval;
    if (!in || w < 1 || h < 1 || maxval < 1 || maxval > 255)
        throw IoError(path + ": unsupported PGM header");
    GrayImage img{h, w, std::vector<uint8_t>(static_cast<size_t>(h) * w)};
    if (magic == "P5") {
        in.get();  // single whitespace after maxval
        in.read(reinterpret_cast<char*>(img.values.data()),
                static_cast<std::streamsize>(img.values.size()));
        if (in.gcount() != static_cast<std::streamsize>(img.values.size()))
            throw IoError(path + ": truncated PGM data");
    } else {
        for (auto& v : img.values) {
            int x;
            in >> x;
            if (!in) throw IoError(path + ": truncated PGM data");
            v = static_cast<uint8_t>(std::clamp(x, 0, 255));
        }
    }
    return img;
}

}  // namespace

GrayImage load_gray(const std::string& path) {
    if (has_png_magic(path)) {
        GrayImage img;
        img.values = load_png(path, 1, &img.height, &img.width);
        return img;
    }
    return load_pgm(path);
}

RgbImage load_rgb(const std::string& path) {
    if (has_png_magic(path)) {
        RgbImage img;
        img.values = load_png(path, 3, &img.height, &img.width);
        return img;
    }
    const GrayImage g = load_pgm(path);
    RgbImage img{g.height, g.width, std::vector<uint8_t>(g.values.size() * 3)};
    for (size_t i = 0; i < g.values.size(); ++i)
        img.values[3 * i] = img.values[3 * i + 1] = img.values[3 * i + 2] = g.values[i];
    return img;
}

void save_gray_png(const std::string& path, const GrayImage& img) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode PNG " + path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < img.height; ++r)
        png_write_row(png, const_cast<png_bytep>(img.values.data() +
                                                 static_cast<size_t>(r) * img.width));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void save_gray_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.values.data()),
              static_cast<std::streamsize>(img.values.size()));
    if (!out) throw IoError("short write to " + path);
}

BinaryMask mask_from_gray(const GrayImage& img) {
    BinaryMask m{img.height, img.width, std::vector<uint8_t>(img.values.size())};
    for (size_t i = 0; i < img.values.size(); ++i) m.values[i] = img.values[i] >= 128 ? 1 : 0;
    return m;
}

GrayImage gray_from_mask(const BinaryMask& mask) {
    GrayImage img{mask.height, mask.width, std::vector<uint8_t>(mask.values.size())};
    for (size_t i = 0; i < mask.values.size(); ++i) img.values[i] = mask.values[i] ? 255 : 0;
    return img;
}

namespace {

template <typename T>
std::vector<uint8_t> resize_bilinear_impl(const std::vector<uint8_t>& src, int sh, int sw,
                                          int channels, int dh, int dw) {
    std::vector<uint8_t> dst(static_cast<size_t>(dh) * dw * channels);
    for (int r = 0; r < dh; ++r) {
        double sy = (r + 0.5) * sh / dh - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(sh - 1));
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, sh - 1);
        const double fy = sy - y0;
        for (int c = 0; c < dw; ++c) {
            double sx = (c + 0.5) * sw / dw - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(sw - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, sw - 1);
            const double fx = sx - x0;
            for (int ch = 0; ch < channels; ++ch) {
                const double v =
                    (1 - fy) * ((1 - fx) * src[(static_cast<size_t>(y0) * sw + x0) * channels + ch] +
                                fx * src[(static_cast<size_t>(y0) * sw + x1) * channels + ch]) +
                    fy * ((1 - fx) * src[(static_cast<size_t>(y1) * sw + x0) * channels + ch] +
                          fx * src[(static_cast<size_t>(y1) * sw + x1) * channels + ch]);
                dst[(static_cast<size_t>(r) * dw + c) * channels + ch] =
                    static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return dst;
}

}  // namespace

GrayImage resize_bilinear(const GrayImage& img, int height, int width) {
    if (img.height == height && img.width == width) return img;
    return {height, width,
            resize_bilinear_impl<uint8_t>(img.values, img.height, img.width, 1, height, width)};
}

RgbImage resize_bilinear(const RgbImage& img, int height, int width) {
    if (img.height == height && img.width == width) return img;
    return {height, width,
            resize_bilinear_impl<uint8_t>(img.values, img.height, img.width, 3, height, width)};
}

GrayImage resize_nearest(const GrayImage& img, int height, int width) {
    if (img.height == height && img.width == width) return img;
    GrayImage dst{height, width, std::vector<uint8_t>(static_cast<size_t>(height) * width)};
    for (int r = 0; r < height; ++r) {
        const int sr = std::min(static_cast<int>((r + 0.5) * img.height / height),
                                img.height - 1);
        for (int c = 0; c < width; ++c) {
            const int sc = std::min(static_cast<int>((c + 0.5) * img.width / width),
                                    img.width - 1);
            dst.values[static_cast<size_t>(r) * width + c] =
                img.values[static_cast<size_t>(sr) * img.width + sc];
        }
    }
    return dst;
}

void write_pfm(const std::string& path, int height, int width, const std::vector<double>& data) {
    if (static_cast<int64_t>(data.size()) != static_cast<int64_t>(height) * width)
        throw IoError("write_pfm: data size does not match extents");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "Pf\n" << width << " " << height << "\n-1.0\n";
    std::vector<float> row(width);
    for (int r = height - 1; r >= 0; --r) {  // bottom-up row order
        for (int c = 0; c < width; ++c)
            row[c] = static_cast<float>(data[static_cast<size_t>(r) * width + c]);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(sizeof(float) * width));
    }
    if (!out) throw IoError("short write to " + path);
}

std::vector<double> read_pfm(const std::string& path, int* height, int* width) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "Pf") throw IoError(path + ": not a single-channel PFM");
    int w = 0, h = 0;
    double scale = 0.0;
    in >> w >> h >> scale;
    if (!in || w < 1 || h < 1 || scale >= 0.0)
        throw IoError(path + ": unsupported PFM header (big-endian or malformed)");
    in.get();  // newline before the raster
    std::vector<double> data(static_cast<size_t>(h) * w);
    std::vector<float> row(w);
    for (int r = h - 1; r >= 0; --r) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(sizeof(float) * w));
        if (in.gcount() != static_cast<std::streamsize>(sizeof(float) * w))
            throw IoError(path + ": truncated PFM data");
        for (int c = 0; c < w; ++c) data[static_cast<size_t>(r) * w + c] = row[c];
    }
    *height = h;
    *width = w;
    return data;
}

}  // namespace prl
