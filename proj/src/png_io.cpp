#include "prep/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

namespace prep {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

} // namespace

GrayImage read_png_gray(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("read_png_gray: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("read_png_gray: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("read_png_gray: png_create_info_struct failed");
    }

    std::vector<uint8_t> rgba;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png_gray: malformed PNG " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    // Normalize every color type / depth / interlace combination to RGBA8;
    // the BT.601 conversion below is then done in our own arithmetic so the
    // quantization rule matches the rest of the toolkit.
    png_set_expand(png);
    png_set_scale_16(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_add_alpha(png, 0xFF, PNG_FILLER_AFTER);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    const int w = int(png_get_image_width(png, info));
    const int h = int(png_get_image_height(png, info));
    if (w < 1 || h < 1 || png_get_rowbytes(png, info) != size_t(w) * 4) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png_gray: unsupported PNG layout " + path);
    }

    rgba.resize(size_t(w) * h * 4);
    rows.resize(size_t(h));
    for (int y = 0; y < h; ++y) rows[size_t(y)] = rgba.data() + size_t(y) * w * 4;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    GrayImage out(w, h);
    auto& dst = out.data();
    for (size_t i = 0; i < dst.size(); ++i) {
        const uint8_t* px = rgba.data() + i * 4;
        double a = px[3] / 255.0;
        double r = px[0] * a + 255.0 * (1.0 - a);
        double g = px[1] * a + 255.0 * (1.0 - a);
        double b = px[2] * a + 255.0 * (1.0 - a);
        dst[i] = quantize(0.299 * r + 0.587 * g + 0.114 * b);
    }
    return out;
}

void write_png_gray(const std::string& path, const GrayImage& img) {
    if (img.empty()) throw std::invalid_argument("write_png_gray: empty image");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("write_png_gray: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("write_png_gray: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("write_png_gray: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png_gray: write failed for " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, png_uint_32(img.width()), png_uint_32(img.height()), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    // Fixed filter + compression settings keep the byte stream reproducible.
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_compression_level(png, 6);
    png_write_info(png, info);

    std::vector<png_bytep> rows(size_t(img.height()));
    for (int y = 0; y < img.height(); ++y)
        rows[size_t(y)] = const_cast<uint8_t*>(img.row(y));
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace prep
