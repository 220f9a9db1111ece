#include "rvw/image.hpp"

#include "rvw/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

namespace rvw {

ErpImage::ErpImage(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c),
      data(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0) * std::max(c, 0), fill)
{
}

namespace {

std::uint8_t to_byte(double v)
{
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

int wrap_index(int i, int n)
{
    const int m = i % n;
    return m < 0 ? m + n : m;
}

}  // namespace

ErpImage warp_erp(const ErpImage& img, const geo::Rotation& r, Interp interp)
{
    if (img.empty() || img.data.size() != static_cast<std::size_t>(img.width) * img.height * img.channels) {
        throw ValidationError("warp_erp: empty or inconsistent image");
    }
    const int w = img.width;
    const int h = img.height;
    const geo::Mat3 inv = r.matrix().transpose();
    ErpImage out(w, h, img.channels);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const geo::Direction d = geo::pixel_to_dir({static_cast<double>(x), static_cast<double>(y)}, w, h);
            const geo::PixelCoord src = geo::dir_to_pixel(geo::Direction::from_vector(inv * d.vec()), w, h);
            if (interp == Interp::nearest) {
                const int sx = wrap_index(static_cast<int>(std::lround(src.u)), w);
                const int sy = std::clamp(static_cast<int>(std::lround(src.v)), 0, h - 1);
                for (int c = 0; c < img.channels; ++c) {
                    out.at(x, y, c) = img.at(sx, sy, c);
                }
                continue;
            }
            const double fu = std::floor(src.u);
            const double fv = std::floor(src.v);
            const double ax = src.u - fu;
            const double ay = src.v - fv;
            const int x0 = wrap_index(static_cast<int>(fu), w);
            const int x1 = wrap_index(x0 + 1, w);
            const int y0 = std::clamp(static_cast<int>(fv), 0, h - 1);
            const int y1 = std::clamp(static_cast<int>(fv) + 1, 0, h - 1);
            for (int c = 0; c < img.channels; ++c) {
                const double top = (1.0 - ax) * img.at(x0, y0, c) + ax * img.at(x1, y0, c);
                const double bottom = (1.0 - ax) * img.at(x0, y1, c) + ax * img.at(x1, y1, c);
                out.at(x, y, c) = to_byte((1.0 - ay) * top + ay * bottom);
            }
        }
    }
    return out;
}

double psnr(const ErpImage& a, const ErpImage& b, const std::function<bool(int, int)>& include)
{
    if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
        throw ValidationError("psnr: image dimensions differ");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            if (include && !include(x, y)) {
                continue;
            }
            for (int c = 0; c < a.channels; ++c) {
                const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
                sum += d * d;
                ++count;
            }
        }
    }
    if (count == 0) {
        throw ValidationError("psnr: no pixels selected");
    }
    if (sum == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    const double mse = sum / static_cast<double>(count);
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

std::function<bool(int, int)> latitude_band(int height, double max_abs_lat)
{
    return [height, max_abs_lat](int, int y) {
        const double lat = geo::kPi / 2.0 - geo::kPi * (y + 0.5) / height;
        return std::abs(lat) <= max_abs_lat;
    };
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ErpImage read_png(const std::string& path)
{
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) {
        throw NotFoundError("cannot open " + path);
    }
    png_byte header[8];
    if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
        throw ParseError(path + ": not a PNG file");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("libpng initialization failed");
    }
    ErpImage img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError(path + ": corrupt PNG data");
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_bit_depth(png, info) == 16) {
        png_set_strip_16(png);
    }
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    img.data.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
    rows.resize(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        rows[static_cast<std::size_t>(y)] = img.data.data() + img.index(0, y);
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::string& path, const ErpImage& img)
{
    if (img.empty() || img.channels > 4) {
        throw ValidationError("write_png: unsupported image");
    }
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) {
        throw Error("cannot write " + path);
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng initialization failed");
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("PNG encoding failed for " + path);
    }
    static constexpr int kColorTypes[] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA, PNG_COLOR_TYPE_RGB,
                                          PNG_COLOR_TYPE_RGB_ALPHA};
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 kColorTypes[img.channels - 1], PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) {
        rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(img.data.data() + img.index(0, y));
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace rvw
