#pragma once

#include "rvw/geometry.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rvw {

// 8-bit interleaved raster. Frames are RGB (3 channels), masks and class maps
// are single channel.
struct ErpImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    ErpImage() = default;
    ErpImage(int w, int h, int c, std::uint8_t fill = 0);

    bool empty() const { return width <= 0 || height <= 0 || channels <= 0; }
    std::size_t index(int x, int y, int c = 0) const
    {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    std::uint8_t& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
    std::uint8_t at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

    friend bool operator==(const ErpImage&, const ErpImage&) = default;
};

enum class Interp { nearest, bilinear };

// out(p) = sample(img, R^-1 * dir(p)); longitude wraps, latitude clamps.
ErpImage warp_erp(const ErpImage& img, const geo::Rotation& r, Interp interp);

// PSNR in dB over all channels of the pixels accepted by `include` (all when
// empty). Identical inputs give +infinity.
double psnr(const ErpImage& a, const ErpImage& b,
            const std::function<bool(int x, int y)>& include = {});

// Rows whose pixel-center latitude satisfies |lat| <= max_abs_lat.
std::function<bool(int, int)> latitude_band(int height, double max_abs_lat);

// PNG I/O through libpng. Gray, gray+alpha, RGB and RGBA 8-bit files are read;
// palette and 16-bit inputs are expanded/stripped to 8-bit.
ErpImage read_png(const std::string& path);
void write_png(const std::string& path, const ErpImage& img);

}  // namespace rvw
