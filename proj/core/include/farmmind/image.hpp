#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "farmmind/raster.hpp"

namespace farmmind {

/// Interleaved 8-bit RGB image, row-major.
class ImageRgb {
public:
    ImageRgb() = default;
    ImageRgb(int width, int height, std::uint8_t r = 0, std::uint8_t g = 0,
             std::uint8_t b = 0)
        : width_(width), height_(height) {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("image dimensions must be positive");
        pixels_.resize(static_cast<std::size_t>(width) * height * 3);
        for (std::size_t i = 0; i < pixels_.size(); i += 3) {
            pixels_[i] = r;
            pixels_[i + 1] = g;
            pixels_[i + 2] = b;
        }
    }
    ImageRgb(int width, int height, std::vector<std::uint8_t> rgb)
        : width_(width), height_(height), pixels_(std::move(rgb)) {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("image dimensions must be positive");
        if (pixels_.size() != static_cast<std::size_t>(width) * height * 3)
            throw std::invalid_argument("pixel buffer does not match dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }

    std::uint8_t* pixel(int x, int y) { return &pixels_[offset(x, y)]; }
    const std::uint8_t* pixel(int x, int y) const { return &pixels_[offset(x, y)]; }

    void set_pixel(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        std::uint8_t* p = pixel(x, y);
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }

    std::span<const std::uint8_t> data() const { return pixels_; }
    std::span<std::uint8_t> data() { return pixels_; }

    bool operator==(const ImageRgb&) const = default;

private:
    std::size_t offset(int x, int y) const {
        if (x < 0 || x >= width_ || y < 0 || y >= height_)
            throw std::out_of_range("image coordinate out of range");
        return (static_cast<std::size_t>(y) * width_ + x) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Exact sub-image copy over a half-open box.
ImageRgb crop(const ImageRgb& image, const Bbox& box);

}  // namespace farmmind
