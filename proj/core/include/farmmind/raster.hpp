#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "farmmind/geo.hpp"

namespace farmmind {

/// Axis-aligned pixel box, half-open: [x_min,x_max) x [y_min,y_max),
/// coordinates are (col,row) with origin at the top-left.
struct Bbox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;

    bool operator==(const Bbox&) const = default;

    int width() const { return x_max - x_min; }
    int height() const { return y_max - y_min; }
    std::int64_t area() const { return static_cast<std::int64_t>(width()) * height(); }
    bool valid() const { return x_min < x_max && y_min < y_max; }
    bool contains(int x, int y) const {
        return x >= x_min && x < x_max && y >= y_min && y < y_max;
    }
};

inline void require_box_in_bounds(const Bbox& box, int width, int height,
                                  const char* what = "bbox") {
    if (!box.valid())
        throw std::invalid_argument(std::string(what) + " is degenerate");
    if (box.x_min < 0 || box.y_min < 0 || box.x_max > width || box.y_max > height)
        throw std::out_of_range(std::string(what) + " exceeds raster bounds");
}

/// Lon/lat rectangle spanned by a pixel box under `gt`.
inline GeoBox pixel_box_to_geo(const GeoTransform& gt, const Bbox& box) {
    const double lon_a = gt.origin_lon + box.x_min * gt.px_w_deg;
    const double lon_b = gt.origin_lon + box.x_max * gt.px_w_deg;
    const double lat_a = gt.origin_lat + box.y_min * gt.px_h_deg;
    const double lat_b = gt.origin_lat + box.y_max * gt.px_h_deg;
    return {std::min(lon_a, lon_b), std::min(lat_a, lat_b),
            std::max(lon_a, lon_b), std::max(lat_a, lat_b)};
}

/// Row-major pixel grid. The Tag parameter keeps semantically different
/// rasters (confidence scores, binary masks, intermediate int masks) as
/// distinct types with their own invariants.
template <typename T, typename Tag>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("grid dimensions must be positive");
        values_.assign(static_cast<std::size_t>(width) * height, fill);
    }
    Grid(int width, int height, std::vector<T> values)
        : width_(width), height_(height), values_(std::move(values)) {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("grid dimensions must be positive");
        if (values_.size() != static_cast<std::size_t>(width) * height)
            throw std::invalid_argument("grid value count does not match dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    T at(int x, int y) const { return values_[index(x, y)]; }
    T& at(int x, int y) { return values_[index(x, y)]; }
    void set(int x, int y, T v) { values_[index(x, y)] = v; }

    std::span<const T> values() const { return values_; }
    std::span<T> values() { return values_; }

    bool operator==(const Grid&) const = default;

private:
    std::size_t index(int x, int y) const {
        if (x < 0 || x >= width_ || y < 0 || y >= height_)
            throw std::out_of_range("grid coordinate out of range");
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> values_;
};

/// Per-pixel real-valued score grid from the base segmenter; scores are
/// signed logit-like values centered at 0. Adapters emitting calibrated
/// probabilities must map p -> logit before ingestion.
using ConfidenceMap = Grid<float, struct ConfidenceTag>;

/// Per-pixel {0,1} grid.
using BinaryMask = Grid<std::uint8_t, struct BinaryTag>;

/// Intermediate corrected mask; entries in {-1,0,1,2} when produced by
/// mask arithmetic on binary inputs.
using IntMask = Grid<std::int8_t, struct IntTag>;

/// Throws if any entry is outside {0,1}.
void validate_binary(const BinaryMask& mask);
/// Throws if any value is non-finite.
void validate_confidence(const ConfidenceMap& conf);

struct PixelCoord {
    int x = 0;
    int y = 0;
    bool operator==(const PixelCoord&) const = default;
    auto operator<=>(const PixelCoord&) const = default;
};

/// One connected foreground component. Pixels are stored in raster order;
/// ids run 1..K in first-encounter raster order.
struct Region {
    int id = 0;
    std::vector<PixelCoord> pixels;

    std::size_t pixel_count() const { return pixels.size(); }
};

enum class Connectivity { four, eight };

const char* to_string(Connectivity c);

/// Low-confidence binarization: output is 1 exactly where the score lies in
/// [-threshold, threshold]. Rejects negative thresholds and non-finite scores.
BinaryMask binarize_confidence(const ConfidenceMap& conf, double threshold);

/// Connected-component labeling of the foreground under the chosen
/// connectivity. Returns regions whose pixel sets partition the 1-pixels.
std::vector<Region> label_connected_components(const BinaryMask& mask,
                                               Connectivity connectivity);

/// Tightest axis-aligned box containing every pixel of a non-empty region.
Bbox bounding_box(const Region& region);

/// Element-wise a+b; entries land in {0,1,2}. Dimensions must match.
IntMask mask_add(const BinaryMask& a, const BinaryMask& b);
/// Element-wise a-b; entries land in {-1,0,1}. Dimensions must match.
IntMask mask_subtract(const BinaryMask& a, const BinaryMask& b);

/// Binary remapping min(max(0,v),1) per entry. Input entries must lie in
/// {-1,0,1,2}; anything else fails loudly.
BinaryMask clamp_binary(const IntMask& m);

/// Exact sub-grid copy over a half-open box. Works for any grid kind.
template <typename T, typename Tag>
Grid<T, Tag> crop(const Grid<T, Tag>& raster, const Bbox& box) {
    require_box_in_bounds(box, raster.width(), raster.height(), "crop box");
    Grid<T, Tag> out(box.width(), box.height());
    for (int y = box.y_min; y < box.y_max; ++y)
        for (int x = box.x_min; x < box.x_max; ++x)
            out.set(x - box.x_min, y - box.y_min, raster.at(x, y));
    return out;
}

/// Resamples an auxiliary binary mask onto the target pixel grid by
/// geographic nearest-neighbor lookup, restricted to `restrict_to`; pixels
/// outside the box, and target pixels whose center falls outside the
/// auxiliary extent, are 0. A point on the boundary between two auxiliary
/// cells resolves to the cell containing it under the half-open convention.
BinaryMask register_mask(const BinaryMask& aux_mask, const GeoTransform& aux_geo,
                         const GeoTransform& target_geo, int target_width,
                         int target_height, const Bbox& restrict_to);

}  // namespace farmmind
