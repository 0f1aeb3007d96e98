#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "farmmind/image.hpp"
#include "farmmind/raster.hpp"

namespace farmmind {

/// Stage-1 selection parameters: confidence interval half-width T and the
/// accepted bounding-box area range [area_min, area_min + area_increment],
/// inclusive at both ends.
struct AmbiguityParams {
    double threshold = 1.0;
    std::int64_t area_min = 5000;
    std::int64_t area_increment = 95000;
    Connectivity connectivity = Connectivity::eight;

    std::int64_t area_max() const { return area_min + area_increment; }
};

void validate_params(const AmbiguityParams& params);

/// One flagged low-confidence component that survived the area filter.
/// region_id is ordinal (1..n) over the surviving regions, in raster scan
/// order of each region's first pixel.
struct AmbiguityRegion {
    int region_id = 0;
    Bbox bbox;
    std::int64_t bbox_area = 0;
    std::int64_t pixel_count = 0;
    std::string source_patch_id;

    bool operator==(const AmbiguityRegion&) const = default;
};

/// binarize -> connected components -> bounding boxes -> keep regions whose
/// bbox area lies in [area_min, area_max], renumbered 1..n.
std::vector<AmbiguityRegion> select_ambiguous_regions(const ConfidenceMap& conf,
                                                      const AmbiguityParams& params,
                                                      const std::string& source_patch_id = "");

struct BoxStyle {
    std::uint8_t r = 255;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    int stroke_px = 3;
};

/// Draws the box outline inside the box bounds; only outline pixels change.
/// A zero-width stroke leaves the image untouched.
ImageRgb annotate_with_box(const ImageRgb& image, const Bbox& box,
                           const BoxStyle& style = {});

/// JSON record array for a region list:
/// [{region_id, bbox:[x_min,y_min,x_max,y_max], bbox_area, pixel_count}, ...]
std::string regions_to_json(const std::vector<AmbiguityRegion>& regions);
std::vector<AmbiguityRegion> regions_from_json(const std::string& text);

}  // namespace farmmind
