#include "farmmind/ambiguity.hpp"

#include <cmath>

#include "json.hpp"

namespace farmmind {

void validate_params(const AmbiguityParams& params) {
    if (!(params.threshold >= 0.0) || !std::isfinite(params.threshold))
        throw std::invalid_argument("ambiguity threshold must be finite and >= 0");
    if (params.area_min < 0)
        throw std::invalid_argument("area_min must be >= 0");
    if (params.area_increment < 0)
        throw std::invalid_argument("area_increment must be >= 0");
}

std::vector<AmbiguityRegion> select_ambiguous_regions(const ConfidenceMap& conf,
                                                      const AmbiguityParams& params,
                                                      const std::string& source_patch_id) {
    validate_params(params);
    const BinaryMask low = binarize_confidence(conf, params.threshold);
    const std::vector<Region> components =
        label_connected_components(low, params.connectivity);

    std::vector<AmbiguityRegion> out;
    for (const Region& r : components) {
        const Bbox box = bounding_box(r);
        const std::int64_t area = box.area();
        if (area < params.area_min || area > params.area_max())
            continue;
        AmbiguityRegion region;
        region.region_id = static_cast<int>(out.size()) + 1;
        region.bbox = box;
        region.bbox_area = area;
        region.pixel_count = static_cast<std::int64_t>(r.pixel_count());
        region.source_patch_id = source_patch_id;
        out.push_back(std::move(region));
    }
    return out;
}

ImageRgb annotate_with_box(const ImageRgb& image, const Bbox& box,
                           const BoxStyle& style) {
    require_box_in_bounds(box, image.width(), image.height(), "annotation box");
    if (style.stroke_px < 0)
        throw std::invalid_argument("stroke width must be >= 0");
    ImageRgb out = image;
    const int k = style.stroke_px;
    for (int y = box.y_min; y < box.y_max; ++y) {
        for (int x = box.x_min; x < box.x_max; ++x) {
            const bool on_outline = (x - box.x_min) < k || (box.x_max - 1 - x) < k ||
                                    (y - box.y_min) < k || (box.y_max - 1 - y) < k;
            if (on_outline)
                out.set_pixel(x, y, style.r, style.g, style.b);
        }
    }
    return out;
}

std::string regions_to_json(const std::vector<AmbiguityRegion>& regions) {
    nlohmann::json arr = nlohmann::json::array();
    for (const AmbiguityRegion& r : regions) {
        arr.push_back({{"region_id", r.region_id},
                       {"bbox", {r.bbox.x_min, r.bbox.y_min, r.bbox.x_max, r.bbox.y_max}},
                       {"bbox_area", r.bbox_area},
                       {"pixel_count", r.pixel_count}});
    }
    return arr.dump();
}

std::vector<AmbiguityRegion> regions_from_json(const std::string& text) {
    nlohmann::json arr = nlohmann::json::parse(text);
    std::vector<AmbiguityRegion> out;
    for (const auto& item : arr) {
        AmbiguityRegion r;
        r.region_id = item.at("region_id").get<int>();
        const auto& b = item.at("bbox");
        r.bbox = Bbox{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(),
                      b.at(3).get<int>()};
        r.bbox_area = item.at("bbox_area").get<std::int64_t>();
        r.pixel_count = item.at("pixel_count").get<std::int64_t>();
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace farmmind
