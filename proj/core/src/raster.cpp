#include "farmmind/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace farmmind {

void validate_binary(const BinaryMask& mask) {
    for (std::uint8_t v : mask.values())
        if (v > 1)
            throw std::domain_error("binary mask entry outside {0,1}");
}

void validate_confidence(const ConfidenceMap& conf) {
    for (float v : conf.values())
        if (!std::isfinite(v))
            throw std::domain_error("confidence map contains non-finite value");
}

const char* to_string(Connectivity c) {
    return c == Connectivity::four ? "4-connected" : "8-connected";
}

BinaryMask binarize_confidence(const ConfidenceMap& conf, double threshold) {
    if (!(threshold >= 0.0) || !std::isfinite(threshold))
        throw std::invalid_argument("binarize threshold must be finite and >= 0");
    BinaryMask out(conf.width(), conf.height());
    auto src = conf.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const float v = src[i];
        if (!std::isfinite(v))
            throw std::domain_error("confidence map contains non-finite value");
        dst[i] = (v >= -threshold && v <= threshold) ? 1 : 0;
    }
    return out;
}

namespace {

// Union-find with path halving.
int uf_find(std::vector<int>& parent, int a) {
    while (parent[a] != a) {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    return a;
}

void uf_union(std::vector<int>& parent, int a, int b) {
    a = uf_find(parent, a);
    b = uf_find(parent, b);
    if (a != b)
        parent[std::max(a, b)] = std::min(a, b);
}

}  // namespace

std::vector<Region> label_connected_components(const BinaryMask& mask,
                                               Connectivity connectivity) {
    validate_binary(mask);
    const int w = mask.width();
    const int h = mask.height();
    std::vector<int> labels(static_cast<std::size_t>(w) * h, 0);
    std::vector<int> parent(1, 0);  // parent[0] unused

    const bool diag = connectivity == Connectivity::eight;

    // First pass: provisional labels, merging with already-visited neighbors
    // (left, up, and the two upper diagonals for 8-connectivity).
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (mask.at(x, y) == 0)
                continue;
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            int neighbor_labels[4];
            int n = 0;
            if (x > 0 && labels[idx - 1] != 0)
                neighbor_labels[n++] = labels[idx - 1];
            if (y > 0) {
                const std::size_t up = idx - w;
                if (labels[up] != 0)
                    neighbor_labels[n++] = labels[up];
                if (diag && x > 0 && labels[up - 1] != 0)
                    neighbor_labels[n++] = labels[up - 1];
                if (diag && x + 1 < w && labels[up + 1] != 0)
                    neighbor_labels[n++] = labels[up + 1];
            }
            if (n == 0) {
                const int fresh = static_cast<int>(parent.size());
                parent.push_back(fresh);
                labels[idx] = fresh;
            } else {
                int m = neighbor_labels[0];
                for (int i = 1; i < n; ++i)
                    m = std::min(m, neighbor_labels[i]);
                labels[idx] = m;
                for (int i = 0; i < n; ++i)
                    uf_union(parent, m, neighbor_labels[i]);
            }
        }
    }

    // Second pass: final ids assigned in first-encounter raster order.
    std::vector<int> root_to_id(parent.size(), 0);
    std::vector<Region> regions;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (labels[idx] == 0)
                continue;
            const int root = uf_find(parent, labels[idx]);
            int id = root_to_id[root];
            if (id == 0) {
                id = static_cast<int>(regions.size()) + 1;
                root_to_id[root] = id;
                regions.push_back(Region{id, {}});
            }
            regions[id - 1].pixels.push_back(PixelCoord{x, y});
        }
    }
    return regions;
}

Bbox bounding_box(const Region& region) {
    if (region.pixels.empty())
        throw std::invalid_argument("bounding_box of empty region");
    Bbox box{region.pixels.front().x, region.pixels.front().y,
             region.pixels.front().x + 1, region.pixels.front().y + 1};
    for (const PixelCoord& p : region.pixels) {
        box.x_min = std::min(box.x_min, p.x);
        box.y_min = std::min(box.y_min, p.y);
        box.x_max = std::max(box.x_max, p.x + 1);
        box.y_max = std::max(box.y_max, p.y + 1);
    }
    return box;
}

namespace {

void require_same_dims(const BinaryMask& a, const BinaryMask& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw std::invalid_argument("mask dimensions mismatch");
}

}  // namespace

IntMask mask_add(const BinaryMask& a, const BinaryMask& b) {
    require_same_dims(a, b);
    validate_binary(a);
    validate_binary(b);
    IntMask out(a.width(), a.height());
    auto va = a.values();
    auto vb = b.values();
    auto vo = out.values();
    for (std::size_t i = 0; i < vo.size(); ++i)
        vo[i] = static_cast<std::int8_t>(va[i] + vb[i]);
    return out;
}

IntMask mask_subtract(const BinaryMask& a, const BinaryMask& b) {
    require_same_dims(a, b);
    validate_binary(a);
    validate_binary(b);
    IntMask out(a.width(), a.height());
    auto va = a.values();
    auto vb = b.values();
    auto vo = out.values();
    for (std::size_t i = 0; i < vo.size(); ++i)
        vo[i] = static_cast<std::int8_t>(va[i] - vb[i]);
    return out;
}

BinaryMask clamp_binary(const IntMask& m) {
    BinaryMask out(m.width(), m.height());
    auto src = m.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const int v = src[i];
        if (v < -1 || v > 2)
            throw std::domain_error("int mask entry outside {-1,0,1,2}");
        dst[i] = static_cast<std::uint8_t>(std::min(std::max(0, v), 1));
    }
    return out;
}

BinaryMask register_mask(const BinaryMask& aux_mask, const GeoTransform& aux_geo,
                         const GeoTransform& target_geo, int target_width,
                         int target_height, const Bbox& restrict_to) {
    validate_binary(aux_mask);
    validate_geotransform(aux_geo);
    validate_geotransform(target_geo);
    require_box_in_bounds(restrict_to, target_width, target_height, "restrict_to box");

    const GeoBox roi = pixel_box_to_geo(target_geo, restrict_to);
    const GeoBox aux_fp = raster_footprint(aux_geo, aux_mask.width(), aux_mask.height());
    if (!roi.intersects(aux_fp))
        throw std::invalid_argument(
            "auxiliary raster has no geographic overlap with the restricted box");

    BinaryMask out(target_width, target_height, 0);
    for (int y = restrict_to.y_min; y < restrict_to.y_max; ++y) {
        const double lat = target_geo.pixel_center_lat(y);
        const double rowf = aux_geo.lat_to_row(lat);
        const int row = static_cast<int>(std::floor(rowf));
        if (row < 0 || row >= aux_mask.height())
            continue;
        for (int x = restrict_to.x_min; x < restrict_to.x_max; ++x) {
            const double lon = target_geo.pixel_center_lon(x);
            const int col = static_cast<int>(std::floor(aux_geo.lon_to_col(lon)));
            if (col < 0 || col >= aux_mask.width())
                continue;
            out.set(x, y, aux_mask.at(col, row));
        }
    }
    return out;
}

}  // namespace farmmind
