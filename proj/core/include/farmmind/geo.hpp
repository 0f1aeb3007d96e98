#pragma once

#include <cmath>
#include <stdexcept>

namespace farmmind {

/// Affine mapping from pixel (col,row) to geographic (lon,lat), single
/// equirectangular lon/lat CRS. origin_lon/origin_lat is the outer corner of
/// pixel (0,0); pixel_height_deg is negative for north-up rasters.
struct GeoTransform {
    double origin_lon = 0.0;
    double origin_lat = 0.0;
    double px_w_deg = 0.0;
    double px_h_deg = 0.0;

    bool operator==(const GeoTransform&) const = default;

    double pixel_center_lon(int col) const { return origin_lon + (col + 0.5) * px_w_deg; }
    double pixel_center_lat(int row) const { return origin_lat + (row + 0.5) * px_h_deg; }

    /// Continuous pixel coordinate of a geographic point. floor() of the
    /// result is the pixel cell containing it.
    double lon_to_col(double lon) const { return (lon - origin_lon) / px_w_deg; }
    double lat_to_row(double lat) const { return (lat - origin_lat) / px_h_deg; }
};

inline void validate_geotransform(const GeoTransform& gt) {
    if (!(std::isfinite(gt.origin_lon) && std::isfinite(gt.origin_lat) &&
          std::isfinite(gt.px_w_deg) && std::isfinite(gt.px_h_deg)))
        throw std::invalid_argument("geotransform has non-finite fields");
    if (gt.px_w_deg <= 0.0)
        throw std::invalid_argument("geotransform pixel width must be positive");
    if (gt.px_h_deg == 0.0)
        throw std::invalid_argument("geotransform pixel height must be non-zero");
}

/// Axis-aligned lon/lat rectangle, min/max normalized.
struct GeoBox {
    double lon_min = 0.0;
    double lat_min = 0.0;
    double lon_max = 0.0;
    double lat_max = 0.0;

    bool operator==(const GeoBox&) const = default;

    bool valid() const { return lon_min < lon_max && lat_min < lat_max; }
    double width() const { return lon_max - lon_min; }
    double height() const { return lat_max - lat_min; }
    double center_lon() const { return 0.5 * (lon_min + lon_max); }
    double center_lat() const { return 0.5 * (lat_min + lat_max); }

    bool contains(const GeoBox& inner) const {
        return lon_min <= inner.lon_min && inner.lon_max <= lon_max &&
               lat_min <= inner.lat_min && inner.lat_max <= lat_max;
    }
    bool intersects(const GeoBox& other) const {
        return lon_min < other.lon_max && other.lon_min < lon_max &&
               lat_min < other.lat_max && other.lat_min < lat_max;
    }

    /// Rectangle scaled by `factor` about its own center.
    GeoBox scaled_about_center(double factor) const {
        const double hw = 0.5 * width() * factor;
        const double hh = 0.5 * height() * factor;
        const double cl = center_lon();
        const double ct = center_lat();
        return {cl - hw, ct - hh, cl + hw, ct + hh};
    }
};

/// Geographic footprint of a w x h raster under `gt`.
inline GeoBox raster_footprint(const GeoTransform& gt, int width, int height) {
    const double lon_a = gt.origin_lon;
    const double lon_b = gt.origin_lon + width * gt.px_w_deg;
    const double lat_a = gt.origin_lat;
    const double lat_b = gt.origin_lat + height * gt.px_h_deg;
    return {std::min(lon_a, lon_b), std::min(lat_a, lat_b),
            std::max(lon_a, lon_b), std::max(lat_a, lat_b)};
}

}  // namespace farmmind
