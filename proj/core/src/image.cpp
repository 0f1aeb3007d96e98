#include "farmmind/image.hpp"

namespace farmmind {

ImageRgb crop(const ImageRgb& image, const Bbox& box) {
    require_box_in_bounds(box, image.width(), image.height(), "crop box");
    ImageRgb out(box.width(), box.height());
    for (int y = box.y_min; y < box.y_max; ++y) {
        for (int x = box.x_min; x < box.x_max; ++x) {
            const std::uint8_t* p = image.pixel(x, y);
            out.set_pixel(x - box.x_min, y - box.y_min, p[0], p[1], p[2]);
        }
    }
    return out;
}

}  // namespace farmmind
