#include "farmmind/rle.hpp"

namespace farmmind {

std::vector<std::int64_t> rle_encode(const BinaryMask& mask) {
    validate_binary(mask);
    std::vector<std::int64_t> runs;
    std::uint8_t current = 0;
    std::int64_t run = 0;
    for (std::uint8_t v : mask.values()) {
        if (v == current) {
            ++run;
        } else {
            runs.push_back(run);
            current = v;
            run = 1;
        }
    }
    runs.push_back(run);
    return runs;
}

BinaryMask rle_decode(const std::vector<std::int64_t>& runs, int width, int height) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("rle_decode dimensions must be positive");
    const std::int64_t total = static_cast<std::int64_t>(width) * height;
    std::vector<std::uint8_t> values;
    values.reserve(static_cast<std::size_t>(total));
    std::uint8_t current = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const std::int64_t run = runs[i];
        if (run < 0)
            throw std::invalid_argument("rle run length must be non-negative");
        if (run == 0 && i != 0)
            throw std::invalid_argument("rle zero run only allowed in first position");
        values.insert(values.end(), static_cast<std::size_t>(run), current);
        current = current ? 0 : 1;
    }
    if (static_cast<std::int64_t>(values.size()) != total)
        throw std::invalid_argument("rle runs do not sum to width*height");
    return BinaryMask(width, height, std::move(values));
}

}  // namespace farmmind
