#pragma once

#include <cstdint>
#include <vector>

#include "farmmind/raster.hpp"

namespace farmmind {

/// Run-length encoding for binary masks on the wire: alternating run lengths
/// over the row-major flattened mask, starting with background (0). The
/// first run may be 0 when the mask starts with foreground; all later runs
/// are positive. Runs always sum to width*height.
std::vector<std::int64_t> rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(const std::vector<std::int64_t>& runs, int width, int height);

}  // namespace farmmind
