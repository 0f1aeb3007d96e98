#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "farmmind/image.hpp"
#include "farmmind/raster.hpp"

namespace farmmind {

/// PNG codecs. Binary masks are single-band 8-bit grayscale with
/// foreground=255 / background=0; anything else in a mask file is rejected.

std::vector<std::uint8_t> encode_png(const ImageRgb& image);
std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask);

ImageRgb decode_png(std::span<const std::uint8_t> bytes);
BinaryMask decode_mask_png(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const ImageRgb& image);
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);
ImageRgb read_png(const std::filesystem::path& path);
BinaryMask read_mask_png(const std::filesystem::path& path);

/// Confidence maps live as flat little-endian f32 binary files, row-major,
/// next to a JSON sidecar {"width":W,"height":H,"dtype":"f32le"} at
/// <path>.json.
void write_confidence(const std::filesystem::path& path, const ConfidenceMap& conf);
ConfidenceMap read_confidence(const std::filesystem::path& path);

/// GeoTransform JSON sidecar {"origin_lon","origin_lat","px_w_deg","px_h_deg"}.
void write_geotransform(const std::filesystem::path& path, const GeoTransform& gt);
GeoTransform read_geotransform(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);
std::string read_file_text(const std::filesystem::path& path);
void write_file_text(const std::filesystem::path& path, const std::string& text);

}  // namespace farmmind
