#include "farmmind/raster_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace farmmind {

namespace {

struct PngWriteSink {
    std::vector<std::uint8_t> bytes;
};

void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* sink = static_cast<PngWriteSink*>(png_get_io_ptr(png));
    sink->bytes.insert(sink->bytes.end(), data, data + len);
}

void png_flush_cb(png_structp) {}

struct PngReadSource {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t len) {
    auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
    if (src->pos + len > src->size)
        png_error(png, "png stream truncated");
    std::memcpy(out, src->data + src->pos, len);
    src->pos += len;
}

// libpng reports errors through longjmp; the message is captured here so the
// caller can rethrow it as a normal exception after cleanup.
struct PngErrorState {
    char message[256] = "png error";
};

void png_error_cb(png_structp png, png_const_charp msg) {
    auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
    std::snprintf(state->message, sizeof(state->message), "png: %s", msg);
    png_longjmp(png, 1);
}

void png_warning_cb(png_structp, png_const_charp) {}

std::vector<std::uint8_t> encode_rows(int width, int height, int color_type,
                                      const std::uint8_t* data, std::size_t stride) {
    PngErrorState err;
    PngWriteSink sink;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err,
                                              png_error_cb, png_warning_cb);
    if (!png)
        throw std::runtime_error("png: failed to create write struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png: failed to create info struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error(err.message);
    }
    png_set_write_fn(png, &sink, png_write_cb, png_flush_cb);
    png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y)
        png_write_row(png, const_cast<png_bytep>(data + y * stride));
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
    return std::move(sink.bytes);
}

struct DecodedPng {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;  // interleaved, 8-bit
};

DecodedPng decode_raw(std::span<const std::uint8_t> bytes, bool want_rgb) {
    PngErrorState err;
    DecodedPng out;
    PngReadSource src{bytes.data(), bytes.size(), 0};
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                             png_error_cb, png_warning_cb);
    if (!png)
        throw std::runtime_error("png: failed to create read struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png: failed to create info struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error(err.message);
    }
    png_set_read_fn(png, &src, png_read_cb);
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_packing(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    png_set_strip_alpha(png);
    if (want_rgb)
        png_set_gray_to_rgb(png);
    else if (png_get_color_type(png, info) & PNG_COLOR_MASK_COLOR)
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = static_cast<int>(png_get_channels(png, info));
    const std::size_t stride = png_get_rowbytes(png, info);
    out.data.resize(stride * out.height);
    for (int y = 0; y < out.height; ++y)
        png_read_row(png, out.data.data() + y * stride, nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageRgb& image) {
    return encode_rows(image.width(), image.height(), PNG_COLOR_TYPE_RGB,
                       image.data().data(), static_cast<std::size_t>(image.width()) * 3);
}

std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask) {
    validate_binary(mask);
    std::vector<std::uint8_t> gray(mask.size());
    auto src = mask.values();
    for (std::size_t i = 0; i < src.size(); ++i)
        gray[i] = src[i] ? 255 : 0;
    return encode_rows(mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, gray.data(),
                       static_cast<std::size_t>(mask.width()));
}

ImageRgb decode_png(std::span<const std::uint8_t> bytes) {
    DecodedPng raw = decode_raw(bytes, true);
    if (raw.channels != 3)
        throw std::runtime_error("png: expected 3-channel decode");
    return ImageRgb(raw.width, raw.height, std::move(raw.data));
}

BinaryMask decode_mask_png(std::span<const std::uint8_t> bytes) {
    DecodedPng raw = decode_raw(bytes, false);
    if (raw.channels != 1)
        throw std::runtime_error("png: expected single-band decode for mask");
    std::vector<std::uint8_t> vals(raw.data.size());
    for (std::size_t i = 0; i < raw.data.size(); ++i) {
        if (raw.data[i] == 0)
            vals[i] = 0;
        else if (raw.data[i] == 255)
            vals[i] = 1;
        else
            throw std::runtime_error("mask png has pixel value other than 0/255");
    }
    return BinaryMask(raw.width, raw.height, std::move(vals));
}

void write_png(const std::filesystem::path& path, const ImageRgb& image) {
    auto bytes = encode_png(image);
    write_file_bytes(path, bytes);
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
    auto bytes = encode_mask_png(mask);
    write_file_bytes(path, bytes);
}

ImageRgb read_png(const std::filesystem::path& path) {
    return decode_png(read_file_bytes(path));
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
    return decode_mask_png(read_file_bytes(path));
}

void write_confidence(const std::filesystem::path& path, const ConfidenceMap& conf) {
    validate_confidence(conf);
    static_assert(sizeof(float) == 4);
    std::vector<std::uint8_t> bytes(conf.size() * 4);
    auto vals = conf.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        std::uint32_t u;
        std::memcpy(&u, &vals[i], 4);
        bytes[4 * i] = static_cast<std::uint8_t>(u & 0xff);
        bytes[4 * i + 1] = static_cast<std::uint8_t>((u >> 8) & 0xff);
        bytes[4 * i + 2] = static_cast<std::uint8_t>((u >> 16) & 0xff);
        bytes[4 * i + 3] = static_cast<std::uint8_t>((u >> 24) & 0xff);
    }
    write_file_bytes(path, bytes);
    nlohmann::json sidecar = {
        {"width", conf.width()}, {"height", conf.height()}, {"dtype", "f32le"}};
    write_file_text(std::filesystem::path(path.string() + ".json"), sidecar.dump());
}

ConfidenceMap read_confidence(const std::filesystem::path& path) {
    const auto sidecar_path = std::filesystem::path(path.string() + ".json");
    nlohmann::json sidecar = nlohmann::json::parse(read_file_text(sidecar_path));
    if (sidecar.value("dtype", "") != "f32le")
        throw std::runtime_error("confidence sidecar dtype must be f32le");
    const int w = sidecar.at("width").get<int>();
    const int h = sidecar.at("height").get<int>();
    auto bytes = read_file_bytes(path);
    if (bytes.size() != static_cast<std::size_t>(w) * h * 4)
        throw std::runtime_error("confidence file size does not match sidecar dims");
    std::vector<float> vals(static_cast<std::size_t>(w) * h);
    for (std::size_t i = 0; i < vals.size(); ++i) {
        std::uint32_t u = static_cast<std::uint32_t>(bytes[4 * i]) |
                          (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                          (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                          (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
        std::memcpy(&vals[i], &u, 4);
    }
    ConfidenceMap conf(w, h, std::move(vals));
    validate_confidence(conf);
    return conf;
}

void write_geotransform(const std::filesystem::path& path, const GeoTransform& gt) {
    validate_geotransform(gt);
    nlohmann::json j = {{"origin_lon", gt.origin_lon},
                        {"origin_lat", gt.origin_lat},
                        {"px_w_deg", gt.px_w_deg},
                        {"px_h_deg", gt.px_h_deg}};
    write_file_text(path, j.dump());
}

GeoTransform read_geotransform(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_file_text(path));
    GeoTransform gt{j.at("origin_lon").get<double>(), j.at("origin_lat").get<double>(),
                    j.at("px_w_deg").get<double>(), j.at("px_h_deg").get<double>()};
    validate_geotransform(gt);
    return gt;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw std::runtime_error("short write: " + path.string());
}

std::string read_file_text(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_file_text(const std::filesystem::path& path, const std::string& text) {
    std::span<const std::uint8_t> bytes(
        reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
    write_file_bytes(path, bytes);
}

}  // namespace farmmind
