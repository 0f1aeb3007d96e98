#pragma once

// Synthetic desk-scale fixtures shared by the unit, integration and
// acceptance suites: a 12-scene world (3 provinces x 4 seasons), patches
// placed at province centers, and mock-script builders. All geographic
// values are dyadic fractions so coordinate math is exact.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "farmmind/imagedb.hpp"
#include "farmmind/orchestrator.hpp"
#include "farmmind/raster_io.hpp"
#include "json.hpp"

namespace farmmind::testing {

class TempDir {
public:
    explicit TempDir(const std::string& hint = "farmmind-test") {
        static std::atomic<int> counter{0};
        const int n = counter.fetch_add(1);
        path_ = std::filesystem::temp_directory_path() /
                (hint + "-" + std::to_string(::getpid()) + "-" + std::to_string(n));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline const std::vector<std::string>& world_provinces() {
    static const std::vector<std::string> provinces = {"anhui", "hebei", "yunnan"};
    return provinces;
}

inline int province_index(const std::string& province) {
    const auto& all = world_provinces();
    for (std::size_t i = 0; i < all.size(); ++i)
        if (all[i] == province)
            return static_cast<int>(i);
    throw std::invalid_argument("unknown fixture province: " + province);
}

constexpr int kSceneSize = 128;
constexpr double kScenePx = 1.0 / 128.0;  // 1 degree per scene, dyadic

/// Province k occupies lon [10+2k, 11+2k), lat [49, 50).
inline GeoTransform scene_geo(const std::string& province) {
    const int k = province_index(province);
    return GeoTransform{10.0 + 2.0 * k, 50.0, kScenePx, -kScenePx};
}

/// Deterministic scene pixel colors; also the reference for ramp oracles.
inline void scene_color(int scene_idx, int col, int row, std::uint8_t rgb[3]) {
    rgb[0] = static_cast<std::uint8_t>((col * 2) & 0xff);
    rgb[1] = static_cast<std::uint8_t>((row * 2) & 0xff);
    rgb[2] = static_cast<std::uint8_t>((scene_idx * 17) & 0xff);
}

inline ImageRgb make_scene_image(int scene_idx) {
    ImageRgb img(kSceneSize, kSceneSize);
    for (int y = 0; y < kSceneSize; ++y)
        for (int x = 0; x < kSceneSize; ++x) {
            std::uint8_t rgb[3];
            scene_color(scene_idx, x, y, rgb);
            img.set_pixel(x, y, rgb[0], rgb[1], rgb[2]);
        }
    return img;
}

inline const std::vector<Season>& all_seasons() {
    static const std::vector<Season> seasons = {Season::spring, Season::summer,
                                                Season::autumn, Season::winter};
    return seasons;
}

/// Writes the 12 scene PNGs (+ geo sidecars) and ingests them into a fresh
/// catalog under dir/catalog; scene files live under dir/scenes.
inline void build_test_world(const std::filesystem::path& dir) {
    const auto scene_dir = dir / "scenes";
    std::filesystem::create_directories(scene_dir);
    SceneStore store(dir / "catalog");
    int scene_idx = 0;
    for (const std::string& province : world_provinces()) {
        for (Season season : all_seasons()) {
            const std::string scene_id = province + "-" + to_string(season);
            const auto png = scene_dir / (scene_id + ".png");
            write_png(png, make_scene_image(scene_idx));
            auto sidecar = png;
            sidecar.replace_extension(".geo.json");
            write_geotransform(sidecar, scene_geo(province));
            SceneMetadata meta;
            meta.scene_id = scene_id;
            meta.data_types = {true, true};
            meta.country = "china";
            meta.province = province;
            meta.season = season;
            meta.acquisition_tag = "2024-" + std::to_string(static_cast<int>(season) + 1);
            store.ingest_scene(png, meta);
            ++scene_idx;
        }
    }
}

constexpr int kPatchSize = 64;
constexpr double kPatchPx = 1.0 / 1024.0;

/// A 64x64 patch centered in its province window.
inline GeoTransform patch_geo(const std::string& province) {
    const int k = province_index(province);
    const double lon0 = 10.0 + 2.0 * k + 0.5 - (kPatchSize / 2.0) * kPatchPx;
    const double lat0 = 49.5 + (kPatchSize / 2.0) * kPatchPx;
    return GeoTransform{lon0, lat0, kPatchPx, -kPatchPx};
}

inline Patch make_test_patch(const std::string& patch_id, Season season,
                             const std::string& province) {
    Patch patch;
    patch.meta.patch_id = patch_id;
    patch.meta.season = season;
    patch.meta.country = "china";
    patch.meta.province = province;
    patch.geo = patch_geo(province);
    patch.image = ImageRgb(kPatchSize, kPatchSize, 96, 112, 80);
    return patch;
}

inline void write_patch_files(const std::filesystem::path& dir, const Patch& patch) {
    std::filesystem::create_directories(dir);
    const auto png = dir / (patch.meta.patch_id + ".png");
    write_png(png, patch.image);
    nlohmann::json sidecar = {{"patch_id", patch.meta.patch_id},
                              {"season", to_string(patch.meta.season)},
                              {"country", patch.meta.country},
                              {"province", patch.meta.province},
                              {"geo",
                               {{"origin_lon", patch.geo.origin_lon},
                                {"origin_lat", patch.geo.origin_lat},
                                {"px_w_deg", patch.geo.px_w_deg},
                                {"px_h_deg", patch.geo.px_h_deg}}}};
    write_file_text(dir / (patch.meta.patch_id + ".json"), sidecar.dump());
}

constexpr int kWorkflowPatchSize = 512;

/// A paper-scale 512x512 patch centered in its province window, with a
/// deterministic parcel-like checker texture.
inline Patch make_workflow_patch(const std::string& patch_id, Season season,
                             const std::string& province) {
    Patch patch;
    patch.meta.patch_id = patch_id;
    patch.meta.season = season;
    patch.meta.country = "china";
    patch.meta.province = province;
    const int k = province_index(province);
    patch.geo = GeoTransform{10.0 + 2.0 * k + 0.25, 49.75, kPatchPx, -kPatchPx};
    ImageRgb img(kWorkflowPatchSize, kWorkflowPatchSize);
    for (int y = 0; y < kWorkflowPatchSize; ++y)
        for (int x = 0; x < kWorkflowPatchSize; ++x) {
            const bool parcel = ((x / 48) + (y / 48)) % 2 == 0;
            const std::uint8_t r = parcel ? 88 : 132;
            const std::uint8_t g = parcel ? 130 : 118;
            const std::uint8_t b = parcel ? 70 : 96;
            img.set_pixel(x, y, r, g, b);
        }
    patch.image = std::move(img);
    return patch;
}

/// World + the two workflow patches used by the golden end-to-end runs.
inline void build_workflow_fixture(const std::filesystem::path& dir) {
    build_test_world(dir);
    write_patch_files(dir / "patches",
                      make_workflow_patch("wf-enlarge", Season::summer, "anhui"));
    write_patch_files(dir / "patches",
                      make_workflow_patch("wf-temporal", Season::summer, "hebei"));
}

}  // namespace farmmind::testing
