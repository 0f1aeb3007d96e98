#include "farmmind/imagedb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "farmmind/raster_io.hpp"
#include "json.hpp"

namespace farmmind {

void validate_spec(const QuerySpec& spec) {
    if (!spec.geo_bbox.valid())
        throw std::invalid_argument("query geo_bbox is degenerate");
    if (spec.kind == QueryKind::enlarge && !(spec.enlarge_scale > 1.0))
        throw std::invalid_argument("enlarge_scale must be > 1");
    if (spec.requested_patch_px <= 0)
        throw std::invalid_argument("requested_patch_px must be positive");
}

GeoBox required_footprint(const QuerySpec& spec) {
    if (spec.kind == QueryKind::enlarge)
        return spec.geo_bbox.scaled_about_center(spec.enlarge_scale);
    return spec.geo_bbox;
}

namespace {

nlohmann::json geo_to_json(const GeoTransform& gt) {
    return {{"origin_lon", gt.origin_lon},
            {"origin_lat", gt.origin_lat},
            {"px_w_deg", gt.px_w_deg},
            {"px_h_deg", gt.px_h_deg}};
}

GeoTransform geo_from_json(const nlohmann::json& j) {
    return GeoTransform{j.at("origin_lon").get<double>(), j.at("origin_lat").get<double>(),
                        j.at("px_w_deg").get<double>(), j.at("px_h_deg").get<double>()};
}

}  // namespace

std::string scene_record_to_json(const SceneRecord& r) {
    nlohmann::json types = nlohmann::json::array();
    if (r.data_types.multi_temporal)
        types.push_back("multi-temporal");
    if (r.data_types.enlarge_capable)
        types.push_back("enlarge");
    nlohmann::json j = {{"scene_id", r.scene_id},
                        {"data_types", types},
                        {"country", r.country},
                        {"province", r.province},
                        {"season", to_string(r.season)},
                        {"acquisition_tag", r.acquisition_tag},
                        {"geo", geo_to_json(r.geo)},
                        {"width", r.width},
                        {"height", r.height},
                        {"storage_path", r.storage_path}};
    return j.dump();
}

SceneRecord scene_record_from_json(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    SceneRecord r;
    r.scene_id = j.at("scene_id").get<std::string>();
    for (const auto& t : j.at("data_types")) {
        const std::string s = t.get<std::string>();
        if (s == "multi-temporal")
            r.data_types.multi_temporal = true;
        else if (s == "enlarge")
            r.data_types.enlarge_capable = true;
        else
            throw CatalogError("unknown data type in catalog: " + s);
    }
    r.country = j.at("country").get<std::string>();
    r.province = j.at("province").get<std::string>();
    r.season = season_from_string(j.at("season").get<std::string>());
    r.acquisition_tag = j.at("acquisition_tag").get<std::string>();
    r.geo = geo_from_json(j.at("geo"));
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.storage_path = j.at("storage_path").get<std::string>();
    return r;
}

SceneStore::SceneStore(std::filesystem::path catalog_dir)
    : catalog_dir_(std::move(catalog_dir)), catalog_file_(catalog_dir_ / "catalog.jsonl") {
    std::filesystem::create_directories(catalog_dir_);
    if (!std::filesystem::exists(catalog_file_))
        return;
    std::ifstream in(catalog_file_);
    if (!in)
        throw CatalogError("cannot open catalog: " + catalog_file_.string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        SceneRecord record = scene_record_from_json(line);
        if (by_id_.contains(record.scene_id))
            throw CatalogError("duplicate scene_id in catalog: " + record.scene_id);
        validate_geotransform(record.geo);
        by_id_[record.scene_id] = records_.size();
        records_.push_back(std::move(record));
        index_scene(records_.size() - 1);
    }
}

void SceneStore::index_scene(std::size_t record_index) {
    const SceneRecord& r = records_[record_index];
    const GeoBox fp = r.footprint();
    auto add = [&](BucketTree& tree) {
        ProvinceBucket& bucket = tree[r.province];
        bucket.scene_indices.push_back(record_index);
        if (bucket.empty) {
            bucket.envelope = fp;
            bucket.empty = false;
        } else {
            bucket.envelope.lon_min = std::min(bucket.envelope.lon_min, fp.lon_min);
            bucket.envelope.lat_min = std::min(bucket.envelope.lat_min, fp.lat_min);
            bucket.envelope.lon_max = std::max(bucket.envelope.lon_max, fp.lon_max);
            bucket.envelope.lat_max = std::max(bucket.envelope.lat_max, fp.lat_max);
        }
    };
    if (r.data_types.multi_temporal)
        add(index_[0]);
    if (r.data_types.enlarge_capable)
        add(index_[1]);
}

std::string SceneStore::ingest_scene(const std::filesystem::path& image_path,
                                     const SceneMetadata& metadata) {
    if (metadata.scene_id.empty())
        throw CatalogError("scene_id must be non-empty");
    if (metadata.province.empty() || metadata.country.empty())
        throw CatalogError("admin region (country, province) must be non-empty");
    if (!metadata.data_types.multi_temporal && !metadata.data_types.enlarge_capable)
        throw CatalogError("scene must declare at least one data type");
    if (!std::filesystem::exists(image_path))
        throw CatalogError("scene image not readable: " + image_path.string());

    std::filesystem::path sidecar = image_path;
    sidecar.replace_extension(".geo.json");
    if (!std::filesystem::exists(sidecar))
        throw CatalogError("missing geo sidecar: " + sidecar.string());
    const GeoTransform geo = read_geotransform(sidecar);

    const ImageRgb pixels = read_png(image_path);

    SceneRecord record;
    record.scene_id = metadata.scene_id;
    record.data_types = metadata.data_types;
    record.country = metadata.country;
    record.province = metadata.province;
    record.season = metadata.season;
    record.acquisition_tag = metadata.acquisition_tag;
    record.geo = geo;
    record.width = pixels.width();
    record.height = pixels.height();
    record.storage_path = std::filesystem::absolute(image_path).lexically_normal().string();

    std::unique_lock lock(mutex_);
    if (auto it = by_id_.find(record.scene_id); it != by_id_.end()) {
        if (records_[it->second] == record)
            return record.scene_id;  // idempotent re-ingest
        throw CatalogError("scene_id already ingested with conflicting metadata: " +
                           record.scene_id);
    }

    std::ofstream out(catalog_file_, std::ios::app);
    if (!out)
        throw CatalogError("cannot append to catalog: " + catalog_file_.string());
    out << scene_record_to_json(record) << "\n";
    out.flush();
    if (!out)
        throw CatalogError("catalog write failed: " + catalog_file_.string());

    by_id_[record.scene_id] = records_.size();
    records_.push_back(record);
    index_scene(records_.size() - 1);
    return record.scene_id;
}

std::vector<std::size_t> SceneStore::qualifying_scenes(const QuerySpec& spec,
                                                       const GeoBox& needed) const {
    // Level 1: data type. Level 2: province buckets, pruned by envelope.
    // Level 3: per-scene coordinate containment.
    const BucketTree& tree = index_[spec.kind == QueryKind::temporal ? 0 : 1];
    std::vector<std::size_t> result;
    for (const auto& [province, bucket] : tree) {
        if (bucket.empty || !bucket.envelope.contains(needed))
            continue;
        for (std::size_t idx : bucket.scene_indices) {
            const SceneRecord& r = records_[idx];
            if (spec.exclude_season && r.season == *spec.exclude_season)
                continue;
            if (r.footprint().contains(needed))
                result.push_back(idx);
        }
    }
    return result;
}

std::vector<CandidateImage> SceneStore::query(const QuerySpec& spec) const {
    validate_spec(spec);
    const GeoBox needed = required_footprint(spec);

    std::shared_lock lock(mutex_);
    std::vector<std::size_t> hits = qualifying_scenes(spec, needed);

    if (spec.kind == QueryKind::temporal) {
        // One candidate per distinct season: most recent acquisition_tag,
        // scene_id as the deterministic tiebreaker.
        std::map<Season, std::size_t> best;
        for (std::size_t idx : hits) {
            const SceneRecord& r = records_[idx];
            auto it = best.find(r.season);
            if (it == best.end()) {
                best[r.season] = idx;
                continue;
            }
            const SceneRecord& cur = records_[it->second];
            if (std::tie(r.acquisition_tag, cur.scene_id) >
                std::tie(cur.acquisition_tag, r.scene_id))
                it->second = idx;
        }
        hits.clear();
        for (const auto& [season, idx] : best)
            hits.push_back(idx);
    }

    std::sort(hits.begin(), hits.end(), [&](std::size_t a, std::size_t b) {
        const SceneRecord& ra = records_[a];
        const SceneRecord& rb = records_[b];
        if (ra.season != rb.season)
            return static_cast<int>(ra.season) < static_cast<int>(rb.season);
        return ra.scene_id < rb.scene_id;
    });

    std::vector<CandidateImage> out;
    out.reserve(hits.size());
    for (std::size_t idx : hits)
        out.push_back(crop_by_geo(records_[idx], needed, spec.requested_patch_px));
    return out;
}

ImageRgb SceneStore::load_scene_pixels(const SceneRecord& scene) const {
    {
        std::lock_guard lock(cache_mutex_);
        auto it = pixel_cache_.find(scene.storage_path);
        if (it != pixel_cache_.end())
            return *it->second;
    }
    ImageRgb pixels = read_png(resolve_storage(scene.storage_path));
    if (pixels.width() != scene.width || pixels.height() != scene.height)
        throw CatalogError("scene file dims changed since ingest: " + scene.scene_id);
    auto shared = std::make_shared<const ImageRgb>(std::move(pixels));
    std::lock_guard lock(cache_mutex_);
    pixel_cache_[scene.storage_path] = shared;
    return *shared;
}

std::filesystem::path SceneStore::resolve_storage(const std::string& storage_path) const {
    std::filesystem::path p(storage_path);
    if (p.is_absolute())
        return p;
    return catalog_dir_ / p;
}

CandidateImage SceneStore::crop_by_geo(const SceneRecord& scene, const GeoBox& geo_bbox,
                                       int out_px) const {
    if (!geo_bbox.valid())
        throw std::invalid_argument("crop geo box is degenerate");
    if (out_px <= 0)
        throw std::invalid_argument("crop output size must be positive");
    if (!scene.footprint().contains(geo_bbox))
        throw std::invalid_argument("crop box exceeds scene footprint: " + scene.scene_id);

    const ImageRgb scene_px = load_scene_pixels(scene);

    GeoTransform out_geo;
    out_geo.origin_lon = geo_bbox.lon_min;
    out_geo.origin_lat = geo_bbox.lat_max;  // north-up output
    out_geo.px_w_deg = geo_bbox.width() / out_px;
    out_geo.px_h_deg = -geo_bbox.height() / out_px;

    ImageRgb out(out_px, out_px);
    for (int y = 0; y < out_px; ++y) {
        const double lat = out_geo.pixel_center_lat(y);
        int row = static_cast<int>(std::floor(scene.geo.lat_to_row(lat)));
        row = std::clamp(row, 0, scene.height - 1);
        for (int x = 0; x < out_px; ++x) {
            const double lon = out_geo.pixel_center_lon(x);
            int col = static_cast<int>(std::floor(scene.geo.lon_to_col(lon)));
            col = std::clamp(col, 0, scene.width - 1);
            const std::uint8_t* p = scene_px.pixel(col, row);
            out.set_pixel(x, y, p[0], p[1], p[2]);
        }
    }

    CandidateImage candidate;
    candidate.candidate_id = scene.scene_id;
    candidate.pixels = std::move(out);
    candidate.geo = out_geo;
    candidate.season = scene.season;
    candidate.source_scene_id = scene.scene_id;
    return candidate;
}

std::vector<SceneRecord> SceneStore::records() const {
    std::shared_lock lock(mutex_);
    return records_;
}

std::size_t SceneStore::size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
}

std::map<std::string, std::size_t> SceneStore::index_bucket_counts(QueryKind kind) const {
    std::shared_lock lock(mutex_);
    const BucketTree& tree = index_[kind == QueryKind::temporal ? 0 : 1];
    std::map<std::string, std::size_t> out;
    for (const auto& [province, bucket] : tree)
        out[province] = bucket.scene_indices.size();
    return out;
}

}  // namespace farmmind
