#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "farmmind/geo.hpp"
#include "farmmind/image.hpp"
#include "farmmind/kinds.hpp"
#include "farmmind/season.hpp"

namespace farmmind {

class CatalogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DataTypeFlags {
    bool multi_temporal = false;
    bool enlarge_capable = false;

    bool operator==(const DataTypeFlags&) const = default;
};

/// One georeferenced wide-swath scene in the store.
struct SceneRecord {
    std::string scene_id;
    DataTypeFlags data_types;
    std::string country;
    std::string province;
    Season season = Season::spring;
    std::string acquisition_tag;
    GeoTransform geo;
    int width = 0;
    int height = 0;
    std::string storage_path;

    bool operator==(const SceneRecord&) const = default;

    GeoBox footprint() const { return raster_footprint(geo, width, height); }
};

/// Ingest-side metadata; geotransform and dimensions come from the image
/// file and its geo sidecar.
struct SceneMetadata {
    std::string scene_id;
    DataTypeFlags data_types;
    std::string country;
    std::string province;
    Season season = Season::spring;
    std::string acquisition_tag;
};

struct QuerySpec {
    QueryKind kind = QueryKind::temporal;
    GeoBox geo_bbox;
    std::optional<Season> exclude_season;
    double enlarge_scale = 3.0;  // used by enlarge queries only; must be > 1
    int requested_patch_px = 512;
};

void validate_spec(const QuerySpec& spec);

/// The geographic footprint a scene must contain to serve `spec`: the query
/// bbox itself for temporal queries, the bbox scaled about its center for
/// enlarge queries.
GeoBox required_footprint(const QuerySpec& spec);

struct CandidateImage {
    std::string candidate_id;
    ImageRgb pixels;
    GeoTransform geo;
    Season season = Season::spring;
    std::string source_scene_id;
};

std::string scene_record_to_json(const SceneRecord& record);
SceneRecord scene_record_from_json(const std::string& line);

/// The scene store: an append-only JSON-lines catalog plus an in-memory
/// two-level hierarchical index (data type, then province) rebuilt at load.
/// Reads are freely concurrent; ingestion takes the exclusive writer role.
class SceneStore {
public:
    /// Opens (or creates) a store rooted at `catalog_dir`; reads
    /// catalog.jsonl when present and rebuilds the index.
    explicit SceneStore(std::filesystem::path catalog_dir);

    /// Registers a scene image with its metadata. The geo sidecar
    /// `<image>.geo.json` must exist. Re-ingesting an identical
    /// (path, metadata) pair is a no-op; a conflicting record for the same
    /// scene_id is an error. Returns the scene_id.
    std::string ingest_scene(const std::filesystem::path& image_path,
                             const SceneMetadata& metadata);

    /// Resolution order: data type -> province -> coordinate containment.
    /// Temporal queries yield one candidate per distinct season covering the
    /// bbox (most recent acquisition_tag within a season); enlarge queries
    /// yield one candidate per qualifying scene, cropped to the scaled
    /// footprint. An empty result is a normal outcome. Ordering is
    /// deterministic by (season order, scene_id).
    std::vector<CandidateImage> query(const QuerySpec& spec) const;

    /// Nearest-neighbor crop of a scene over a lon/lat box onto an
    /// out_px x out_px grid, with the derived geotransform attached.
    CandidateImage crop_by_geo(const SceneRecord& scene, const GeoBox& geo_bbox,
                               int out_px) const;

    std::vector<SceneRecord> records() const;
    std::size_t size() const;

    /// Province-level bucket sizes of the hierarchical index for one data
    /// type; test/introspection surface.
    std::map<std::string, std::size_t> index_bucket_counts(QueryKind kind) const;

    const std::filesystem::path& catalog_dir() const { return catalog_dir_; }

private:
    struct ProvinceBucket {
        std::vector<std::size_t> scene_indices;
        GeoBox envelope;  // union of member footprints
        bool empty = true;
    };
    // index_[0]: multi-temporal bucket tree; index_[1]: enlarge bucket tree.
    using BucketTree = std::map<std::string, ProvinceBucket>;

    void index_scene(std::size_t record_index);
    std::vector<std::size_t> qualifying_scenes(const QuerySpec& spec,
                                               const GeoBox& needed) const;
    ImageRgb load_scene_pixels(const SceneRecord& scene) const;
    std::filesystem::path resolve_storage(const std::string& storage_path) const;

    std::filesystem::path catalog_dir_;
    std::filesystem::path catalog_file_;
    std::vector<SceneRecord> records_;
    std::unordered_map<std::string, std::size_t> by_id_;
    BucketTree index_[2];

    mutable std::shared_mutex mutex_;
    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<std::string, std::shared_ptr<const ImageRgb>> pixel_cache_;
};

}  // namespace farmmind
