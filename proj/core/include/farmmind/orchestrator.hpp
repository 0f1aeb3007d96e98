#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "farmmind/adapters.hpp"
#include "farmmind/ambiguity.hpp"
#include "farmmind/eval.hpp"
#include "farmmind/imagedb.hpp"
#include "farmmind/protocol.hpp"

namespace farmmind {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ablation harness modes: which parsed directives are honored.
enum class CorrectionMode { full, no_query, temporal_only, enlarge_only };

const char* to_string(CorrectionMode mode);
CorrectionMode correction_mode_from_string(const std::string& s);

struct PipelineConfig {
    AmbiguityParams ambiguity;
    double enlarge_scale = 3.0;
    int patch_px = 512;
    CorrectionMode mode = CorrectionMode::full;
    int parallelism = 1;
    BoxStyle annotation;
    RqmParams rqm;
};

void validate_config(const PipelineConfig& config);

/// One georeferenced input patch.
struct Patch {
    PatchMeta meta;
    ImageRgb image;
    GeoTransform geo;
};

/// Reads <image>.json next to the patch image:
/// {"patch_id","season","country","province","geo":{...}}.
Patch load_patch(const std::filesystem::path& image_path);

enum class AppliedOp { add, subtract, skip };

const char* to_string(AppliedOp op);

struct CandidateNote {
    std::string candidate_id;
    Season season = Season::spring;
    GeoBox footprint;
    std::string source_scene_id;
};

/// Wall-clock seconds per pipeline stage, mirroring the cost-table columns:
/// basic perception, reasoning-query (model, database), collaborative
/// segmentation (model, correction).
struct StageTimings {
    double basic_perception_s = 0.0;
    double reasoning_query_mllm_s = 0.0;
    double reasoning_query_db_s = 0.0;
    double collaborative_mllm_s = 0.0;
    double dynamic_correction_s = 0.0;
};

/// Full provenance of one region's trip through the loop.
struct RegionTrace {
    AmbiguityRegion region;

    std::string prompt_i;
    std::optional<QueryDirective> directive;
    std::string directive_raw;
    std::optional<std::string> directive_error;
    bool honored = false;  // directive parsed and allowed by the mode

    std::vector<CandidateNote> candidates;
    std::string prompt_ii;
    std::optional<SelectionResult> selection;
    bool auto_selected = false;  // single candidate, selection call skipped
    std::optional<std::string> selection_error;

    std::string prompt_iii;
    std::optional<Verdict> verdict;
    std::optional<std::string> verdict_error;

    // y_s provenance
    std::string chosen_candidate_id;
    std::string fsm_identity;
    std::optional<Bbox> fsm_box_prompt;
    std::int64_t correction_pixels = 0;  // registered y_s foreground count

    AppliedOp applied = AppliedOp::skip;
    std::string skip_reason;
};

struct CorrectionTrace {
    std::string patch_id;
    CorrectionMode mode = CorrectionMode::full;
    std::vector<RegionTrace> regions;
    StageTimings timings;
};

struct SegmentationResult {
    BinaryMask base_mask;
    ConfidenceMap confidence;
    BinaryMask final_mask;
    CorrectionTrace trace;
};

/// Deterministic trace serialization; timings are deliberately kept out of
/// the trace file (they go to the telemetry file) so repeated runs of the
/// same scripted inputs are byte-identical.
std::string trace_to_json(const CorrectionTrace& trace);
CorrectionTrace trace_from_json(const std::string& text);
std::string telemetry_to_json(const CorrectionTrace& trace);
/// Human-readable rendering for the trace CLI.
std::string render_trace_human(const CorrectionTrace& trace,
                               const std::optional<StageTimings>& timings);
std::optional<StageTimings> telemetry_from_json(const std::string& text);

struct PipelineContext {
    const PipelineConfig& config;
    const PromptLibrary& prompts;
    RqmAdapter& rqm;
    FsmAdapter& fsm;
    const SceneStore& db;
};

/// Runs the full loop on one patch: basic perception, per-region reasoning
/// query, data query, optimal selection, multi-image verdict, conditional
/// mask correction. Adapter and database failures degrade to per-region
/// skips; the patch itself never aborts on them.
SegmentationResult run_patch(const Patch& patch, const PipelineContext& ctx);

/// True when every final-mask pixel outside the applied regions' boxes
/// equals the base mask.
bool locality_holds(const SegmentationResult& result);

struct PatchOutcome {
    std::string patch_id;
    std::string image_file;
    bool ok = false;
    std::string error;
    std::string mask_path;
    std::string trace_path;
    std::string group;
    std::optional<ConfusionCounts> counts;  // set when ground truth was given
    int regions_corrected = 0;
};

struct DatasetReport {
    std::vector<PatchOutcome> patches;
    std::vector<GroupReport> metrics;  // empty without ground truth
    int failed = 0;
};

/// Runs every patch under `patch_dir` (PNG + JSON sidecar pairs, processed
/// in filename order) with a bounded worker pool, writing
/// out/{masks,traces,report}. Per-patch failures are isolated. When
/// `gt_dir` holds same-named mask PNGs, confusion counts and grouped
/// metrics are produced. `config_snapshot_json` is embedded in the run
/// manifest.
DatasetReport run_dataset(const std::filesystem::path& patch_dir,
                          const std::optional<std::filesystem::path>& gt_dir,
                          const std::filesystem::path& out_dir,
                          const PipelineContext& ctx,
                          const std::string& config_snapshot_json = "{}");

}  // namespace farmmind
