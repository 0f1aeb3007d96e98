#include "farmmind/orchestrator.hpp"

#include <chrono>
#include <cmath>

#include "farmmind/raster_io.hpp"
#include "json.hpp"

namespace farmmind {

const char* to_string(CorrectionMode mode) {
    switch (mode) {
        case CorrectionMode::full: return "full";
        case CorrectionMode::no_query: return "no-query";
        case CorrectionMode::temporal_only: return "temporal-only";
        case CorrectionMode::enlarge_only: return "enlarge-only";
    }
    return "full";
}

CorrectionMode correction_mode_from_string(const std::string& s) {
    if (s == "full") return CorrectionMode::full;
    if (s == "no-query") return CorrectionMode::no_query;
    if (s == "temporal-only") return CorrectionMode::temporal_only;
    if (s == "enlarge-only") return CorrectionMode::enlarge_only;
    throw ConfigError("unknown correction mode: " + s);
}

const char* to_string(AppliedOp op) {
    switch (op) {
        case AppliedOp::add: return "add";
        case AppliedOp::subtract: return "subtract";
        case AppliedOp::skip: return "skip";
    }
    return "skip";
}

void validate_config(const PipelineConfig& config) {
    validate_params(config.ambiguity);
    if (!(config.enlarge_scale > 1.0))
        throw ConfigError("enlarge_scale must be > 1");
    if (config.patch_px <= 0)
        throw ConfigError("patch_px must be positive");
    if (config.parallelism < 1)
        throw ConfigError("parallelism must be >= 1");
    if (config.annotation.stroke_px < 0)
        throw ConfigError("annotation stroke must be >= 0");
}

Patch load_patch(const std::filesystem::path& image_path) {
    std::filesystem::path sidecar = image_path;
    sidecar.replace_extension(".json");
    if (!std::filesystem::exists(sidecar))
        throw std::runtime_error("missing patch sidecar: " + sidecar.string());
    nlohmann::json j = nlohmann::json::parse(read_file_text(sidecar));
    Patch patch;
    patch.meta.patch_id = j.at("patch_id").get<std::string>();
    patch.meta.season = season_from_string(j.at("season").get<std::string>());
    patch.meta.country = j.value("country", "");
    patch.meta.province = j.value("province", "");
    const auto& g = j.at("geo");
    patch.geo = GeoTransform{g.at("origin_lon").get<double>(),
                             g.at("origin_lat").get<double>(),
                             g.at("px_w_deg").get<double>(),
                             g.at("px_h_deg").get<double>()};
    validate_geotransform(patch.geo);
    patch.image = read_png(image_path);
    return patch;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string describe_parse_error(const ParseError& e) {
    return std::string(to_string(e.code())) + ": " + e.what();
}

/// Calls the reasoning model and parses the reply; on a ParseError the call
/// is repeated once with a format reminder appended, then the last error
/// wins. Adapter errors propagate to the caller.
template <typename Parse>
auto complete_and_parse(const PipelineContext& ctx, const std::vector<ImageRgb>& images,
                        const std::string& prompt, const CallMeta& meta,
                        const std::string& reminder_hint, std::string& raw_out,
                        Parse parse) {
    try {
        raw_out = ctx.rqm.complete(images, prompt, ctx.config.rqm, meta);
        return parse(raw_out);
    } catch (const ParseError&) {
        const std::string retry_prompt = prompt + format_reminder_suffix(reminder_hint);
        raw_out = ctx.rqm.complete(images, retry_prompt, ctx.config.rqm, meta);
        return parse(raw_out);
    }
}

/// Region bbox mapped onto a candidate's pixel grid (clamped); nullopt when
/// the projection collapses to an empty box.
std::optional<Bbox> project_box(const Bbox& box, const GeoTransform& from,
                                const GeoTransform& to, int to_width, int to_height) {
    const GeoBox gb = pixel_box_to_geo(from, box);
    // lat_max is the northern edge; with negative px_h_deg it maps to the
    // smaller row coordinate.
    double c0 = to.lon_to_col(gb.lon_min);
    double c1 = to.lon_to_col(gb.lon_max);
    double r0 = to.lat_to_row(to.px_h_deg < 0 ? gb.lat_max : gb.lat_min);
    double r1 = to.lat_to_row(to.px_h_deg < 0 ? gb.lat_min : gb.lat_max);
    Bbox out;
    out.x_min = std::max(0, static_cast<int>(std::floor(c0)));
    out.y_min = std::max(0, static_cast<int>(std::floor(r0)));
    out.x_max = std::min(to_width, static_cast<int>(std::ceil(c1)));
    out.y_max = std::min(to_height, static_cast<int>(std::ceil(r1)));
    if (!out.valid())
        return std::nullopt;
    return out;
}

struct RegionOutcome {
    RegionTrace trace;
    std::optional<BinaryMask> registered_mask;  // y_s on the patch grid
    bool add = false;
};

RegionOutcome process_region(const Patch& patch, const AmbiguityRegion& region,
                             const PipelineContext& ctx, StageTimings& timings) {
    RegionOutcome outcome;
    RegionTrace& trace = outcome.trace;
    trace.region = region;

    if (ctx.config.mode == CorrectionMode::no_query) {
        trace.skip_reason = "mode=no-query disables the reasoning query";
        return outcome;
    }

    const ImageRgb annotated =
        annotate_with_box(patch.image, region.bbox, ctx.config.annotation);

    // Attribution (prompt I).
    trace.prompt_i = ctx.prompts.render_prompt_i(region, patch.meta);
    QueryDirective directive;
    {
        const auto t = Clock::now();
        CallMeta meta{patch.meta.patch_id, region.region_id, "attribution"};
        try {
            directive = complete_and_parse(
                ctx, {annotated}, trace.prompt_i, meta,
                "'DIRECTIVE: <reg-1>' or 'DIRECTIVE: <reg-2>'", trace.directive_raw,
                [&](const std::string& text) {
                    return parse_directive(text, region.region_id);
                });
        } catch (const ParseError& e) {
            timings.reasoning_query_mllm_s += seconds_since(t);
            trace.directive_error = describe_parse_error(e);
            trace.skip_reason = "attribution reply unusable after retry";
            return outcome;
        } catch (const AdapterError& e) {
            timings.reasoning_query_mllm_s += seconds_since(t);
            trace.directive_error = e.what();
            trace.skip_reason = std::string("reasoning model call failed: ") + e.what();
            return outcome;
        }
        timings.reasoning_query_mllm_s += seconds_since(t);
    }
    trace.directive = directive;

    // Ablation gating.
    if ((ctx.config.mode == CorrectionMode::temporal_only &&
         directive.kind == QueryKind::enlarge) ||
        (ctx.config.mode == CorrectionMode::enlarge_only &&
         directive.kind == QueryKind::temporal)) {
        trace.honored = false;
        trace.skip_reason = std::string("mode=") + to_string(ctx.config.mode) +
                            " does not honor " + to_string(directive.kind) +
                            " directives";
        return outcome;
    }
    trace.honored = true;

    // Data query.
    QuerySpec spec;
    spec.kind = directive.kind;
    spec.geo_bbox = pixel_box_to_geo(patch.geo, region.bbox);
    if (directive.kind == QueryKind::temporal)
        spec.exclude_season = patch.meta.season;
    spec.enlarge_scale = ctx.config.enlarge_scale;
    spec.requested_patch_px = ctx.config.patch_px;

    std::vector<CandidateImage> candidates;
    {
        const auto t = Clock::now();
        try {
            candidates = ctx.db.query(spec);
        } catch (const std::exception& e) {
            timings.reasoning_query_db_s += seconds_since(t);
            trace.skip_reason = std::string("data query failed: ") + e.what();
            return outcome;
        }
        timings.reasoning_query_db_s += seconds_since(t);
    }
    for (const CandidateImage& c : candidates)
        trace.candidates.push_back(CandidateNote{
            c.candidate_id, c.season,
            raster_footprint(c.geo, c.pixels.width(), c.pixels.height()),
            c.source_scene_id});
    if (candidates.empty()) {
        trace.skip_reason = "data query returned no candidates";
        return outcome;
    }

    // Optimal auxiliary selection (prompt II); a single candidate is
    // auto-selected but still traced.
    std::size_t chosen_pos = 0;
    if (candidates.size() == 1) {
        trace.auto_selected = true;
    } else {
        std::vector<CandidateSummary> summaries;
        std::vector<int> offered;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const CandidateImage& c = candidates[i];
            summaries.push_back(CandidateSummary{
                static_cast<int>(i) + 1, c.source_scene_id, c.season,
                raster_footprint(c.geo, c.pixels.width(), c.pixels.height()),
                c.pixels.width(), c.pixels.height()});
            offered.push_back(static_cast<int>(i) + 1);
        }
        trace.prompt_ii =
            ctx.prompts.render_prompt_ii(region, patch.meta, summaries, directive.kind);
        std::vector<ImageRgb> images;
        images.push_back(annotated);
        for (const CandidateImage& c : candidates)
            images.push_back(c.pixels);

        const auto t = Clock::now();
        CallMeta meta{patch.meta.patch_id, region.region_id, "selection"};
        std::string raw;
        try {
            SelectionResult sel = complete_and_parse(
                ctx, images, trace.prompt_ii, meta, "'SELECTED: <n>'", raw,
                [&](const std::string& text) { return parse_selection(text, offered); });
            timings.reasoning_query_mllm_s += seconds_since(t);
            chosen_pos = static_cast<std::size_t>(sel.chosen_index) - 1;
            trace.selection = std::move(sel);
        } catch (const ParseError& e) {
            timings.reasoning_query_mllm_s += seconds_since(t);
            trace.selection_error = describe_parse_error(e);
            trace.skip_reason = "selection reply unusable after retry";
            return outcome;
        } catch (const AdapterError& e) {
            timings.reasoning_query_mllm_s += seconds_since(t);
            trace.selection_error = e.what();
            trace.skip_reason = std::string("reasoning model call failed: ") + e.what();
            return outcome;
        }
    }
    const CandidateImage& chosen = candidates[chosen_pos];
    trace.chosen_candidate_id = chosen.candidate_id;

    // Multi-image verdict (prompt III).
    trace.prompt_iii = ctx.prompts.render_prompt_iii(region, patch.meta, directive.kind);
    Verdict verdict;
    {
        const auto t = Clock::now();
        CallMeta meta{patch.meta.patch_id, region.region_id, "verdict"};
        std::string raw;
        try {
            verdict = complete_and_parse(
                ctx, {annotated, chosen.pixels}, trace.prompt_iii, meta,
                "'ANSWER: yes' or 'ANSWER: no'", raw,
                [&](const std::string& text) { return parse_verdict(text); });
        } catch (const ParseError& e) {
            timings.collaborative_mllm_s += seconds_since(t);
            trace.verdict_error = describe_parse_error(e);
            trace.skip_reason = "verdict reply unusable after retry";
            return outcome;
        } catch (const AdapterError& e) {
            timings.collaborative_mllm_s += seconds_since(t);
            trace.verdict_error = e.what();
            trace.skip_reason = std::string("reasoning model call failed: ") + e.what();
            return outcome;
        }
        timings.collaborative_mllm_s += seconds_since(t);
    }
    trace.verdict = verdict;

    // Dynamic correction: segment the chosen auxiliary with the region box
    // prompt, register y_s onto the patch grid restricted to the bbox.
    {
        const auto t = Clock::now();
        const std::optional<Bbox> box_prompt =
            project_box(region.bbox, patch.geo, chosen.geo, chosen.pixels.width(),
                        chosen.pixels.height());
        if (!box_prompt) {
            timings.dynamic_correction_s += seconds_since(t);
            trace.skip_reason = "region box does not map into the auxiliary image";
            return outcome;
        }
        trace.fsm_box_prompt = box_prompt;
        trace.fsm_identity = ctx.fsm.identity();
        CallMeta meta{patch.meta.patch_id, region.region_id, "correction"};
        try {
            FsmResult seg = ctx.fsm.segment(chosen.pixels, box_prompt, meta);
            BinaryMask registered =
                register_mask(seg.mask, chosen.geo, patch.geo, patch.image.width(),
                              patch.image.height(), region.bbox);
            std::int64_t count = 0;
            for (std::uint8_t v : registered.values())
                count += v;
            trace.correction_pixels = count;
            outcome.registered_mask = std::move(registered);
            outcome.add = verdict.value == VerdictValue::yes;
            trace.applied = outcome.add ? AppliedOp::add : AppliedOp::subtract;
        } catch (const std::exception& e) {
            trace.skip_reason = std::string("correction failed: ") + e.what();
        }
        timings.dynamic_correction_s += seconds_since(t);
    }
    return outcome;
}

}  // namespace

SegmentationResult run_patch(const Patch& patch, const PipelineContext& ctx) {
    validate_config(ctx.config);
    if (patch.meta.patch_id.empty())
        throw ConfigError("patch_id must be non-empty");
    validate_geotransform(patch.geo);

    SegmentationResult result;
    result.trace.patch_id = patch.meta.patch_id;
    result.trace.mode = ctx.config.mode;

    // Basic perception: base segmentation plus ambiguity selection.
    const auto t0 = Clock::now();
    FsmResult base =
        ctx.fsm.segment(patch.image, std::nullopt,
                        CallMeta{patch.meta.patch_id, 0, "base"});
    if (base.mask.width() != patch.image.width() ||
        base.mask.height() != patch.image.height())
        throw std::runtime_error("base segmentation dims do not match patch");
    std::vector<AmbiguityRegion> regions = select_ambiguous_regions(
        base.confidence, ctx.config.ambiguity, patch.meta.patch_id);
    result.trace.timings.basic_perception_s = seconds_since(t0);

    result.base_mask = base.mask;
    result.confidence = std::move(base.confidence);

    // Regions are corrected sequentially in region-id order; on overlapping
    // boxes a later correction overwrites an earlier one.
    BinaryMask current = result.base_mask;
    for (const AmbiguityRegion& region : regions) {
        RegionOutcome outcome =
            process_region(patch, region, ctx, result.trace.timings);
        if (outcome.registered_mask) {
            const auto t = Clock::now();
            IntMask combined = outcome.add
                                   ? mask_add(current, *outcome.registered_mask)
                                   : mask_subtract(current, *outcome.registered_mask);
            current = clamp_binary(combined);
            result.trace.timings.dynamic_correction_s += seconds_since(t);
        }
        result.trace.regions.push_back(std::move(outcome.trace));
    }
    result.final_mask = std::move(current);
    return result;
}

bool locality_holds(const SegmentationResult& result) {
    const BinaryMask& base = result.base_mask;
    const BinaryMask& final_mask = result.final_mask;
    if (base.width() != final_mask.width() || base.height() != final_mask.height())
        return false;
    std::vector<Bbox> boxes;
    for (const RegionTrace& r : result.trace.regions)
        if (r.applied != AppliedOp::skip)
            boxes.push_back(r.region.bbox);
    for (int y = 0; y < base.height(); ++y) {
        for (int x = 0; x < base.width(); ++x) {
            bool inside = false;
            for (const Bbox& b : boxes)
                if (b.contains(x, y)) {
                    inside = true;
                    break;
                }
            if (!inside && base.at(x, y) != final_mask.at(x, y))
                return false;
        }
    }
    return true;
}

}  // namespace farmmind
