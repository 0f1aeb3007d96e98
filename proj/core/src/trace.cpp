#include <sstream>

#include "farmmind/orchestrator.hpp"
#include "json.hpp"

namespace farmmind {

namespace {

nlohmann::json box_json(const Bbox& b) {
    return {b.x_min, b.y_min, b.x_max, b.y_max};
}

Bbox box_from(const nlohmann::json& j) {
    return Bbox{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(),
                j.at(3).get<int>()};
}

nlohmann::json geobox_json(const GeoBox& g) {
    return {g.lon_min, g.lat_min, g.lon_max, g.lat_max};
}

GeoBox geobox_from(const nlohmann::json& j) {
    return GeoBox{j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
                  j.at(3).get<double>()};
}

nlohmann::json region_trace_json(const RegionTrace& r) {
    nlohmann::json j;
    j["region"] = {{"region_id", r.region.region_id},
                   {"bbox", box_json(r.region.bbox)},
                   {"bbox_area", r.region.bbox_area},
                   {"pixel_count", r.region.pixel_count},
                   {"source_patch_id", r.region.source_patch_id}};
    j["prompt_i"] = r.prompt_i;
    if (r.directive)
        j["directive"] = {{"kind", to_string(r.directive->kind)},
                          {"rationale", r.directive->rationale_text}};
    else
        j["directive"] = nullptr;
    j["directive_raw"] = r.directive_raw;
    j["directive_error"] = r.directive_error ? nlohmann::json(*r.directive_error)
                                             : nlohmann::json(nullptr);
    j["honored"] = r.honored;

    nlohmann::json cands = nlohmann::json::array();
    for (const CandidateNote& c : r.candidates)
        cands.push_back({{"candidate_id", c.candidate_id},
                         {"season", to_string(c.season)},
                         {"footprint", geobox_json(c.footprint)},
                         {"source_scene_id", c.source_scene_id}});
    j["candidates"] = cands;

    j["prompt_ii"] = r.prompt_ii;
    if (r.selection)
        j["selection"] = {{"chosen_index", r.selection->chosen_index},
                          {"rationale", r.selection->rationale_text}};
    else
        j["selection"] = nullptr;
    j["auto_selected"] = r.auto_selected;
    j["selection_error"] = r.selection_error ? nlohmann::json(*r.selection_error)
                                             : nlohmann::json(nullptr);

    j["prompt_iii"] = r.prompt_iii;
    if (r.verdict)
        j["verdict"] = {{"value", to_string(r.verdict->value)},
                        {"rationale", r.verdict->rationale_text}};
    else
        j["verdict"] = nullptr;
    j["verdict_error"] = r.verdict_error ? nlohmann::json(*r.verdict_error)
                                         : nlohmann::json(nullptr);

    j["chosen_candidate_id"] = r.chosen_candidate_id;
    j["fsm_identity"] = r.fsm_identity;
    j["fsm_box_prompt"] =
        r.fsm_box_prompt ? box_json(*r.fsm_box_prompt) : nlohmann::json(nullptr);
    j["correction_pixels"] = r.correction_pixels;
    j["applied"] = to_string(r.applied);
    j["skip_reason"] = r.skip_reason;
    return j;
}

RegionTrace region_trace_from(const nlohmann::json& j) {
    RegionTrace r;
    const auto& reg = j.at("region");
    r.region.region_id = reg.at("region_id").get<int>();
    r.region.bbox = box_from(reg.at("bbox"));
    r.region.bbox_area = reg.at("bbox_area").get<std::int64_t>();
    r.region.pixel_count = reg.at("pixel_count").get<std::int64_t>();
    r.region.source_patch_id = reg.at("source_patch_id").get<std::string>();
    r.prompt_i = j.at("prompt_i").get<std::string>();
    if (!j.at("directive").is_null()) {
        QueryDirective d;
        d.kind = query_kind_from_string(j["directive"].at("kind").get<std::string>());
        d.rationale_text = j["directive"].at("rationale").get<std::string>();
        d.region_id = r.region.region_id;
        r.directive = std::move(d);
    }
    r.directive_raw = j.at("directive_raw").get<std::string>();
    if (!j.at("directive_error").is_null())
        r.directive_error = j["directive_error"].get<std::string>();
    r.honored = j.at("honored").get<bool>();
    for (const auto& c : j.at("candidates"))
        r.candidates.push_back(CandidateNote{
            c.at("candidate_id").get<std::string>(),
            season_from_string(c.at("season").get<std::string>()),
            geobox_from(c.at("footprint")), c.at("source_scene_id").get<std::string>()});
    r.prompt_ii = j.at("prompt_ii").get<std::string>();
    if (!j.at("selection").is_null()) {
        SelectionResult s;
        s.chosen_index = j["selection"].at("chosen_index").get<int>();
        s.rationale_text = j["selection"].at("rationale").get<std::string>();
        r.selection = std::move(s);
    }
    r.auto_selected = j.at("auto_selected").get<bool>();
    if (!j.at("selection_error").is_null())
        r.selection_error = j["selection_error"].get<std::string>();
    r.prompt_iii = j.at("prompt_iii").get<std::string>();
    if (!j.at("verdict").is_null()) {
        Verdict v;
        v.value = j["verdict"].at("value").get<std::string>() == "yes"
                      ? VerdictValue::yes
                      : VerdictValue::no;
        v.rationale_text = j["verdict"].at("rationale").get<std::string>();
        r.verdict = std::move(v);
    }
    if (!j.at("verdict_error").is_null())
        r.verdict_error = j["verdict_error"].get<std::string>();
    r.chosen_candidate_id = j.at("chosen_candidate_id").get<std::string>();
    r.fsm_identity = j.at("fsm_identity").get<std::string>();
    if (!j.at("fsm_box_prompt").is_null())
        r.fsm_box_prompt = box_from(j["fsm_box_prompt"]);
    r.correction_pixels = j.at("correction_pixels").get<std::int64_t>();
    const std::string applied = j.at("applied").get<std::string>();
    r.applied = applied == "add" ? AppliedOp::add
                : applied == "subtract" ? AppliedOp::subtract
                                        : AppliedOp::skip;
    r.skip_reason = j.at("skip_reason").get<std::string>();
    return r;
}

}  // namespace

std::string trace_to_json(const CorrectionTrace& trace) {
    nlohmann::json j;
    j["patch_id"] = trace.patch_id;
    j["mode"] = to_string(trace.mode);
    nlohmann::json regions = nlohmann::json::array();
    for (const RegionTrace& r : trace.regions)
        regions.push_back(region_trace_json(r));
    j["regions"] = regions;
    return j.dump(2);
}

CorrectionTrace trace_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    CorrectionTrace trace;
    trace.patch_id = j.at("patch_id").get<std::string>();
    trace.mode = correction_mode_from_string(j.at("mode").get<std::string>());
    for (const auto& r : j.at("regions"))
        trace.regions.push_back(region_trace_from(r));
    return trace;
}

std::string telemetry_to_json(const CorrectionTrace& trace) {
    nlohmann::json j;
    j["patch_id"] = trace.patch_id;
    j["timings_s"] = {{"basic_perception", trace.timings.basic_perception_s},
                      {"reasoning_query_mllm", trace.timings.reasoning_query_mllm_s},
                      {"reasoning_query_db", trace.timings.reasoning_query_db_s},
                      {"collaborative_mllm", trace.timings.collaborative_mllm_s},
                      {"dynamic_correction", trace.timings.dynamic_correction_s}};
    return j.dump(2);
}

std::optional<StageTimings> telemetry_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.contains("timings_s"))
        return std::nullopt;
    const auto& t = j["timings_s"];
    StageTimings out;
    out.basic_perception_s = t.value("basic_perception", 0.0);
    out.reasoning_query_mllm_s = t.value("reasoning_query_mllm", 0.0);
    out.reasoning_query_db_s = t.value("reasoning_query_db", 0.0);
    out.collaborative_mllm_s = t.value("collaborative_mllm", 0.0);
    out.dynamic_correction_s = t.value("dynamic_correction", 0.0);
    return out;
}

std::string render_trace_human(const CorrectionTrace& trace,
                               const std::optional<StageTimings>& timings) {
    std::ostringstream out;
    out << "patch " << trace.patch_id << "  (mode: " << to_string(trace.mode) << ")\n";
    out << "regions: " << trace.regions.size() << "\n";
    for (const RegionTrace& r : trace.regions) {
        out << "\n== region " << r.region.region_id << " ==\n";
        out << "  bbox: [" << r.region.bbox.x_min << "," << r.region.bbox.y_min << ","
            << r.region.bbox.x_max << "," << r.region.bbox.y_max
            << ")  area: " << r.region.bbox_area
            << "  pixels: " << r.region.pixel_count << "\n";
        if (r.directive)
            out << "  directive: " << to_string(r.directive->kind)
                << (r.honored ? "" : "  [not honored by mode]") << "\n"
                << "    rationale: " << r.directive->rationale_text << "\n";
        if (r.directive_error)
            out << "  directive error: " << *r.directive_error << "\n";
        if (!r.candidates.empty()) {
            out << "  candidates (" << r.candidates.size() << "):\n";
            for (std::size_t i = 0; i < r.candidates.size(); ++i)
                out << "    " << (i + 1) << ". " << r.candidates[i].candidate_id
                    << "  season=" << to_string(r.candidates[i].season) << "\n";
        }
        if (r.auto_selected)
            out << "  selection: auto (single candidate)\n";
        else if (r.selection)
            out << "  selection: image " << r.selection->chosen_index << "\n";
        if (r.selection_error)
            out << "  selection error: " << *r.selection_error << "\n";
        if (r.verdict)
            out << "  verdict: " << to_string(r.verdict->value) << "\n"
                << "    rationale: " << r.verdict->rationale_text << "\n";
        if (r.verdict_error)
            out << "  verdict error: " << *r.verdict_error << "\n";
        if (!r.chosen_candidate_id.empty())
            out << "  y_s: candidate=" << r.chosen_candidate_id
                << " via " << r.fsm_identity << ", foreground px inside bbox: "
                << r.correction_pixels << "\n";
        out << "  applied: " << to_string(r.applied);
        if (r.applied == AppliedOp::skip)
            out << "  (" << r.skip_reason << ")";
        out << "\n";
    }
    if (timings) {
        out << "\nstage timings (s):\n";
        out << "  basic perception:        " << timings->basic_perception_s << "\n";
        out << "  reasoning query (model): " << timings->reasoning_query_mllm_s << "\n";
        out << "  reasoning query (db):    " << timings->reasoning_query_db_s << "\n";
        out << "  collaboration (model):   " << timings->collaborative_mllm_s << "\n";
        out << "  dynamic correction:      " << timings->dynamic_correction_s << "\n";
    }
    return out.str();
}

}  // namespace farmmind
