#include "doctest.h"
#include "farmmind/orchestrator.hpp"
#include "farmmind/raster_io.hpp"
#include "json.hpp"
#include "support/fixtures.hpp"

using namespace farmmind;
using namespace farmmind::testing;

namespace {

PipelineConfig test_config(CorrectionMode mode = CorrectionMode::full) {
    PipelineConfig cfg;
    cfg.ambiguity = AmbiguityParams{1.0, 100, 900, Connectivity::eight};
    cfg.enlarge_scale = 3.0;
    cfg.patch_px = 64;
    cfg.mode = mode;
    return cfg;
}

// Base segmentation shared by the scripted patches: left half farmland,
// one low-confidence block over the farmland boundary.
nlohmann::json base_entry(const Bbox& ambiguous) {
    return {{"stage", "base"},
            {"mask",
             {{"width", kPatchSize},
              {"height", kPatchSize},
              {"background", 0},
              {"boxes", {{{"box", {0, 0, 32, kPatchSize}}, {"value", 1}}}}}},
            {"confidence",
             {{"background", 4.0},
              {"boxes",
               {{{"box", {ambiguous.x_min, ambiguous.y_min, ambiguous.x_max,
                          ambiguous.y_max}},
                 {"value", 0.0}}}}}}};
}

std::shared_ptr<const MockScript> enlarge_yes_script(const Bbox& box) {
    nlohmann::json script;
    script["fsm"] = {base_entry(box),
                     {{"stage", "correction"}, {"region", 1}, {"fill_box", true}}};
    script["rqm"] = {
        {{"stage", "attribution"},
         {"region", 1},
         {"text", "The structure is cut off at the patch edge; context is missing. "
                  "DIRECTIVE: <reg-2>"}},
        {{"stage", "selection"}, {"region", 1}, {"text", "SELECTED: 2"}},
        {{"stage", "verdict"},
         {"region", 1},
         {"text", "The wider view shows parcel rows continuing.\nANSWER: yes"}}};
    return parse_mock_script(script.dump());
}

BinaryMask box_mask(int w, int h, const Bbox& box) {
    BinaryMask m(w, h, 0);
    for (int y = box.y_min; y < box.y_max; ++y)
        for (int x = box.x_min; x < box.x_max; ++x)
            m.set(x, y, 1);
    return m;
}

struct WorldFixture {
    TempDir tmp;
    std::unique_ptr<SceneStore> store;
    PromptLibrary prompts;

    WorldFixture() {
        build_test_world(tmp.path());
        store = std::make_unique<SceneStore>(tmp.path() / "catalog");
    }
};

}  // namespace

TEST_CASE("a confident patch passes through untouched") {
    WorldFixture world;
    nlohmann::json script;
    script["fsm"] = {
        {{"stage", "base"},
         {"mask", {{"width", kPatchSize}, {"height", kPatchSize}, {"background", 1}}},
         {"confidence", {{"background", 4.0}}}}};
    script["rqm"] = nlohmann::json::array();
    auto mock = parse_mock_script(script.dump());
    auto rqm = make_scripted_rqm_adapter(mock);
    auto fsm = make_scripted_fsm_adapter(mock);

    const PipelineConfig cfg = test_config();
    PipelineContext ctx{cfg, world.prompts, *rqm, *fsm, *world.store};
    const Patch patch = make_test_patch("p-clear", Season::summer, "anhui");
    SegmentationResult result = run_patch(patch, ctx);

    CHECK(result.final_mask == result.base_mask);
    CHECK(result.trace.regions.empty());
    CHECK(locality_holds(result));
}

TEST_CASE("enlarge workflow with verdict yes fills the region") {
    WorldFixture world;
    const Bbox box{20, 20, 40, 40};
    auto mock = enlarge_yes_script(box);
    auto rqm = make_scripted_rqm_adapter(mock);
    auto fsm = make_scripted_fsm_adapter(mock);

    const PipelineConfig cfg = test_config();
    PipelineContext ctx{cfg, world.prompts, *rqm, *fsm, *world.store};
    const Patch patch = make_test_patch("p-yes", Season::summer, "anhui");
    SegmentationResult result = run_patch(patch, ctx);

    REQUIRE(result.trace.regions.size() == 1);
    const RegionTrace& r = result.trace.regions[0];
    CHECK(r.directive->kind == QueryKind::enlarge);
    CHECK(r.honored);
    CHECK(r.candidates.size() == 4);
    CHECK(r.selection->chosen_index == 2);
    CHECK(r.chosen_candidate_id == "anhui-summer");  // 2nd in season order
    CHECK(r.verdict->value == VerdictValue::yes);
    CHECK(r.applied == AppliedOp::add);
    CHECK(r.correction_pixels == box.area());

    // yes-verdict add + clamp: every correction pixel inside the bbox becomes 1.
    for (int y = 0; y < kPatchSize; ++y)
        for (int x = 0; x < kPatchSize; ++x) {
            const std::uint8_t expected =
                box.contains(x, y) ? 1 : result.base_mask.at(x, y);
            CHECK(result.final_mask.at(x, y) == expected);
        }
    CHECK(locality_holds(result));
}

TEST_CASE("two regions apply sequentially: OR then AND-NOT") {
    WorldFixture world;
    const Bbox box1{4, 4, 24, 24};
    const Bbox box2{40, 8, 60, 48};

    nlohmann::json script;
    script["fsm"] = {
        {{"stage", "base"},
         {"mask",
          {{"width", kPatchSize},
           {"height", kPatchSize},
           {"background", 0},
           {"boxes", {{{"box", {0, 0, 32, kPatchSize}}, {"value", 1}}}}}},
         {"confidence",
          {{"background", 4.0},
           {"boxes",
            {{{"box", {box1.x_min, box1.y_min, box1.x_max, box1.y_max}}, {"value", 0.0}},
             {{"box", {box2.x_min, box2.y_min, box2.x_max, box2.y_max}},
              {"value", 0.0}}}}}}},
        {{"stage", "correction"}, {"region", 1}, {"fill_box", true}},
        {{"stage", "correction"}, {"region", 2}, {"fill_box", true}}};
    script["rqm"] = {
        {{"stage", "attribution"},
         {"region", 1},
         {"text", "Season-dependent appearance. DIRECTIVE: <reg-1>"}},
        {{"stage", "selection"}, {"region", 1}, {"text", "SELECTED: 1"}},
        {{"stage", "verdict"}, {"region", 1}, {"text", "ANSWER: yes"}},
        {{"stage", "attribution"},
         {"region", 2},
         {"text", "Truncated structure. DIRECTIVE: <reg-2>"}},
        {{"stage", "selection"}, {"region", 2}, {"text", "SELECTED: 3"}},
        {{"stage", "verdict"}, {"region", 2}, {"text", "ANSWER: no"}}};
    auto mock = parse_mock_script(script.dump());
    auto rqm = make_scripted_rqm_adapter(mock);
    auto fsm = make_scripted_fsm_adapter(mock);

    const PipelineConfig cfg = test_config();
    PipelineContext ctx{cfg, world.prompts, *rqm, *fsm, *world.store};
    const Patch patch = make_test_patch("p-two", Season::summer, "anhui");
    SegmentationResult result = run_patch(patch, ctx);

    REQUIRE(result.trace.regions.size() == 2);
    CHECK(result.trace.regions[0].applied == AppliedOp::add);
    CHECK(result.trace.regions[1].applied == AppliedOp::subtract);
    // Region 1 queried temporal data, so the patch's own season is excluded.
    for (const CandidateNote& c : result.trace.regions[0].candidates)
        CHECK(c.season != Season::summer);
    CHECK(result.trace.regions[0].candidates.size() == 3);

    // Hand-composed sequential mask algebra oracle.
    const BinaryMask ys1 = box_mask(kPatchSize, kPatchSize, box1);
    const BinaryMask ys2 = box_mask(kPatchSize, kPatchSize, box2);
    const BinaryMask expected =
        clamp_binary(mask_subtract(clamp_binary(mask_add(result.base_mask, ys1)), ys2));
    CHECK(result.final_mask == expected);
    CHECK(locality_holds(result));
}

TEST_CASE("no-query mode reproduces the base mask with skip records") {
    WorldFixture world;
    const Bbox box{20, 20, 40, 40};
    auto mock = enlarge_yes_script(box);
    auto rqm = make_scripted_rqm_adapter(mock);
    auto fsm = make_scripted_fsm_adapter(mock);

    const PipelineConfig cfg = test_config(CorrectionMode::no_query);
    PipelineContext ctx{cfg, world.prompts, *rqm, *fsm, *world.store};
    SegmentationResult result =
        run_patch(make_test_patch("p-yes", Season::summer, "anhui"), ctx);

    CHECK(result.final_mask == result.base_mask);
    REQUIRE(result.trace.regions.size() == 1);
    CHECK(result.trace.regions[0].applied == AppliedOp::skip);
    CHECK_FALSE(result.trace.regions[0].honored);
    CHECK(result.trace.regions[0].prompt_i.empty());  // no model call at all
}

TEST_CASE("temporal-only mode does not honor enlarge directives") {
    WorldFixture world;
    const Bbox box{20, 20, 40, 40};
    auto mock = enlarge_yes_script(box);
    auto rqm = make_scripted_rqm_adapter(mock);
    auto fsm = make_scripted_fsm_adapter(mock);

    const PipelineConfig cfg = test_config(CorrectionMode::temporal_only);
    PipelineContext ctx{cfg, world.prompts, *rqm, *fsm, *world.store};
    SegmentationResult result =
        run_patch(make_test_patch("p-yes", Season::summer, "anhui"), ctx);

    CHECK(result.final_mask == result.base_mask);
    REQUIRE(result.trace.regions.size() == 1);
    const RegionTrace& r = result.trace.regions[0];
    CHECK(r.directive->kind == QueryKind::enlarge);  // parsed but not honored
    CHECK_FALSE(r.honored);
    CHECK(r.applied == AppliedOp::skip);

    // The same script under enlarge-only mode is honored.
    const PipelineConfig cfg2 = test_config(CorrectionMode::enlarge_only);
    PipelineContext ctx2{cfg2, world.prompts, *rqm, *fsm, *world.store};
    SegmentationResult result2 =
        run_patch(make_test_patch("p-yes", Season::summer, "anhui"), ctx2);
    CHECK(result2.trace.regions[0].honored);
    CHECK(result2.trace.regions[0].applied == AppliedOp::add);
}

TEST_CASE("scripted runs are deterministic: identical trace bytes") {
    WorldFixture world;
    const Bbox box{20, 20, 40, 40};
    auto mock = enlarge_yes_script(box);
    auto rqm = make_scripted_rqm_adapter(mock);
    auto fsm = make_scripted_fsm_adapter(mock);
    const PipelineConfig cfg = test_config();
    PipelineContext ctx{cfg, world.prompts, *rqm, *fsm, *world.store};
    const Patch patch = make_test_patch("p-yes", Season::summer, "anhui");

    SegmentationResult a = run_patch(patch, ctx);
    SegmentationResult b = run_patch(patch, ctx);
    CHECK(a.final_mask == b.final_mask);
    CHECK(trace_to_json(a.trace) == trace_to_json(b.trace));
}

TEST_CASE("unusable replies degrade to per-region skips, never abort") {
    WorldFixture world;
    const Bbox box{20, 20, 40, 40};

    SUBCASE("attribution reply with no tag, even after the retry") {
        nlohmann::json script;
        script["fsm"] = {base_entry(box)};
        script["rqm"] = {{{"stage", "attribution"},
                          {"region", 1},
                          {"text", "hard to tell, need more data"}}};
        auto mock = parse_mock_script(script.dump());
        auto rqm = make_scripted_rqm_adapter(mock);
        auto fsm = make_scripted_fsm_adapter(mock);
        const PipelineConfig cfg = test_config();
        PipelineContext ctx{cfg, world.prompts, *rqm, *fsm, *world.store};
        SegmentationResult result =
            run_patch(make_test_patch("p-bad", Season::summer, "anhui"), ctx);
        CHECK(result.final_mask == result.base_mask);
        REQUIRE(result.trace.regions.size() == 1);
        CHECK(result.trace.regions[0].applied == AppliedOp::skip);
        REQUIRE(result.trace.regions[0].directive_error.has_value());
        CHECK(result.trace.regions[0].directive_error->find("no_directive") !=
              std::string::npos);
    }

    SUBCASE("missing verdict script entry") {
        nlohmann::json script;
        script["fsm"] = {base_entry(box)};
        script["rqm"] = {{{"stage", "attribution"},
                          {"region", 1},
                          {"text", "DIRECTIVE: <reg-2>"}},
                         {{"stage", "selection"}, {"region", 1}, {"text", "SELECTED: 1"}}};
        auto mock = parse_mock_script(script.dump());
        auto rqm = make_scripted_rqm_adapter(mock);
        auto fsm = make_scripted_fsm_adapter(mock);
        const PipelineConfig cfg = test_config();
        PipelineContext ctx{cfg, world.prompts, *rqm, *fsm, *world.store};
        SegmentationResult result =
            run_patch(make_test_patch("p-bad2", Season::summer, "anhui"), ctx);
        CHECK(result.final_mask == result.base_mask);
        CHECK(result.trace.regions[0].applied == AppliedOp::skip);
        CHECK(result.trace.regions[0].verdict_error.has_value());
    }

    SUBCASE("empty candidate set") {
        TempDir empty_dir;
        SceneStore empty_store(empty_dir.path() / "catalog");
        auto mock = enlarge_yes_script(box);
        auto rqm = make_scripted_rqm_adapter(mock);
        auto fsm = make_scripted_fsm_adapter(mock);
        const PipelineConfig cfg = test_config();
        PipelineContext ctx{cfg, world.prompts, *rqm, *fsm, empty_store};
        SegmentationResult result =
            run_patch(make_test_patch("p-empty", Season::summer, "anhui"), ctx);
        CHECK(result.final_mask == result.base_mask);
        CHECK(result.trace.regions[0].applied == AppliedOp::skip);
        CHECK(result.trace.regions[0].skip_reason ==
              "data query returned no candidates");
    }
}

TEST_CASE("trace json round-trips") {
    WorldFixture world;
    const Bbox box{20, 20, 40, 40};
    auto mock = enlarge_yes_script(box);
    auto rqm = make_scripted_rqm_adapter(mock);
    auto fsm = make_scripted_fsm_adapter(mock);
    const PipelineConfig cfg = test_config();
    PipelineContext ctx{cfg, world.prompts, *rqm, *fsm, *world.store};
    SegmentationResult result =
        run_patch(make_test_patch("p-yes", Season::summer, "anhui"), ctx);

    const std::string json = trace_to_json(result.trace);
    const CorrectionTrace parsed = trace_from_json(json);
    CHECK(trace_to_json(parsed) == json);

    const std::string human = render_trace_human(parsed, std::nullopt);
    CHECK(human.find("p-yes") != std::string::npos);
    CHECK(human.find("enlarge") != std::string::npos);
    CHECK(human.find("verdict: yes") != std::string::npos);
}

TEST_CASE("run_dataset: empty directory yields an empty report") {
    WorldFixture world;
    TempDir patches_dir;
    TempDir out_dir;
    nlohmann::json script;
    script["fsm"] = nlohmann::json::array();
    script["rqm"] = nlohmann::json::array();
    auto mock = parse_mock_script(script.dump());
    auto rqm = make_scripted_rqm_adapter(mock);
    auto fsm = make_scripted_fsm_adapter(mock);
    const PipelineConfig cfg = test_config();
    PipelineContext ctx{cfg, world.prompts, *rqm, *fsm, *world.store};

    DatasetReport report =
        run_dataset(patches_dir.path(), std::nullopt, out_dir.path(), ctx);
    CHECK(report.patches.empty());
    CHECK(report.failed == 0);
    CHECK(std::filesystem::exists(out_dir.path() / "manifest.json"));
}

TEST_CASE("run_dataset: totals equal the sum of individual runs; parallel == serial") {
    WorldFixture world;
    const Bbox box{20, 20, 40, 40};
    auto mock = enlarge_yes_script(box);  // wildcard patch entries apply to all
    auto rqm = make_scripted_rqm_adapter(mock);
    auto fsm = make_scripted_fsm_adapter(mock);

    TempDir patches_dir;
    TempDir gt_dir;
    std::vector<Patch> patches;
    int i = 0;
    for (const std::string& province : world_provinces()) {
        Patch p = make_test_patch("p" + std::to_string(i++), Season::summer, province);
        write_patch_files(patches_dir.path(), p);
        write_mask_png(gt_dir.path() / (p.meta.patch_id + ".png"),
                       BinaryMask(kPatchSize, kPatchSize, 1));
        patches.push_back(std::move(p));
    }

    PipelineConfig cfg = test_config();
    PipelineContext ctx{cfg, world.prompts, *rqm, *fsm, *world.store};

    TempDir out_serial;
    DatasetReport serial =
        run_dataset(patches_dir.path(), gt_dir.path(), out_serial.path(), ctx);
    CHECK(serial.failed == 0);
    REQUIRE(serial.patches.size() == 3);

    // Totals equal the sum of three individual runs.
    ConfusionCounts expected_total;
    for (const Patch& p : patches) {
        SegmentationResult r = run_patch(p, ctx);
        expected_total += confusion(r.final_mask, BinaryMask(kPatchSize, kPatchSize, 1));
    }
    REQUIRE(!serial.metrics.empty());
    const GroupReport& overall = serial.metrics.back();
    CHECK(overall.group == "overall");
    CHECK(overall.counts.tp == expected_total.tp);
    CHECK(overall.counts.fp == expected_total.fp);
    CHECK(overall.counts.fn == expected_total.fn);
    CHECK(overall.counts.tn == expected_total.tn);

    // A parallel run produces byte-identical masks and traces.
    PipelineConfig cfg_par = test_config();
    cfg_par.parallelism = 4;
    PipelineContext ctx_par{cfg_par, world.prompts, *rqm, *fsm, *world.store};
    TempDir out_parallel;
    DatasetReport parallel =
        run_dataset(patches_dir.path(), gt_dir.path(), out_parallel.path(), ctx_par);
    CHECK(parallel.failed == 0);
    for (const Patch& p : patches) {
        const auto name_mask = "masks/" + p.meta.patch_id + ".png";
        const auto name_trace = "traces/" + p.meta.patch_id + ".trace.json";
        CHECK(read_file_bytes(out_serial.path() / name_mask) ==
              read_file_bytes(out_parallel.path() / name_mask));
        CHECK(read_file_text(out_serial.path() / name_trace) ==
              read_file_text(out_parallel.path() / name_trace));
    }
}

TEST_CASE("run_dataset isolates per-patch failures") {
    WorldFixture world;
    TempDir patches_dir;
    // One good patch and one with a corrupt sidecar.
    Patch good = make_test_patch("good", Season::summer, "anhui");
    write_patch_files(patches_dir.path(), good);
    write_png(patches_dir.path() / "broken.png", ImageRgb(8, 8));
    write_file_text(patches_dir.path() / "broken.json", "{not json");

    const Bbox box{20, 20, 40, 40};
    auto mock = enlarge_yes_script(box);
    auto rqm = make_scripted_rqm_adapter(mock);
    auto fsm = make_scripted_fsm_adapter(mock);
    const PipelineConfig cfg = test_config();
    PipelineContext ctx{cfg, world.prompts, *rqm, *fsm, *world.store};

    TempDir out_dir;
    DatasetReport report =
        run_dataset(patches_dir.path(), std::nullopt, out_dir.path(), ctx);
    REQUIRE(report.patches.size() == 2);
    CHECK(report.failed == 1);
    CHECK_FALSE(report.patches[0].ok);  // broken.png sorts first
    CHECK(report.patches[1].ok);
}
