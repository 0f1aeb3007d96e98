// Regenerates the checked-in golden fixtures under tests/fixtures/: prompt
// snapshots and the end-to-end masks/traces for the two scripted workflows.
// Run from the repo root after changing templates, scripts, or pipeline
// behavior, then review the diff before committing.

#include <iostream>

#include "farmmind/config.hpp"
#include "farmmind/orchestrator.hpp"
#include "farmmind/raster_io.hpp"
#include "support/fixtures.hpp"

using namespace farmmind;
using namespace farmmind::testing;

namespace {

void write_prompt_snapshots(const std::filesystem::path& out_dir) {
    PromptLibrary lib;
    AmbiguityRegion region;
    region.region_id = 2;
    region.bbox = Bbox{96, 160, 246, 260};
    region.bbox_area = region.bbox.area();
    region.pixel_count = region.bbox_area / 2;
    region.source_patch_id = "patch-a";
    const PatchMeta patch{"patch-a", Season::summer, "china", "anhui"};
    std::vector<CandidateSummary> cands;
    cands.push_back(CandidateSummary{1, "anhui-spring", Season::spring,
                                     GeoBox{10.25, 49.25, 10.75, 49.75}, 512, 512});
    cands.push_back(CandidateSummary{2, "anhui-winter", Season::winter,
                                     GeoBox{10.25, 49.25, 10.75, 49.75}, 512, 512});

    write_file_text(out_dir / "prompt_i.golden.txt", lib.render_prompt_i(region, patch));
    write_file_text(out_dir / "prompt_ii_temporal.golden.txt",
                    lib.render_prompt_ii(region, patch, cands, QueryKind::temporal));
    write_file_text(out_dir / "prompt_ii_enlarge.golden.txt",
                    lib.render_prompt_ii(region, patch, cands, QueryKind::enlarge));
    write_file_text(out_dir / "prompt_iii_temporal.golden.txt",
                    lib.render_prompt_iii(region, patch, QueryKind::temporal));
    write_file_text(out_dir / "prompt_iii_enlarge.golden.txt",
                    lib.render_prompt_iii(region, patch, QueryKind::enlarge));
    std::cout << "prompt snapshots -> " << out_dir.string() << "\n";
}

void write_run_goldens(const std::filesystem::path& golden_dir) {
    TempDir work("make-goldens");
    build_workflow_fixture(work.path());

    AppConfig config = load_app_config(golden_dir / "config.json");
    config.mock_script = golden_dir / "workflows.script.json";
    Adapters adapters = make_adapters(config, std::nullopt);
    PromptLibrary prompts = make_prompt_library(config);
    SceneStore store(work.path() / "catalog");
    PipelineContext ctx{config.pipeline, prompts, *adapters.rqm, *adapters.fsm, store};

    const auto out = work.path() / "out";
    DatasetReport report = run_dataset(work.path() / "patches", std::nullopt, out, ctx,
                                       config_snapshot(config));
    if (report.failed != 0)
        throw std::runtime_error("golden pipeline run failed");

    for (const char* id : {"wf-enlarge", "wf-temporal"}) {
        const std::string name(id);
        std::filesystem::copy_file(out / "masks" / (name + ".png"),
                                   golden_dir / (name + ".final.png"),
                                   std::filesystem::copy_options::overwrite_existing);
        std::filesystem::copy_file(out / "traces" / (name + ".trace.json"),
                                   golden_dir / (name + ".trace.golden.json"),
                                   std::filesystem::copy_options::overwrite_existing);
    }

    // Base masks (what mode=no-query must reproduce byte-identically).
    AppConfig nq = config;
    nq.pipeline.mode = CorrectionMode::no_query;
    PipelineContext nq_ctx{nq.pipeline, prompts, *adapters.rqm, *adapters.fsm, store};
    const auto out_nq = work.path() / "out-nq";
    DatasetReport nq_report = run_dataset(work.path() / "patches", std::nullopt, out_nq,
                                          nq_ctx, config_snapshot(nq));
    if (nq_report.failed != 0)
        throw std::runtime_error("golden no-query run failed");
    for (const char* id : {"wf-enlarge", "wf-temporal"}) {
        const std::string name(id);
        std::filesystem::copy_file(out_nq / "masks" / (name + ".png"),
                                   golden_dir / (name + ".base.png"),
                                   std::filesystem::copy_options::overwrite_existing);
    }
    std::cout << "run goldens -> " << golden_dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_goldens <tests/fixtures dir>\n";
        return 2;
    }
    try {
        const std::filesystem::path fixtures(argv[1]);
        std::filesystem::create_directories(fixtures / "prompts");
        std::filesystem::create_directories(fixtures / "golden");
        write_prompt_snapshots(fixtures / "prompts");
        write_run_goldens(fixtures / "golden");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
