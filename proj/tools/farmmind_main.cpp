// farmmind CLI: database ingestion, pipeline runs, ablation modes,
// evaluation reports, trace inspection, and the HTTP query service.

#include <iostream>

#include "CLI11.hpp"
#include "farmmind/config.hpp"
#include "farmmind/db_service.hpp"
#include "farmmind/eval.hpp"
#include "farmmind/imagedb.hpp"
#include "farmmind/orchestrator.hpp"
#include "farmmind/raster_io.hpp"
#include "json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

using farmmind::ConfigError;

int cmd_ingest(const std::filesystem::path& catalog_dir,
               const std::filesystem::path& scene_dir) {
    farmmind::SceneStore store(catalog_dir);
    std::vector<std::filesystem::path> images;
    for (const auto& entry : std::filesystem::directory_iterator(scene_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            images.push_back(entry.path());
    std::sort(images.begin(), images.end());

    int ingested = 0;
    for (const auto& png : images) {
        auto meta_path = png;
        meta_path.replace_extension(".meta.json");
        if (!std::filesystem::exists(meta_path)) {
            std::cerr << "skipping " << png.filename().string()
                      << ": no .meta.json sidecar\n";
            continue;
        }
        nlohmann::json j = nlohmann::json::parse(farmmind::read_file_text(meta_path));
        farmmind::SceneMetadata meta;
        meta.scene_id = j.at("scene_id").get<std::string>();
        for (const auto& t : j.at("data_types")) {
            const std::string s = t.get<std::string>();
            if (s == "multi-temporal")
                meta.data_types.multi_temporal = true;
            else if (s == "enlarge")
                meta.data_types.enlarge_capable = true;
            else
                throw ConfigError("unknown data type in " + meta_path.string() + ": " + s);
        }
        meta.country = j.at("country").get<std::string>();
        meta.province = j.at("province").get<std::string>();
        meta.season = farmmind::season_from_string(j.at("season").get<std::string>());
        meta.acquisition_tag = j.value("acquisition_tag", "");
        store.ingest_scene(png, meta);
        ++ingested;
    }
    std::cout << "catalog " << catalog_dir.string() << ": " << store.size()
              << " scenes (" << ingested << " processed this run)\n";
    return kExitOk;
}

int cmd_run(const std::filesystem::path& config_path,
            const std::filesystem::path& patches, const std::filesystem::path& db_dir,
            const std::filesystem::path& out_dir, const std::string& mode_override,
            const std::string& mock_script, const std::optional<std::filesystem::path>& gt_dir,
            int parallelism_override) {
    farmmind::AppConfig config = farmmind::load_app_config(config_path);
    if (!mode_override.empty())
        config.pipeline.mode = farmmind::correction_mode_from_string(mode_override);
    if (parallelism_override > 0)
        config.pipeline.parallelism = parallelism_override;
    std::optional<std::filesystem::path> script_override;
    if (!mock_script.empty())
        script_override = mock_script;
    if (script_override)
        config.mock_script = script_override;

    farmmind::Adapters adapters = farmmind::make_adapters(config, script_override);
    farmmind::PromptLibrary prompts = farmmind::make_prompt_library(config);
    farmmind::SceneStore store(db_dir);

    farmmind::PipelineContext ctx{config.pipeline, prompts, *adapters.rqm,
                                  *adapters.fsm, store};
    farmmind::DatasetReport report = farmmind::run_dataset(
        patches, gt_dir, out_dir, ctx, farmmind::config_snapshot(config));

    int corrected = 0;
    for (const auto& p : report.patches) {
        if (p.ok)
            corrected += p.regions_corrected;
        else
            std::cerr << "patch failed: " << p.image_file << ": " << p.error << "\n";
    }
    std::cout << "processed " << report.patches.size() << " patches, "
              << report.failed << " failed, " << corrected
              << " regions corrected; outputs in " << out_dir.string() << "\n";
    if (!report.metrics.empty())
        std::cout << farmmind::report_to_csv(report.metrics);
    return report.failed == 0 ? kExitOk : kExitPartial;
}

int cmd_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
             const std::string& group_map_path, const std::string& out_dir) {
    std::map<std::string, std::string> group_map;
    if (!group_map_path.empty()) {
        nlohmann::json j =
            nlohmann::json::parse(farmmind::read_file_text(group_map_path));
        for (const auto& [key, value] : j.items())
            group_map[key] = value.get<std::string>();
    }

    std::vector<std::filesystem::path> preds;
    for (const auto& entry : std::filesystem::directory_iterator(pred_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            preds.push_back(entry.path());
    std::sort(preds.begin(), preds.end());
    if (preds.empty())
        throw ConfigError("no prediction masks in " + pred_dir.string());

    std::vector<farmmind::PatchEval> evals;
    for (const auto& pred_path : preds) {
        const auto gt_path = gt_dir / pred_path.filename();
        if (!std::filesystem::exists(gt_path)) {
            std::cerr << "no ground truth for " << pred_path.filename().string()
                      << ", skipping\n";
            continue;
        }
        const std::string patch_id = pred_path.stem().string();
        farmmind::PatchEval eval;
        eval.patch_id = patch_id;
        auto it = group_map.find(patch_id);
        eval.group = it != group_map.end() ? it->second : "all";
        eval.counts = farmmind::confusion(farmmind::read_mask_png(pred_path),
                                          farmmind::read_mask_png(gt_path));
        evals.push_back(std::move(eval));
    }
    if (evals.empty())
        throw ConfigError("no prediction/ground-truth pairs found");

    const auto report = farmmind::aggregate(evals);
    std::cout << farmmind::report_to_csv(report);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        farmmind::write_file_text(std::filesystem::path(out_dir) / "metrics.csv",
                                  farmmind::report_to_csv(report));
        farmmind::write_file_text(std::filesystem::path(out_dir) / "metrics.json",
                                  farmmind::report_to_json(report));
    }
    return kExitOk;
}

int cmd_trace(const std::filesystem::path& trace_path) {
    const farmmind::CorrectionTrace trace =
        farmmind::trace_from_json(farmmind::read_file_text(trace_path));
    std::optional<farmmind::StageTimings> timings;
    std::filesystem::path telemetry = trace_path;
    const std::string name = trace_path.filename().string();
    const std::string suffix = ".trace.json";
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
        telemetry = trace_path.parent_path() /
                    (name.substr(0, name.size() - suffix.size()) + ".telemetry.json");
        if (std::filesystem::exists(telemetry))
            timings = farmmind::telemetry_from_json(farmmind::read_file_text(telemetry));
    }
    std::cout << farmmind::render_trace_human(trace, timings);
    return kExitOk;
}

int cmd_serve(const std::filesystem::path& db_dir, const std::string& host, int port) {
    farmmind::SceneStore store(db_dir);
    std::cout << "serving catalog " << db_dir.string() << " (" << store.size()
              << " scenes) on " << host << ":" << port << "\n";
    farmmind::DbService service(store);
    service.run(host, port);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"farmmind: reasoning-query driven dynamic segmentation pipeline"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Ingest scene images into a catalog");
    std::string ingest_catalog, ingest_scenes;
    ingest->add_option("--catalog", ingest_catalog, "Catalog directory")->required();
    ingest->add_option("--scenes", ingest_scenes,
                       "Directory of scene PNGs with .meta.json/.geo.json sidecars")
        ->required();

    // run
    auto* run = app.add_subcommand("run", "Run the segmentation pipeline on patches");
    std::string run_config, run_patches, run_db, run_out, run_mode, run_script, run_gt;
    int run_parallelism = 0;
    run->add_option("--config", run_config, "Pipeline config JSON")->required();
    run->add_option("--patches", run_patches, "Directory of patch PNGs + JSON sidecars")
        ->required();
    run->add_option("--db", run_db, "Scene catalog directory")->required();
    run->add_option("--out", run_out, "Output directory (masks/, traces/, report/)")
        ->required();
    run->add_option("--mode", run_mode,
                    "Correction mode: full|no-query|temporal-only|enlarge-only");
    run->add_option("--mock-script", run_script,
                    "Scripted-adapter replay file (forces scripted adapters)");
    run->add_option("--gt", run_gt, "Ground-truth mask directory for metrics");
    run->add_option("--parallelism", run_parallelism, "Worker pool size override");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate predicted masks against ground truth");
    std::string eval_pred, eval_gt, eval_groups, eval_out;
    eval->add_option("--pred", eval_pred, "Predicted mask directory")->required();
    eval->add_option("--gt", eval_gt, "Ground-truth mask directory")->required();
    eval->add_option("--group-map", eval_groups,
                     "JSON file mapping patch_id to report group");
    eval->add_option("--out", eval_out, "Report output directory");

    // trace
    auto* trace = app.add_subcommand("trace", "Render a trace file human-readably");
    std::string trace_file;
    trace->add_option("trace_file", trace_file, "Path to a .trace.json file")->required();

    // serve
    auto* serve = app.add_subcommand("serve", "Serve the scene catalog over HTTP");
    std::string serve_db, serve_host = "127.0.0.1";
    int serve_port = 8787;
    serve->add_option("--db", serve_db, "Scene catalog directory")->required();
    serve->add_option("--host", serve_host, "Bind host");
    serve->add_option("--port", serve_port, "Bind port");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest)
            return cmd_ingest(ingest_catalog, ingest_scenes);
        if (*run) {
            std::optional<std::filesystem::path> gt;
            if (!run_gt.empty())
                gt = run_gt;
            return cmd_run(run_config, run_patches, run_db, run_out, run_mode,
                           run_script, gt, run_parallelism);
        }
        if (*eval)
            return cmd_eval(eval_pred, eval_gt, eval_groups, eval_out);
        if (*trace)
            return cmd_trace(trace_file);
        if (*serve)
            return cmd_serve(serve_db, serve_host, serve_port);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
