#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <mutex>
#include <thread>

#include "farmmind/orchestrator.hpp"
#include "farmmind/raster_io.hpp"
#include "json.hpp"

namespace farmmind {

namespace {

std::vector<std::filesystem::path> list_patch_images(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw ConfigError("patch directory does not exist: " + dir.string());
    std::vector<std::filesystem::path> images;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file())
            continue;
        if (entry.path().extension() == ".png")
            images.push_back(entry.path());
    }
    std::sort(images.begin(), images.end());
    return images;
}

PatchOutcome run_one(const std::filesystem::path& image_path,
                     const std::optional<std::filesystem::path>& gt_dir,
                     const std::filesystem::path& out_dir, const PipelineContext& ctx) {
    PatchOutcome outcome;
    outcome.image_file = image_path.filename().string();
    try {
        const Patch patch = load_patch(image_path);
        outcome.patch_id = patch.meta.patch_id;
        outcome.group = patch.meta.province.empty() ? "all" : patch.meta.province;

        SegmentationResult result = run_patch(patch, ctx);

        const auto mask_path = out_dir / "masks" / (patch.meta.patch_id + ".png");
        const auto trace_path =
            out_dir / "traces" / (patch.meta.patch_id + ".trace.json");
        const auto telemetry_path =
            out_dir / "traces" / (patch.meta.patch_id + ".telemetry.json");
        write_mask_png(mask_path, result.final_mask);
        write_file_text(trace_path, trace_to_json(result.trace));
        write_file_text(telemetry_path, telemetry_to_json(result.trace));
        outcome.mask_path = mask_path.string();
        outcome.trace_path = trace_path.string();
        for (const RegionTrace& r : result.trace.regions)
            if (r.applied != AppliedOp::skip)
                ++outcome.regions_corrected;

        if (gt_dir) {
            const auto gt_path = *gt_dir / image_path.filename();
            if (std::filesystem::exists(gt_path)) {
                const BinaryMask gt = read_mask_png(gt_path);
                outcome.counts = confusion(result.final_mask, gt);
            }
        }
        outcome.ok = true;
    } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.error = e.what();
    }
    return outcome;
}

}  // namespace

DatasetReport run_dataset(const std::filesystem::path& patch_dir,
                          const std::optional<std::filesystem::path>& gt_dir,
                          const std::filesystem::path& out_dir,
                          const PipelineContext& ctx,
                          const std::string& config_snapshot_json) {
    validate_config(ctx.config);
    if (gt_dir && !std::filesystem::is_directory(*gt_dir))
        throw ConfigError("ground-truth directory does not exist: " + gt_dir->string());

    const std::vector<std::filesystem::path> images = list_patch_images(patch_dir);
    std::filesystem::create_directories(out_dir / "masks");
    std::filesystem::create_directories(out_dir / "traces");
    std::filesystem::create_directories(out_dir / "report");

    DatasetReport report;
    report.patches.resize(images.size());

    // Bounded worker pool; patches are independent and results land in
    // input order, so a parallel run is result-identical to a serial one.
    const int workers =
        std::max(1, std::min<int>(ctx.config.parallelism,
                                  static_cast<int>(images.size() > 0 ? images.size() : 1)));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= images.size())
                break;
            report.patches[i] = run_one(images[i], gt_dir, out_dir, ctx);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i)
            pool.emplace_back(work);
        for (std::thread& t : pool)
            t.join();
    }

    std::vector<PatchEval> evals;
    for (const PatchOutcome& p : report.patches) {
        if (!p.ok)
            ++report.failed;
        if (p.counts)
            evals.push_back(PatchEval{p.patch_id, p.group, *p.counts});
    }
    if (!evals.empty()) {
        report.metrics = aggregate(evals);
        write_file_text(out_dir / "report" / "metrics.csv", report_to_csv(report.metrics));
        write_file_text(out_dir / "report" / "metrics.json",
                        report_to_json(report.metrics));
    }

    // Run manifest: everything needed to reproduce the run bit-exactly with
    // the same adapters/script.
    nlohmann::json manifest;
    manifest["timestamp_utc"] = []() {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::tm tm_utc{};
        gmtime_r(&t, &tm_utc);
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
        return std::string(buf);
    }();
    manifest["mode"] = to_string(ctx.config.mode);
    manifest["patch_dir"] = patch_dir.string();
    manifest["gt_dir"] = gt_dir ? nlohmann::json(gt_dir->string()) : nlohmann::json(nullptr);
    manifest["adapters"] = {{"rqm", ctx.rqm.identity()}, {"fsm", ctx.fsm.identity()}};
    manifest["config"] = nlohmann::json::parse(config_snapshot_json);
    nlohmann::json patches = nlohmann::json::array();
    for (const PatchOutcome& p : report.patches) {
        patches.push_back({{"patch_id", p.patch_id},
                           {"image_file", p.image_file},
                           {"ok", p.ok},
                           {"error", p.error},
                           {"mask", p.mask_path},
                           {"trace", p.trace_path},
                           {"group", p.group},
                           {"regions_corrected", p.regions_corrected}});
    }
    manifest["patches"] = patches;
    manifest["failed"] = report.failed;
    write_file_text(out_dir / "manifest.json", manifest.dump(2));

    return report;
}

}  // namespace farmmind
