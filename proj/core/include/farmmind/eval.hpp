#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "farmmind/raster.hpp"

namespace farmmind {

/// Pixel confusion counts under the two-class farmland/background scheme;
/// foreground (1) is farmland.
struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;

    std::int64_t total() const { return tp + fp + fn + tn; }

    ConfusionCounts& operator+=(const ConfusionCounts& other) {
        tp += other.tp;
        fp += other.fp;
        fn += other.fn;
        tn += other.tn;
        return *this;
    }
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

/// A metric value with an explicit undefined flag instead of NaN for
/// division-by-zero cases.
struct MetricValue {
    double value = 0.0;
    bool defined = false;

    static MetricValue undefined() { return {0.0, false}; }
    static MetricValue of(double v) { return {v, true}; }
};

/// mAcc and mIoU are two-class means (farmland + background); Recall and F1
/// are farmland-only.
struct Metrics {
    MetricValue mean_accuracy;
    MetricValue mean_iou;
    MetricValue f1;
    MetricValue recall;
};

Metrics metrics(const ConfusionCounts& c);

struct PatchEval {
    std::string patch_id;
    std::string group;  // grouping key from patch metadata, e.g. province
    ConfusionCounts counts;
};

struct GroupReport {
    std::string group;
    ConfusionCounts counts;
    Metrics metrics;
    std::size_t patch_count = 0;
};

/// Micro-aggregation: confusion counts are summed per group (and overall,
/// under the group name "overall"), then metrics are computed from the sums.
std::vector<GroupReport> aggregate(const std::vector<PatchEval>& per_patch);

std::string report_to_csv(const std::vector<GroupReport>& report);
std::string report_to_json(const std::vector<GroupReport>& report);

}  // namespace farmmind
