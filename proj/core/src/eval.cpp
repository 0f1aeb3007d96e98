#include "farmmind/eval.hpp"

#include <sstream>

#include "json.hpp"

namespace farmmind {

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.width() != gt.width() || pred.height() != gt.height())
        throw std::invalid_argument("confusion: mask dimensions mismatch");
    validate_binary(pred);
    validate_binary(gt);
    ConfusionCounts c;
    auto vp = pred.values();
    auto vg = gt.values();
    for (std::size_t i = 0; i < vp.size(); ++i) {
        if (vg[i]) {
            if (vp[i])
                ++c.tp;
            else
                ++c.fn;
        } else {
            if (vp[i])
                ++c.fp;
            else
                ++c.tn;
        }
    }
    return c;
}

namespace {

MetricValue ratio(std::int64_t num, std::int64_t den) {
    if (den == 0)
        return MetricValue::undefined();
    return MetricValue::of(static_cast<double>(num) / static_cast<double>(den));
}

MetricValue mean2(MetricValue a, MetricValue b) {
    if (!a.defined || !b.defined)
        return MetricValue::undefined();
    return MetricValue::of(0.5 * (a.value + b.value));
}

}  // namespace

Metrics metrics(const ConfusionCounts& c) {
    Metrics m;

    const MetricValue recall_fg = ratio(c.tp, c.tp + c.fn);
    const MetricValue recall_bg = ratio(c.tn, c.tn + c.fp);
    m.mean_accuracy = mean2(recall_fg, recall_bg);

    const MetricValue iou_fg = ratio(c.tp, c.tp + c.fp + c.fn);
    const MetricValue iou_bg = ratio(c.tn, c.tn + c.fn + c.fp);
    m.mean_iou = mean2(iou_fg, iou_bg);

    m.recall = recall_fg;

    const MetricValue precision_fg = ratio(c.tp, c.tp + c.fp);
    if (precision_fg.defined && recall_fg.defined) {
        const double sum = precision_fg.value + recall_fg.value;
        m.f1 = sum == 0.0
                   ? MetricValue::undefined()
                   : MetricValue::of(2.0 * precision_fg.value * recall_fg.value / sum);
    } else {
        m.f1 = MetricValue::undefined();
    }
    return m;
}

std::vector<GroupReport> aggregate(const std::vector<PatchEval>& per_patch) {
    std::map<std::string, GroupReport> groups;
    ConfusionCounts overall;
    std::size_t overall_patches = 0;
    for (const PatchEval& p : per_patch) {
        GroupReport& g = groups[p.group];
        g.group = p.group;
        g.counts += p.counts;
        ++g.patch_count;
        overall += p.counts;
        ++overall_patches;
    }
    std::vector<GroupReport> out;
    for (auto& [name, g] : groups) {
        g.metrics = metrics(g.counts);
        out.push_back(g);
    }
    GroupReport total;
    total.group = "overall";
    total.counts = overall;
    total.metrics = metrics(overall);
    total.patch_count = overall_patches;
    out.push_back(total);
    return out;
}

namespace {

std::string metric_cell(const MetricValue& v) {
    if (!v.defined)
        return "undefined";
    std::ostringstream out;
    out.precision(6);
    out << std::fixed << v.value;
    return out.str();
}

nlohmann::json metric_json(const MetricValue& v) {
    if (!v.defined)
        return nullptr;
    return v.value;
}

}  // namespace

std::string report_to_csv(const std::vector<GroupReport>& report) {
    std::ostringstream out;
    out << "group,patches,mAcc,mIoU,F1,Recall,tp,fp,fn,tn\n";
    for (const GroupReport& g : report) {
        out << g.group << ',' << g.patch_count << ',' << metric_cell(g.metrics.mean_accuracy)
            << ',' << metric_cell(g.metrics.mean_iou) << ',' << metric_cell(g.metrics.f1)
            << ',' << metric_cell(g.metrics.recall) << ',' << g.counts.tp << ','
            << g.counts.fp << ',' << g.counts.fn << ',' << g.counts.tn << '\n';
    }
    return out.str();
}

std::string report_to_json(const std::vector<GroupReport>& report) {
    nlohmann::json arr = nlohmann::json::array();
    for (const GroupReport& g : report) {
        arr.push_back({{"group", g.group},
                       {"patches", g.patch_count},
                       {"mAcc", metric_json(g.metrics.mean_accuracy)},
                       {"mIoU", metric_json(g.metrics.mean_iou)},
                       {"F1", metric_json(g.metrics.f1)},
                       {"Recall", metric_json(g.metrics.recall)},
                       {"tp", g.counts.tp},
                       {"fp", g.counts.fp},
                       {"fn", g.counts.fn},
                       {"tn", g.counts.tn}});
    }
    return arr.dump(2);
}

}  // namespace farmmind
