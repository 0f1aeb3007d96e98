#include <algorithm>
#include <map>
#include <sstream>

#include "farmmind/adapters.hpp"
#include "farmmind/raster_io.hpp"
#include "farmmind/rle.hpp"
#include "json.hpp"

namespace farmmind {

namespace {

std::string key_of(const std::string& stage, int region) {
    return stage + "#" + std::to_string(region);
}

Bbox box_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4)
        throw ScriptError("box must be [x0,y0,x1,y1]");
    return Bbox{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(),
                j.at(3).get<int>()};
}

}  // namespace

/// Parsed mock script. RQM replies are keyed by (stage, region_id) with an
/// optional patch_id refinement; FSM entries additionally support synthetic
/// mask/confidence specs so fixtures stay hand-authorable.
class MockScript {
public:
    struct RqmEntry {
        std::string patch;  // empty = any patch
        std::string text;
    };

    struct FsmEntry {
        std::string patch;
        bool fill_box = false;
        std::optional<nlohmann::json> mask_spec;
        std::optional<nlohmann::json> confidence_spec;
    };

    static MockScript parse(const std::string& text) {
        MockScript script;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ScriptError(std::string("mock script is not valid JSON: ") + e.what());
        }
        for (const auto& entry : j.value("rqm", nlohmann::json::array())) {
            RqmEntry e;
            e.patch = entry.value("patch", "");
            e.text = entry.at("text").get<std::string>();
            const std::string key = key_of(entry.at("stage").get<std::string>(),
                                           entry.value("region", 0));
            script.rqm_[key].push_back(std::move(e));
        }
        for (const auto& entry : j.value("fsm", nlohmann::json::array())) {
            FsmEntry e;
            e.patch = entry.value("patch", "");
            e.fill_box = entry.value("fill_box", false);
            if (entry.contains("mask"))
                e.mask_spec = entry["mask"];
            if (entry.contains("confidence"))
                e.confidence_spec = entry["confidence"];
            if (!e.fill_box && !e.mask_spec)
                throw ScriptError("fsm script entry needs either 'mask' or 'fill_box'");
            const std::string key = key_of(entry.at("stage").get<std::string>(),
                                           entry.value("region", 0));
            script.fsm_[key].push_back(std::move(e));
        }
        return script;
    }

    const RqmEntry& find_rqm(const CallMeta& meta) const {
        return find_entry(rqm_, meta, "rqm");
    }
    const FsmEntry& find_fsm(const CallMeta& meta) const {
        return find_entry(fsm_, meta, "fsm");
    }

private:
    template <typename T>
    static const T& find_entry(const std::map<std::string, std::vector<T>>& table,
                               const CallMeta& meta, const char* side) {
        auto it = table.find(key_of(meta.stage, meta.region_id));
        if (it != table.end()) {
            const T* wildcard = nullptr;
            for (const T& e : it->second) {
                if (e.patch == meta.patch_id)
                    return e;
                if (e.patch.empty())
                    wildcard = &e;
            }
            if (wildcard)
                return *wildcard;
        }
        std::ostringstream msg;
        msg << "mock script has no " << side << " entry for stage=" << meta.stage
            << " region=" << meta.region_id << " patch=" << meta.patch_id;
        throw ScriptError(msg.str());
    }

    std::map<std::string, std::vector<RqmEntry>> rqm_;
    std::map<std::string, std::vector<FsmEntry>> fsm_;
};

namespace {

BinaryMask mask_from_spec(const nlohmann::json& spec, int expect_w, int expect_h) {
    const int w = spec.value("width", expect_w);
    const int h = spec.value("height", expect_h);
    if (w != expect_w || h != expect_h)
        throw ScriptError("scripted mask dims do not match the segmented image");
    if (spec.contains("runs"))
        return rle_decode(spec.at("runs").get<std::vector<std::int64_t>>(), w, h);
    BinaryMask mask(w, h, static_cast<std::uint8_t>(spec.value("background", 0)));
    for (const auto& box_spec : spec.value("boxes", nlohmann::json::array())) {
        const Bbox box = box_from_json(box_spec.at("box"));
        require_box_in_bounds(box, w, h, "scripted mask box");
        const auto v = static_cast<std::uint8_t>(box_spec.value("value", 1));
        for (int y = box.y_min; y < box.y_max; ++y)
            for (int x = box.x_min; x < box.x_max; ++x)
                mask.set(x, y, v);
    }
    validate_binary(mask);
    return mask;
}

ConfidenceMap confidence_from_spec(const nlohmann::json& spec, int w, int h) {
    ConfidenceMap conf(w, h, spec.value("background", 4.0f));
    for (const auto& box_spec : spec.value("boxes", nlohmann::json::array())) {
        const Bbox box = box_from_json(box_spec.at("box"));
        require_box_in_bounds(box, w, h, "scripted confidence box");
        const float v = box_spec.value("value", 0.0f);
        for (int y = box.y_min; y < box.y_max; ++y)
            for (int x = box.x_min; x < box.x_max; ++x)
                conf.set(x, y, v);
    }
    return conf;
}

ConfidenceMap confidence_from_mask(const BinaryMask& mask) {
    ConfidenceMap conf(mask.width(), mask.height());
    auto src = mask.values();
    auto dst = conf.values();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = src[i] ? 3.0f : -3.0f;
    return conf;
}

class ScriptedRqmAdapter final : public RqmAdapter {
public:
    explicit ScriptedRqmAdapter(std::shared_ptr<const MockScript> script)
        : script_(std::move(script)) {}

    std::string complete(const std::vector<ImageRgb>&, const std::string&,
                         const RqmParams&, const CallMeta& meta) override {
        return script_->find_rqm(meta).text;
    }

    std::string identity() const override { return "scripted-rqm"; }

private:
    std::shared_ptr<const MockScript> script_;
};

class ScriptedFsmAdapter final : public FsmAdapter {
public:
    explicit ScriptedFsmAdapter(std::shared_ptr<const MockScript> script)
        : script_(std::move(script)) {}

    FsmResult segment(const ImageRgb& image, std::optional<Bbox> box_prompt,
                      const CallMeta& meta) override {
        const MockScript::FsmEntry& entry = script_->find_fsm(meta);
        BinaryMask mask(image.width(), image.height(), 0);
        if (entry.fill_box) {
            Bbox box = box_prompt.value_or(
                Bbox{0, 0, image.width(), image.height()});
            box.x_min = std::max(box.x_min, 0);
            box.y_min = std::max(box.y_min, 0);
            box.x_max = std::min(box.x_max, image.width());
            box.y_max = std::min(box.y_max, image.height());
            for (int y = box.y_min; y < box.y_max; ++y)
                for (int x = box.x_min; x < box.x_max; ++x)
                    mask.set(x, y, 1);
        } else {
            mask = mask_from_spec(*entry.mask_spec, image.width(), image.height());
        }
        ConfidenceMap conf =
            entry.confidence_spec
                ? confidence_from_spec(*entry.confidence_spec, image.width(), image.height())
                : confidence_from_mask(mask);
        return FsmResult{std::move(mask), std::move(conf)};
    }

    std::string identity() const override { return "scripted-fsm"; }

private:
    std::shared_ptr<const MockScript> script_;
};

}  // namespace

std::shared_ptr<const MockScript> load_mock_script(const std::filesystem::path& path) {
    return std::make_shared<const MockScript>(MockScript::parse(read_file_text(path)));
}

std::shared_ptr<const MockScript> parse_mock_script(const std::string& json_text) {
    return std::make_shared<const MockScript>(MockScript::parse(json_text));
}

std::unique_ptr<RqmAdapter> make_scripted_rqm_adapter(
    std::shared_ptr<const MockScript> script) {
    return std::make_unique<ScriptedRqmAdapter>(std::move(script));
}

std::unique_ptr<FsmAdapter> make_scripted_fsm_adapter(
    std::shared_ptr<const MockScript> script) {
    return std::make_unique<ScriptedFsmAdapter>(std::move(script));
}

}  // namespace farmmind
