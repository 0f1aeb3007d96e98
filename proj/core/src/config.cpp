#include "farmmind/config.hpp"

#include <cstdlib>
#include <set>

#include "farmmind/raster_io.hpp"
#include "json.hpp"

namespace farmmind {

namespace {

void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!known.contains(key))
            throw ConfigError("unknown config key '" + key + "' in " + where);
}

AdapterSpec parse_adapter(const nlohmann::json& j, const std::string& where,
                          const std::string& default_key_env) {
    reject_unknown_keys(j,
                        {"kind", "endpoint", "path", "model", "max_tokens", "api_key_env",
                         "timeout_ms", "max_attempts", "backoff_base_ms",
                         "min_interval_ms", "max_concurrent"},
                        where);
    AdapterSpec spec;
    spec.kind = j.value("kind", "scripted");
    if (spec.kind != "http" && spec.kind != "scripted")
        throw ConfigError(where + ".kind must be 'http' or 'scripted'");
    spec.http.endpoint = j.value("endpoint", "");
    spec.http.path = j.value("path", "");
    spec.http.model = j.value("model", "");
    spec.http.max_tokens = j.value("max_tokens", 1024);
    spec.http.timeout_ms = j.value("timeout_ms", 30000);
    spec.http.max_attempts = j.value("max_attempts", 3);
    spec.http.backoff_base_ms = j.value("backoff_base_ms", 200);
    spec.http.min_interval_ms = j.value("min_interval_ms", 0);
    spec.http.max_concurrent = j.value("max_concurrent", 4);
    const std::string key_env = j.value("api_key_env", default_key_env);
    if (const char* key = std::getenv(key_env.c_str()))
        spec.http.api_key = key;
    if (spec.kind == "http" && spec.http.endpoint.empty())
        throw ConfigError(where + ": http adapter requires an endpoint");
    return spec;
}

}  // namespace

AppConfig parse_app_config(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown_keys(j,
                        {"ambiguity", "enlarge_scale", "patch_px", "mode", "parallelism",
                         "annotation_stroke_px", "templates_dir", "mock_script", "rqm",
                         "fsm"},
                        "config");

    AppConfig config;
    if (j.contains("ambiguity")) {
        const auto& a = j["ambiguity"];
        reject_unknown_keys(a, {"threshold", "area_min", "area_increment", "connectivity"},
                            "ambiguity");
        config.pipeline.ambiguity.threshold = a.value("threshold", 1.0);
        config.pipeline.ambiguity.area_min = a.value("area_min", std::int64_t{5000});
        config.pipeline.ambiguity.area_increment =
            a.value("area_increment", std::int64_t{95000});
        const std::string conn = a.value("connectivity", "8");
        if (conn == "4")
            config.pipeline.ambiguity.connectivity = Connectivity::four;
        else if (conn == "8")
            config.pipeline.ambiguity.connectivity = Connectivity::eight;
        else
            throw ConfigError("ambiguity.connectivity must be \"4\" or \"8\"");
    }
    config.pipeline.enlarge_scale = j.value("enlarge_scale", 3.0);
    config.pipeline.patch_px = j.value("patch_px", 512);
    config.pipeline.mode = correction_mode_from_string(j.value("mode", "full"));
    config.pipeline.parallelism = j.value("parallelism", 1);
    config.pipeline.annotation.stroke_px = j.value("annotation_stroke_px", 3);
    if (j.contains("templates_dir") && !j["templates_dir"].is_null())
        config.templates_dir = j["templates_dir"].get<std::string>();
    if (j.contains("mock_script") && !j["mock_script"].is_null())
        config.mock_script = j["mock_script"].get<std::string>();

    config.rqm = parse_adapter(j.value("rqm", nlohmann::json::object()), "rqm",
                               "FARMMIND_RQM_API_KEY");
    config.fsm = parse_adapter(j.value("fsm", nlohmann::json::object()), "fsm",
                               "FARMMIND_FSM_API_KEY");
    config.pipeline.rqm.model = config.rqm.http.model;
    config.pipeline.rqm.max_tokens = config.rqm.http.max_tokens;

    validate_config(config.pipeline);
    return config;
}

AppConfig load_app_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw ConfigError("config file not found: " + path.string());
    return parse_app_config(read_file_text(path));
}

std::string config_snapshot(const AppConfig& config) {
    nlohmann::json j;
    j["ambiguity"] = {
        {"threshold", config.pipeline.ambiguity.threshold},
        {"area_min", config.pipeline.ambiguity.area_min},
        {"area_increment", config.pipeline.ambiguity.area_increment},
        {"connectivity",
         config.pipeline.ambiguity.connectivity == Connectivity::four ? "4" : "8"}};
    j["enlarge_scale"] = config.pipeline.enlarge_scale;
    j["patch_px"] = config.pipeline.patch_px;
    j["mode"] = to_string(config.pipeline.mode);
    j["parallelism"] = config.pipeline.parallelism;
    j["annotation_stroke_px"] = config.pipeline.annotation.stroke_px;
    j["templates_dir"] = config.templates_dir
                             ? nlohmann::json(config.templates_dir->string())
                             : nlohmann::json(nullptr);
    j["mock_script"] = config.mock_script ? nlohmann::json(config.mock_script->string())
                                          : nlohmann::json(nullptr);
    auto adapter_json = [](const AdapterSpec& spec) {
        // api_key deliberately absent: secrets never land in manifests.
        return nlohmann::json{{"kind", spec.kind},
                              {"endpoint", spec.http.endpoint},
                              {"path", spec.http.path},
                              {"model", spec.http.model},
                              {"max_tokens", spec.http.max_tokens},
                              {"timeout_ms", spec.http.timeout_ms},
                              {"max_attempts", spec.http.max_attempts},
                              {"backoff_base_ms", spec.http.backoff_base_ms},
                              {"min_interval_ms", spec.http.min_interval_ms},
                              {"max_concurrent", spec.http.max_concurrent}};
    };
    j["rqm"] = adapter_json(config.rqm);
    j["fsm"] = adapter_json(config.fsm);
    return j.dump();
}

Adapters make_adapters(const AppConfig& config,
                       const std::optional<std::filesystem::path>& mock_script_override) {
    Adapters out;
    std::optional<std::filesystem::path> script_path =
        mock_script_override ? mock_script_override : config.mock_script;
    std::shared_ptr<const MockScript> script;
    if (script_path) {
        if (!std::filesystem::exists(*script_path))
            throw ConfigError("mock script not found: " + script_path->string());
        script = load_mock_script(*script_path);
    }

    const bool force_scripted = mock_script_override.has_value();
    auto need_script = [&](const char* side) {
        if (!script)
            throw ConfigError(std::string(side) +
                              " adapter is scripted but no mock_script is configured");
    };

    if (!force_scripted && config.rqm.kind == "http") {
        out.rqm = make_http_rqm_adapter(config.rqm.http);
    } else {
        need_script("rqm");
        out.rqm = make_scripted_rqm_adapter(script);
    }
    if (!force_scripted && config.fsm.kind == "http") {
        out.fsm = make_http_fsm_adapter(config.fsm.http);
    } else {
        need_script("fsm");
        out.fsm = make_scripted_fsm_adapter(script);
    }
    return out;
}

PromptLibrary make_prompt_library(const AppConfig& config) {
    if (config.templates_dir)
        return PromptLibrary::from_directory(*config.templates_dir);
    return PromptLibrary();
}

}  // namespace farmmind
