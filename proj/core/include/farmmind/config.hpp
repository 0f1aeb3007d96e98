#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "farmmind/adapters.hpp"
#include "farmmind/orchestrator.hpp"

namespace farmmind {

struct AdapterSpec {
    std::string kind = "scripted";  // "http" | "scripted"
    HttpAdapterConfig http;
};

/// Fully resolved run configuration: pipeline parameters plus adapter
/// wiring. Secrets come from the environment (api_key_env), never from the
/// file itself.
struct AppConfig {
    PipelineConfig pipeline;
    AdapterSpec rqm;
    AdapterSpec fsm;
    std::optional<std::filesystem::path> templates_dir;
    std::optional<std::filesystem::path> mock_script;  // for scripted adapters
};

/// Parses the JSON config file; unknown keys are rejected so typos abort
/// the run as a config error.
AppConfig load_app_config(const std::filesystem::path& path);
AppConfig parse_app_config(const std::string& json_text);

/// The effective config serialized back to JSON for the run manifest.
std::string config_snapshot(const AppConfig& config);

struct Adapters {
    std::unique_ptr<RqmAdapter> rqm;
    std::unique_ptr<FsmAdapter> fsm;
};

/// Instantiates the configured adapters; `mock_script_override` switches
/// both sides to scripted replay regardless of the configured kinds.
Adapters make_adapters(const AppConfig& config,
                       const std::optional<std::filesystem::path>& mock_script_override);

PromptLibrary make_prompt_library(const AppConfig& config);

}  // namespace farmmind
