#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "farmmind/image.hpp"
#include "farmmind/raster.hpp"

namespace farmmind {

/// Routing/trace metadata for one adapter call. HTTP adapters ignore it;
/// scripted adapters key their replies on it.
struct CallMeta {
    std::string patch_id;
    int region_id = 0;  // 0 when the call is not tied to a region
    std::string stage;  // base | attribution | selection | verdict | correction
};

struct RqmParams {
    std::string model;
    int max_tokens = 1024;
};

class AdapterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class TransportError : public AdapterError {
public:
    using AdapterError::AdapterError;
};
class TimeoutError : public AdapterError {
public:
    using AdapterError::AdapterError;
};
class HttpStatusError : public AdapterError {
public:
    HttpStatusError(int status, const std::string& message)
        : AdapterError(message), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};
class SchemaError : public AdapterError {
public:
    using AdapterError::AdapterError;
};
class ScriptError : public AdapterError {
public:
    using AdapterError::AdapterError;
};

/// Reasoning-query model boundary (a remote multimodal LLM or a mock).
/// Stateless across calls from the pipeline's viewpoint.
class RqmAdapter {
public:
    virtual ~RqmAdapter() = default;
    virtual std::string complete(const std::vector<ImageRgb>& images,
                                 const std::string& prompt, const RqmParams& params,
                                 const CallMeta& meta) = 0;
    virtual std::string identity() const = 0;
};

struct FsmResult {
    BinaryMask mask;
    ConfidenceMap confidence;
};

/// Foundation segmentation model boundary. Returned rasters always match
/// the input image dimensions.
class FsmAdapter {
public:
    virtual ~FsmAdapter() = default;
    virtual FsmResult segment(const ImageRgb& image, std::optional<Bbox> box_prompt,
                              const CallMeta& meta) = 0;
    virtual std::string identity() const = 0;
};

struct HttpAdapterConfig {
    std::string endpoint;  // scheme://host:port
    std::string path;      // defaults: /v1/complete (RQM), /v1/segment (FSM)
    std::string model;     // RQM request field
    int max_tokens = 1024;
    std::string api_key;   // sent as a bearer token when non-empty
    int timeout_ms = 30000;
    int max_attempts = 3;
    int backoff_base_ms = 200;  // doubles per retry
    int min_interval_ms = 0;    // rate limiting between request starts
    int max_concurrent = 4;     // in-flight cap
};

/// Wire: POST {model, prompt, images:[base64 PNG], max_tokens} -> {text}.
std::unique_ptr<RqmAdapter> make_http_rqm_adapter(const HttpAdapterConfig& config);

/// Wire: POST {image: base64 PNG, box:[x0,y0,x1,y1]?} ->
/// {mask_rle:{width,height,runs}, confidence_b64_f32le}.
std::unique_ptr<FsmAdapter> make_http_fsm_adapter(const HttpAdapterConfig& config);

/// Deterministic replay adapters: replies come from a checked-in script
/// keyed by (stage, region_id) with an optional patch_id refinement. A
/// missing entry is an explicit ScriptError, never a guessed reply.
class MockScript;

std::shared_ptr<const MockScript> load_mock_script(const std::filesystem::path& path);
std::shared_ptr<const MockScript> parse_mock_script(const std::string& json_text);

std::unique_ptr<RqmAdapter> make_scripted_rqm_adapter(
    std::shared_ptr<const MockScript> script);
std::unique_ptr<FsmAdapter> make_scripted_fsm_adapter(
    std::shared_ptr<const MockScript> script);

}  // namespace farmmind
