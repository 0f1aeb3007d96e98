#include <chrono>
#include <condition_variable>
#include <cstring>
#include <mutex>
#include <thread>

#include "farmmind/adapters.hpp"
#include "farmmind/base64.hpp"
#include "farmmind/raster_io.hpp"
#include "farmmind/rle.hpp"
#include "httplib.h"
#include "json.hpp"

namespace farmmind {

namespace {

// Bounds in-flight requests and enforces a minimum gap between request
// starts, shared across threads using one adapter instance.
class RequestGate {
public:
    RequestGate(int max_concurrent, int min_interval_ms)
        : max_concurrent_(max_concurrent > 0 ? max_concurrent : 1),
          min_interval_(std::chrono::milliseconds(min_interval_ms)) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return in_flight_ < max_concurrent_; });
        ++in_flight_;
        if (min_interval_.count() > 0) {
            const auto now = std::chrono::steady_clock::now();
            const auto start = std::max(now, next_start_);
            next_start_ = start + min_interval_;
            if (start > now) {
                lock.unlock();
                std::this_thread::sleep_until(start);
                return;
            }
        }
    }

    void release() {
        {
            std::lock_guard lock(mutex_);
            --in_flight_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int in_flight_ = 0;
    int max_concurrent_;
    std::chrono::milliseconds min_interval_;
    std::chrono::steady_clock::time_point next_start_{};
};

struct GateGuard {
    RequestGate& gate;
    explicit GateGuard(RequestGate& g) : gate(g) { gate.acquire(); }
    ~GateGuard() { gate.release(); }
};

bool is_timeout(httplib::Error err) {
    return err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
           err == httplib::Error::Write;
}

class HttpClientBase {
public:
    explicit HttpClientBase(HttpAdapterConfig config)
        : config_(std::move(config)),
          gate_(config_.max_concurrent, config_.min_interval_ms) {
        if (config_.endpoint.empty())
            throw std::invalid_argument("http adapter endpoint must be set");
        if (config_.max_attempts < 1)
            throw std::invalid_argument("http adapter max_attempts must be >= 1");
    }

    /// POSTs the body, retrying transport failures, timeouts and 5xx with
    /// exponential backoff. 4xx and schema problems are not retried.
    nlohmann::json post_json(const nlohmann::json& body) {
        std::string last_error;
        for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
            if (attempt > 1) {
                const auto delay = std::chrono::milliseconds(
                    config_.backoff_base_ms << (attempt - 2));
                std::this_thread::sleep_for(delay);
            }
            GateGuard guard(gate_);
            httplib::Client client(config_.endpoint);
            client.set_connection_timeout(std::chrono::milliseconds(config_.timeout_ms));
            client.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
            client.set_write_timeout(std::chrono::milliseconds(config_.timeout_ms));
            if (!config_.api_key.empty())
                client.set_bearer_token_auth(config_.api_key);

            auto res = client.Post(config_.path, body.dump(), "application/json");
            if (!res) {
                const auto err = res.error();
                last_error = httplib::to_string(err);
                if (attempt == config_.max_attempts) {
                    if (is_timeout(err))
                        throw TimeoutError("request timed out: " + last_error);
                    throw TransportError("transport failure: " + last_error);
                }
                continue;
            }
            if (res->status >= 500) {
                last_error = "http status " + std::to_string(res->status);
                if (attempt == config_.max_attempts)
                    throw HttpStatusError(res->status, last_error);
                continue;
            }
            if (res->status < 200 || res->status >= 300)
                throw HttpStatusError(res->status,
                                      "http status " + std::to_string(res->status));
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw SchemaError(std::string("response is not valid JSON: ") + e.what());
            }
        }
        throw TransportError("transport failure: " + last_error);
    }

protected:
    HttpAdapterConfig config_;

private:
    RequestGate gate_;
};

class HttpRqmAdapter final : public RqmAdapter, private HttpClientBase {
public:
    explicit HttpRqmAdapter(HttpAdapterConfig config) : HttpClientBase(std::move(config)) {
        if (config_.path.empty())
            config_.path = "/v1/complete";
    }

    std::string complete(const std::vector<ImageRgb>& images, const std::string& prompt,
                         const RqmParams& params, const CallMeta&) override {
        nlohmann::json imgs = nlohmann::json::array();
        for (const ImageRgb& img : images)
            imgs.push_back(base64_encode(encode_png(img)));
        nlohmann::json body = {{"model", params.model.empty() ? config_.model : params.model},
                               {"prompt", prompt},
                               {"images", imgs},
                               {"max_tokens", params.max_tokens}};
        nlohmann::json reply = post_json(body);
        if (!reply.contains("text") || !reply["text"].is_string())
            throw SchemaError("completion reply missing string field 'text'");
        return reply["text"].get<std::string>();
    }

    std::string identity() const override {
        return "http-rqm:" + config_.endpoint + config_.path +
               (config_.model.empty() ? "" : "#" + config_.model);
    }
};

class HttpFsmAdapter final : public FsmAdapter, private HttpClientBase {
public:
    explicit HttpFsmAdapter(HttpAdapterConfig config) : HttpClientBase(std::move(config)) {
        if (config_.path.empty())
            config_.path = "/v1/segment";
    }

    FsmResult segment(const ImageRgb& image, std::optional<Bbox> box_prompt,
                      const CallMeta&) override {
        nlohmann::json body = {{"image", base64_encode(encode_png(image))}};
        if (box_prompt)
            body["box"] = {box_prompt->x_min, box_prompt->y_min, box_prompt->x_max,
                           box_prompt->y_max};
        nlohmann::json reply = post_json(body);

        if (!reply.contains("mask_rle") || !reply["mask_rle"].is_object())
            throw SchemaError("segment reply missing object field 'mask_rle'");
        const auto& mr = reply["mask_rle"];
        BinaryMask mask;
        try {
            mask = rle_decode(mr.at("runs").get<std::vector<std::int64_t>>(),
                              mr.at("width").get<int>(), mr.at("height").get<int>());
        } catch (const std::exception& e) {
            throw SchemaError(std::string("bad mask_rle: ") + e.what());
        }
        if (mask.width() != image.width() || mask.height() != image.height())
            throw SchemaError("segment mask dims do not match input image");

        if (!reply.contains("confidence_b64_f32le") ||
            !reply["confidence_b64_f32le"].is_string())
            throw SchemaError("segment reply missing 'confidence_b64_f32le'");
        std::vector<std::uint8_t> raw;
        try {
            raw = base64_decode(reply["confidence_b64_f32le"].get<std::string>());
        } catch (const std::exception& e) {
            throw SchemaError(std::string("bad confidence base64: ") + e.what());
        }
        const std::size_t n = static_cast<std::size_t>(image.width()) * image.height();
        if (raw.size() != n * 4)
            throw SchemaError("confidence byte count does not match image dims");
        std::vector<float> vals(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t u = static_cast<std::uint32_t>(raw[4 * i]) |
                              (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                              (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                              (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
            float f;
            std::memcpy(&f, &u, 4);
            vals[i] = f;
        }
        ConfidenceMap conf(image.width(), image.height(), std::move(vals));
        try {
            validate_confidence(conf);
        } catch (const std::exception& e) {
            throw SchemaError(std::string("bad confidence values: ") + e.what());
        }
        return FsmResult{std::move(mask), std::move(conf)};
    }

    std::string identity() const override {
        return "http-fsm:" + config_.endpoint + config_.path;
    }
};

}  // namespace

std::unique_ptr<RqmAdapter> make_http_rqm_adapter(const HttpAdapterConfig& config) {
    return std::make_unique<HttpRqmAdapter>(config);
}

std::unique_ptr<FsmAdapter> make_http_fsm_adapter(const HttpAdapterConfig& config) {
    return std::make_unique<HttpFsmAdapter>(config);
}

}  // namespace farmmind
