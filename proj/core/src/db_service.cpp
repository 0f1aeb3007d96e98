#include "farmmind/db_service.hpp"

#include <thread>

#include "farmmind/base64.hpp"
#include "farmmind/raster_io.hpp"
#include "httplib.h"
#include "json.hpp"

namespace farmmind {

std::string query_spec_to_json(const QuerySpec& spec) {
    nlohmann::json j;
    j["kind"] = to_string(spec.kind);
    j["geo_bbox"] = {spec.geo_bbox.lon_min, spec.geo_bbox.lat_min, spec.geo_bbox.lon_max,
                     spec.geo_bbox.lat_max};
    if (spec.exclude_season)
        j["exclude_season"] = to_string(*spec.exclude_season);
    j["enlarge_scale"] = spec.enlarge_scale;
    j["patch_px"] = spec.requested_patch_px;
    return j.dump();
}

QuerySpec query_spec_from_json(const std::string& body) {
    nlohmann::json j = nlohmann::json::parse(body);
    QuerySpec spec;
    spec.kind = query_kind_from_string(j.at("kind").get<std::string>());
    const auto& b = j.at("geo_bbox");
    if (!b.is_array() || b.size() != 4)
        throw std::invalid_argument("geo_bbox must be [lon_min,lat_min,lon_max,lat_max]");
    spec.geo_bbox = GeoBox{b.at(0).get<double>(), b.at(1).get<double>(),
                           b.at(2).get<double>(), b.at(3).get<double>()};
    if (j.contains("exclude_season") && !j["exclude_season"].is_null())
        spec.exclude_season = season_from_string(j["exclude_season"].get<std::string>());
    spec.enlarge_scale = j.value("enlarge_scale", 3.0);
    spec.requested_patch_px = j.value("patch_px", 512);
    validate_spec(spec);
    return spec;
}

std::string candidates_to_json(const std::vector<CandidateImage>& candidates) {
    nlohmann::json arr = nlohmann::json::array();
    for (const CandidateImage& c : candidates) {
        arr.push_back({{"candidate_id", c.candidate_id},
                       {"season", to_string(c.season)},
                       {"source_scene_id", c.source_scene_id},
                       {"geo",
                        {{"origin_lon", c.geo.origin_lon},
                         {"origin_lat", c.geo.origin_lat},
                         {"px_w_deg", c.geo.px_w_deg},
                         {"px_h_deg", c.geo.px_h_deg}}},
                       {"width", c.pixels.width()},
                       {"height", c.pixels.height()},
                       {"png_b64", base64_encode(encode_png(c.pixels))}});
    }
    return nlohmann::json{{"candidates", arr}}.dump();
}

struct DbService::Impl {
    const SceneStore& store;
    httplib::Server server;
    std::thread thread;

    explicit Impl(const SceneStore& s) : store(s) {
        server.Post("/query", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                const QuerySpec spec = query_spec_from_json(req.body);
                res.set_content(candidates_to_json(store.query(spec)),
                                "application/json");
            } catch (const std::invalid_argument& e) {
                res.status = 400;
                res.set_content(nlohmann::json{{"error", e.what()}}.dump(),
                                "application/json");
            } catch (const std::exception& e) {
                res.status = 500;
                res.set_content(nlohmann::json{{"error", e.what()}}.dump(),
                                "application/json");
            }
        });
        server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"status\":\"ok\"}", "application/json");
        });
    }
};

DbService::DbService(const SceneStore& store) : impl_(std::make_unique<Impl>(store)) {}

DbService::~DbService() { stop(); }

int DbService::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
        if (bound <= 0)
            throw std::runtime_error("db service failed to bind a port");
    } else if (!impl_->server.bind_to_port(host, port)) {
        throw std::runtime_error("db service failed to bind port " + std::to_string(port));
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void DbService::run(const std::string& host, int port) {
    if (!impl_->server.listen(host, port))
        throw std::runtime_error("db service failed to listen on " + host + ":" +
                                 std::to_string(port));
}

void DbService::stop() {
    if (!impl_)
        return;
    impl_->server.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
}

}  // namespace farmmind
