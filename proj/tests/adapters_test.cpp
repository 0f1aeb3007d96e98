#include <atomic>
#include <random>

#include "doctest.h"
#include "farmmind/adapters.hpp"
#include "farmmind/base64.hpp"
#include "farmmind/raster_io.hpp"
#include "farmmind/rle.hpp"
#include "httplib.h"
#include "json.hpp"
#include "support/oracles.hpp"

using namespace farmmind;
using namespace farmmind::testing;

TEST_CASE("base64 round-trips arbitrary bytes") {
    std::mt19937 rng(8);
    std::uniform_int_distribution<int> len(0, 300);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int round = 0; round < 60; ++round) {
        std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len(rng)));
        for (auto& b : bytes)
            b = static_cast<std::uint8_t>(byte(rng));
        CHECK(base64_decode(base64_encode(bytes)) == bytes);
    }
    CHECK(base64_encode(std::vector<std::uint8_t>{}) == "");
    CHECK_THROWS_AS(base64_decode("abc"), std::invalid_argument);
    CHECK_THROWS_AS(base64_decode("a=bc"), std::invalid_argument);
    CHECK_THROWS_AS(base64_decode("????"), std::invalid_argument);
}

TEST_CASE("rle codec: decode(encode(mask)) is the identity") {
    std::mt19937 rng(77);
    for (int round = 0; round < 40; ++round) {
        BinaryMask mask = random_mask(rng, 1 + round % 17, 1 + (round * 3) % 13,
                                      0.1 * (round % 10));
        const auto runs = rle_encode(mask);
        CHECK(rle_decode(runs, mask.width(), mask.height()) == mask);
        // Canonical form: re-encoding the decoded mask reproduces the runs.
        CHECK(rle_encode(rle_decode(runs, mask.width(), mask.height())) == runs);
    }
}

TEST_CASE("rle codec rejects malformed runs") {
    CHECK_THROWS_AS(rle_decode({3, 2}, 2, 2), std::invalid_argument);    // sum != 4
    CHECK_THROWS_AS(rle_decode({2, 0, 2}, 2, 2), std::invalid_argument);  // inner zero
    CHECK_THROWS_AS(rle_decode({-1, 5}, 2, 2), std::invalid_argument);
    CHECK(rle_decode({0, 4}, 2, 2) == BinaryMask(2, 2, 1));  // leading zero run
}

namespace {

struct TestServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    explicit TestServer() = default;
    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~TestServer() {
        server.stop();
        if (thread.joinable())
            thread.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }
};

HttpAdapterConfig fast_config(const std::string& endpoint) {
    HttpAdapterConfig cfg;
    cfg.endpoint = endpoint;
    cfg.timeout_ms = 2000;
    cfg.max_attempts = 3;
    cfg.backoff_base_ms = 1;
    return cfg;
}

}  // namespace

TEST_CASE("http rqm adapter round-trips the canned reply and request fields") {
    TestServer ts;
    nlohmann::json seen;
    ts.server.Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
        seen = nlohmann::json::parse(req.body);
        res.set_content(nlohmann::json{{"text", "verbatim canned body"}}.dump(),
                        "application/json");
    });
    ts.start();

    auto adapter = make_http_rqm_adapter(fast_config(ts.endpoint()));
    RqmParams params{"qwen-vl-max", 256};
    std::vector<ImageRgb> images{ImageRgb(4, 4, 9, 9, 9)};
    const std::string text = adapter->complete(images, "hello prompt", params, {});
    CHECK(text == "verbatim canned body");
    CHECK(seen.at("model") == "qwen-vl-max");
    CHECK(seen.at("prompt") == "hello prompt");
    CHECK(seen.at("max_tokens") == 256);
    REQUIRE(seen.at("images").size() == 1);
    const auto png = base64_decode(seen["images"][0].get<std::string>());
    CHECK(decode_png(png) == ImageRgb(4, 4, 9, 9, 9));
}

TEST_CASE("http adapter retries 5xx and succeeds on the third attempt") {
    TestServer ts;
    std::atomic<int> hits{0};
    ts.server.Post("/v1/complete", [&](const httplib::Request&, httplib::Response& res) {
        const int n = ++hits;
        if (n <= 2) {
            res.status = 500;
            return;
        }
        res.set_content(R"({"text":"ok"})", "application/json");
    });
    ts.start();

    auto adapter = make_http_rqm_adapter(fast_config(ts.endpoint()));
    CHECK(adapter->complete({}, "p", {}, {}) == "ok");
    CHECK(hits.load() == 3);
}

TEST_CASE("http adapter gives up after max_attempts of 5xx") {
    TestServer ts;
    std::atomic<int> hits{0};
    ts.server.Post("/v1/complete", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 503;
    });
    ts.start();
    auto adapter = make_http_rqm_adapter(fast_config(ts.endpoint()));
    CHECK_THROWS_AS(adapter->complete({}, "p", {}, {}), HttpStatusError);
    CHECK(hits.load() == 3);
}

TEST_CASE("http adapter does not retry 4xx") {
    TestServer ts;
    std::atomic<int> hits{0};
    ts.server.Post("/v1/complete", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 404;
    });
    ts.start();
    auto adapter = make_http_rqm_adapter(fast_config(ts.endpoint()));
    CHECK_THROWS_AS(adapter->complete({}, "p", {}, {}), HttpStatusError);
    CHECK(hits.load() == 1);
}

TEST_CASE("http adapter surfaces schema violations distinctly") {
    TestServer ts;
    ts.server.Post("/v1/complete", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"wrong":"shape"})", "application/json");
    });
    ts.start();
    auto adapter = make_http_rqm_adapter(fast_config(ts.endpoint()));
    CHECK_THROWS_AS(adapter->complete({}, "p", {}, {}), SchemaError);
}

TEST_CASE("http adapter reports transport failure against a dead endpoint") {
    auto cfg = fast_config("http://127.0.0.1:1");
    cfg.max_attempts = 2;
    cfg.timeout_ms = 300;
    auto adapter = make_http_rqm_adapter(cfg);
    CHECK_THROWS_AS(adapter->complete({}, "p", {}, {}), AdapterError);
}

TEST_CASE("http adapter times out on a stalled server") {
    TestServer ts;
    ts.server.Post("/v1/complete", [&](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(600));
        res.set_content(R"({"text":"too late"})", "application/json");
    });
    ts.start();
    auto cfg = fast_config(ts.endpoint());
    cfg.timeout_ms = 100;
    cfg.max_attempts = 1;
    auto adapter = make_http_rqm_adapter(cfg);
    CHECK_THROWS_AS(adapter->complete({}, "p", {}, {}), TimeoutError);
}

TEST_CASE("http fsm adapter decodes mask and confidence wire fields") {
    std::mt19937 rng(15);
    BinaryMask wire_mask = random_mask(rng, 6, 5, 0.4);
    std::vector<float> conf_vals(30);
    for (std::size_t i = 0; i < conf_vals.size(); ++i)
        conf_vals[i] = static_cast<float>(i) - 15.0f;

    TestServer ts;
    nlohmann::json seen;
    ts.server.Post("/v1/segment", [&](const httplib::Request& req, httplib::Response& res) {
        seen = nlohmann::json::parse(req.body);
        std::vector<std::uint8_t> raw(conf_vals.size() * 4);
        std::memcpy(raw.data(), conf_vals.data(), raw.size());
        nlohmann::json reply = {
            {"mask_rle",
             {{"width", 6}, {"height", 5}, {"runs", rle_encode(wire_mask)}}},
            {"confidence_b64_f32le", base64_encode(raw)}};
        res.set_content(reply.dump(), "application/json");
    });
    ts.start();

    auto adapter = make_http_fsm_adapter(fast_config(ts.endpoint()));
    FsmResult result = adapter->segment(ImageRgb(6, 5, 1, 1, 1), Bbox{1, 1, 4, 4}, {});
    CHECK(result.mask == wire_mask);
    CHECK(result.confidence.at(0, 0) == -15.0f);
    CHECK(result.confidence.at(5, 4) == 14.0f);
    CHECK(seen.at("box") == nlohmann::json({1, 1, 4, 4}));

    // Mask dims that disagree with the image are a schema violation.
    FsmResult ignored;
    CHECK_THROWS_AS(ignored = adapter->segment(ImageRgb(7, 5), std::nullopt, {}),
                    SchemaError);
}

TEST_CASE("scripted adapters replay keyed entries and fail loudly when exhausted") {
    const std::string script_json = R"({
      "rqm": [
        {"stage": "attribution", "region": 1, "text": "needs time context <reg-1>"},
        {"stage": "attribution", "region": 1, "patch": "special", "text": "<reg-2>"},
        {"stage": "verdict", "region": 1, "text": "ANSWER: yes"}
      ],
      "fsm": [
        {"stage": "base", "patch": "p", "mask": {"width": 8, "height": 8,
          "background": 0, "boxes": [{"box": [2,2,6,6], "value": 1}]},
         "confidence": {"background": 4.0, "boxes": [{"box": [2,2,6,6], "value": 0.5}]}},
        {"stage": "correction", "region": 1, "fill_box": true}
      ]
    })";
    auto script = parse_mock_script(script_json);
    auto rqm = make_scripted_rqm_adapter(script);
    auto fsm = make_scripted_fsm_adapter(script);

    CHECK(rqm->complete({}, "prompt", {}, CallMeta{"p", 1, "attribution"}) ==
          "needs time context <reg-1>");
    // Patch-specific entries win over the wildcard.
    CHECK(rqm->complete({}, "prompt", {}, CallMeta{"special", 1, "attribution"}) ==
          "<reg-2>");
    CHECK(rqm->complete({}, "prompt", {}, CallMeta{"p", 1, "verdict"}) == "ANSWER: yes");
    CHECK_THROWS_AS(rqm->complete({}, "prompt", {}, CallMeta{"p", 2, "attribution"}),
                    ScriptError);

    FsmResult base = fsm->segment(ImageRgb(8, 8), std::nullopt, CallMeta{"p", 0, "base"});
    CHECK(base.mask.at(3, 3) == 1);
    CHECK(base.mask.at(0, 0) == 0);
    CHECK(base.confidence.at(3, 3) == 0.5f);
    CHECK(base.confidence.at(0, 0) == 4.0f);

    FsmResult fill = fsm->segment(ImageRgb(10, 10), Bbox{1, 1, 4, 3},
                                  CallMeta{"p", 1, "correction"});
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x)
            CHECK(fill.mask.at(x, y) == (Bbox{1, 1, 4, 3}.contains(x, y) ? 1 : 0));

    // Scripted base mask dims must match the segmented image.
    FsmResult ignored;
    CHECK_THROWS_AS(ignored = fsm->segment(ImageRgb(9, 9), std::nullopt,
                                           CallMeta{"p", 0, "base"}),
                    ScriptError);
}

TEST_CASE("mock script parse errors are explicit") {
    CHECK_THROWS_AS(parse_mock_script("not json"), ScriptError);
    CHECK_THROWS_AS(parse_mock_script(R"({"fsm": [{"stage": "base"}]})"), ScriptError);
}
