#pragma once

#include <memory>
#include <string>

#include "farmmind/imagedb.hpp"

namespace farmmind {

/// HTTP facade over a SceneStore: POST /query with a QuerySpec JSON body
/// returns candidate metadata plus base64 PNG pixels. The same queries are
/// available in-process through SceneStore directly.
class DbService {
public:
    explicit DbService(const SceneStore& store);
    ~DbService();

    DbService(const DbService&) = delete;
    DbService& operator=(const DbService&) = delete;

    /// Binds to an OS-assigned port when `port` is 0; returns the bound port.
    int start(const std::string& host, int port);
    /// Blocks serving requests (for the CLI `serve` subcommand).
    void run(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Wire codecs shared by service and tests.
std::string query_spec_to_json(const QuerySpec& spec);
QuerySpec query_spec_from_json(const std::string& body);
std::string candidates_to_json(const std::vector<CandidateImage>& candidates);

}  // namespace farmmind
