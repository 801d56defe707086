/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "fenshses/service.hpp"

#include "fenshses/code_store.hpp"
#include "fenshses/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace fenshses::service {

using nlohmann::json;

namespace {

Response error(int status, const std::string& message) {
    return {status, json{{"error", message}}.dump()};
}

}  // namespace

std::string result_to_json(const SearchResult& result) {
    json neighbors = json::array();
    for (const auto& nb : result.neighbors) {
        neighbors.push_back({{"id", nb.id}, {"distance", nb.distance}});
    }
    return json{{"neighbors", std::move(neighbors)},
                {"candidate_count", result.candidate_count},
                {"elapsed_us", result.elapsed_us}}
            .dump();
}

std::string stats_to_json(const SearchEngine& engine) {
    const auto layout = engine.filter_layout();
    return json{{"m", engine.code_length()},
                {"n", engine.size()},
                {"s", layout ? layout->segment_count() : 0},
                {"w", layout ? layout->width() : 0},
                {"permuted", engine.permuted()}}
            .dump();
}

Response SearchService::handle(const std::string& method, const std::string& path, const std::string& body) const {
    if (path == "/stats") {
        if (method != "GET") return error(405, "use GET /stats");
        if (!engine_) return error(503, "engine not ready");
        return {200, stats_to_json(*engine_)};
    }
    if (path == "/search" || path == "/knn") {
        if (method != "POST") return error(405, "use POST " + path);
        return search(body, path == "/knn");
    }
    return error(404, "no route for " + path);
}

Response SearchService::search(const std::string& body, bool knn) const {
    QueryRequest req;
    try {
        const json j = json::parse(body);
        if (!j.is_object()) return error(400, "request body must be a JSON object");
        if (!j.contains("code") || !j.at("code").is_string()) return error(400, "missing string field 'code'");
        req.code_hex = j.at("code").get<std::string>();
        if (j.contains("radius")) {
            if (!j.at("radius").is_number_integer()) return error(400, "'radius' must be an integer");
            req.radius = j.at("radius").get<int64_t>();
        }
        if (j.contains("k")) {
            if (!j.at("k").is_number_integer()) return error(400, "'k' must be an integer");
            req.k = j.at("k").get<int64_t>();
        }
        if (j.contains("strategy")) {
            if (!j.at("strategy").is_string()) return error(400, "'strategy' must be a string");
            req.strategy = parse_strategy(j.at("strategy").get<std::string>());
        }
    } catch (const json::exception& e) {
        return error(400, std::string("malformed JSON: ") + e.what());
    } catch (const InvalidArgument& e) {
        return error(400, e.what());
    }

    if (req.radius && req.k) return error(400, "give either 'radius' or 'k', not both");
    if (knn && !req.k) return error(400, "/knn needs 'k'");
    if (!knn && !req.radius) return error(400, "/search needs 'radius'");
    if (!engine_) return error(503, "engine not ready");

    try {
        const BinaryCode q = parse_code_hex(req.code_hex, engine_->code_length());
        const SearchStrategy s = req.strategy.value_or(engine_->default_strategy());
        if (knn) {
            if (*req.k < 1) return error(400, "'k' must be at least 1");
            return {200, result_to_json(engine_->knn_search(s, q, static_cast<size_t>(*req.k)))};
        }
        if (*req.radius < 0 || *req.radius > engine_->code_length()) {
            return error(400, "'radius' must be in [0, " + std::to_string(engine_->code_length()) + "]");
        }
        return {200, result_to_json(engine_->r_neighbor_search(s, q, static_cast<uint32_t>(*req.radius)))};
    } catch (const ParseError& e) {
        return error(400, e.what());
    } catch (const InvalidArgument& e) {
        return error(400, e.what());
    } catch (const NotReadyError& e) {
        return error(503, e.what());
    }
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(const SearchService& service) : impl_(std::make_unique<Impl>()) {
    auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
        const Response r = service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    impl_->server.Get("/stats", forward);
    impl_->server.Post("/search", forward);
    impl_->server.Post("/knn", forward);
}

HttpServer::~HttpServer() {
    stop();
}

bool HttpServer::listen(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

int HttpServer::bind_to_any_port(const std::string& host) {
    return impl_->server.bind_to_any_port(host);
}

bool HttpServer::listen_after_bind() {
    return impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const {
    impl_->server.wait_until_ready();
}

}  // namespace fenshses::service
