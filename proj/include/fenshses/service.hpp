/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "fenshses/search_engine.hpp"

namespace fenshses::service {

struct QueryRequest {
    std::string code_hex;
    std::optional<int64_t> radius;
    std::optional<int64_t> k;
    std::optional<SearchStrategy> strategy;
};

struct Response {
    int status = 200;
    std::string body;
};

/// {"neighbors":[{"id":..,"distance":..},..],"candidate_count":..,"elapsed_us":..}
std::string result_to_json(const SearchResult& result);

/// {"m":..,"n":..,"s":..,"w":..,"permuted":..}
std::string stats_to_json(const SearchEngine& engine);

/// Routes POST /search, POST /knn and GET /stats against an immutable
/// engine. A null engine answers 503. Transport-free so it can be tested
/// without sockets; HttpServer is the socket front end.
class SearchService {
   public:
    explicit SearchService(std::shared_ptr<const SearchEngine> engine) : engine_(std::move(engine)) {}

    Response handle(const std::string& method, const std::string& path, const std::string& body) const;

   private:
    Response search(const std::string& body, bool knn) const;
    std::shared_ptr<const SearchEngine> engine_;
};

/// cpp-httplib listener around a SearchService. Requests are served
/// concurrently on the library's thread pool.
class HttpServer {
   public:
    explicit HttpServer(const SearchService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and serves until stop(); returns false if binding failed.
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port and returns it (or -1); serve with listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;

   private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace fenshses::service
