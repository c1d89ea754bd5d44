#pragma once

#include "lifespace/engine.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace lifespace {

struct HttpReply {
    int status = 200;
    std::string body;  // JSON
};

/// Routes one REST request against the engine. Errors become
/// {"error":{"kind","message","retryable"}} with a matching status code.
HttpReply handle_request(Engine& engine, std::string_view method, std::string_view target, std::string_view body);

/// Reads `since` from a "/v1/events?since=N" target; 0 when absent.
/// Throws ValidationError on a malformed value.
std::uint64_t parse_since(std::string_view target);

/// REST + WebSocket front end on one port:
///   GET    /v1/state
///   POST   /v1/mode                 {"mode":"observable|unobservable"}
///   POST   /v1/sessions             {"agent":"<id>"}
///   GET    /v1/sessions/{id}
///   POST   /v1/sessions/{id}/messages {"text":"..."} -> {"reply","acted"}
///   DELETE /v1/sessions/{id}        -> transcript
///   POST   /v1/snapshot             {"path":"..."}
///   POST   /v1/snapshot/load        {"path":"..."}
///   WS     /v1/events?since=<seq>
class Server {
public:
    /// Binds immediately; port 0 picks a free port.
    Server(Engine& engine, const std::string& address, unsigned short port, int threads = 4);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    unsigned short port() const;
    void start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace lifespace
