#include "lifespace/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include <charconv>
#include <deque>
#include <thread>
#include <vector>

namespace lifespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Json = nlohmann::json;

namespace {

HttpReply ok(Json body, int status = 200) { return {status, body.dump()}; }

HttpReply fail(int status, std::string_view kind, std::string_view message, bool retryable = false) {
    Json j;
    j["error"] = {{"kind", kind}, {"message", message}, {"retryable", retryable}};
    return {status, j.dump()};
}

Json transcript_json(const ChatSession& s) {
    Json entries = Json::array();
    for (const auto& t : s.transcript)
        entries.push_back({{"role", std::string(to_string(t.role))}, {"text", t.text}, {"tick", t.tick}});
    return {{"session", s.id}, {"agent", s.agent}, {"open", s.open}, {"transcript", std::move(entries)}};
}

Json parse_body(std::string_view body) {
    if (body.empty()) return Json::object();
    try {
        Json j = Json::parse(body);
        if (!j.is_object()) throw ValidationError("request body must be a JSON object");
        return j;
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("request body is not JSON: ") + e.what());
    }
}

std::string required_string(const Json& body, const char* field) {
    auto it = body.find(field);
    if (it == body.end() || !it->is_string()) throw ValidationError(std::string("field '") + field + "' must be a string");
    return it->get<std::string>();
}

std::vector<std::string_view> split_path(std::string_view path) {
    std::vector<std::string_view> parts;
    while (!path.empty()) {
        if (path.front() == '/') {
            path.remove_prefix(1);
            continue;
        }
        auto end = path.find('/');
        parts.push_back(path.substr(0, end));
        if (end == std::string_view::npos) break;
        path.remove_prefix(end);
    }
    return parts;
}

HttpReply route(Engine& engine, std::string_view method, std::string_view target, std::string_view raw_body) {
    auto path = target.substr(0, target.find('?'));
    auto parts = split_path(path);
    if (parts.size() < 2 || parts[0] != "v1") return fail(404, "not_found", "no such endpoint");
    auto resource = parts[1];

    if (resource == "state" && parts.size() == 2) {
        if (method != "GET") return fail(405, "method_not_allowed", "use GET");
        return {200, engine.state_json()};
    }
    if (resource == "mode" && parts.size() == 2) {
        if (method == "GET") return ok({{"mode", std::string(to_string(engine.mode()))}});
        if (method != "POST") return fail(405, "method_not_allowed", "use GET or POST");
        auto name = required_string(parse_body(raw_body), "mode");
        auto mode = parse_view_mode(name);
        if (!mode) throw ValidationError("mode must be 'observable' or 'unobservable'");
        auto previous = engine.set_mode(*mode);
        return ok({{"mode", name}, {"previous", std::string(to_string(previous))}});
    }
    if (resource == "sessions") {
        auto& registry = engine.sessions();
        if (parts.size() == 2) {
            if (method != "POST") return fail(405, "method_not_allowed", "use POST");
            auto agent = required_string(parse_body(raw_body), "agent");
            auto id = registry.open(engine.handle(), agent);
            return ok({{"session", id}, {"agent", agent}}, 201);
        }
        std::string id(parts[2]);
        if (parts.size() == 3) {
            if (method == "GET") return ok(transcript_json(registry.get(id)));
            if (method != "DELETE") return fail(405, "method_not_allowed", "use GET or DELETE");
            return ok(transcript_json(registry.close(id, engine.handle())));
        }
        if (parts.size() == 4 && parts[3] == "messages") {
            if (method != "POST") return fail(405, "method_not_allowed", "use POST");
            auto text = required_string(parse_body(raw_body), "text");
            auto result = registry.message(id, text, engine.handle());
            return ok({{"session", id}, {"reply", result.agent_text}, {"acted", result.acted}});
        }
    }
    if (resource == "snapshot") {
        if (method != "POST") return fail(405, "method_not_allowed", "use POST");
        auto file = required_string(parse_body(raw_body), "path");
        if (parts.size() == 2) {
            engine.save_snapshot(file);
            return ok({{"path", file}, {"tick", engine.snapshot()->tick}});
        }
        if (parts.size() == 3 && parts[2] == "load") {
            engine.load_snapshot(file);
            return ok({{"path", file}, {"tick", engine.snapshot()->tick}});
        }
    }
    return fail(404, "not_found", "no such endpoint");
}

}  // namespace

HttpReply handle_request(Engine& engine, std::string_view method, std::string_view target, std::string_view body) {
    try {
        return route(engine, method, target, body);
    } catch (const ParseError& e) {
        return fail(400, "parse", e.what());
    } catch (const ValidationError& e) {
        return fail(400, "validation", e.what());
    } catch (const PreconditionError& e) {
        return fail(400, "precondition", e.what());
    } catch (const TrackMismatchError& e) {
        return fail(400, "track_mismatch", e.what());
    } catch (const CorruptSnapshotError& e) {
        return fail(400, "corrupt_snapshot", e.what());
    } catch (const UnknownAgentError& e) {
        return fail(404, "unknown_agent", e.what());
    } catch (const UnknownSessionError& e) {
        return fail(404, "unknown_session", e.what());
    } catch (const UnknownSceneError& e) {
        return fail(404, "unknown_scene", e.what());
    } catch (const ClosedSessionError& e) {
        return fail(409, "closed_session", e.what());
    } catch (const EngineNotStartedError& e) {
        return fail(503, "engine_not_started", e.what(), true);
    } catch (const ProviderUnavailableError& e) {
        return fail(503, "provider_unavailable", e.what(), true);
    } catch (const Error& e) {
        return fail(500, "internal", e.what());
    } catch (const std::exception& e) {
        return fail(500, "internal", e.what());
    }
}

std::uint64_t parse_since(std::string_view target) {
    auto q = target.find('?');
    if (q == std::string_view::npos) return 0;
    auto query = target.substr(q + 1);
    while (!query.empty()) {
        auto amp = query.find('&');
        auto pair = query.substr(0, amp);
        if (pair.substr(0, 6) == "since=") {
            auto value = pair.substr(6);
            std::uint64_t since = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), since);
            if (ec != std::errc{} || p != value.data() + value.size() || value.empty())
                throw ValidationError("since must be a non-negative integer");
            return since;
        }
        if (amp == std::string_view::npos) break;
        query.remove_prefix(amp + 1);
    }
    return 0;
}

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket socket, Engine& engine, std::uint64_t since)
        : ws_(std::move(socket)), timer_(ws_.get_executor()), sub_(engine.subscribe(since)) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->do_read();
            self->pump();
        });
    }

private:
    void do_read() {
        ws_.async_read(rbuf_, [self = shared_from_this()](beast::error_code ec, std::size_t n) {
            if (ec) {
                self->closed_ = true;
                self->timer_.cancel();
                return;
            }
            self->rbuf_.consume(n);
            self->do_read();
        });
    }

    void pump() {
        if (closed_) return;
        if (!writing_ && queue_.empty()) {
            try {
                for (auto& f : sub_->poll()) queue_.push_back(std::move(f));
            } catch (const StreamOverflowError& e) {
                return close(websocket::close_code::policy_error, "overflow");
            } catch (const Error& e) {
                return close(websocket::close_code::going_away, "reset");
            }
            if (!queue_.empty()) do_write();
        }
        timer_.expires_after(std::chrono::milliseconds(20));
        timer_.async_wait([self = shared_from_this()](beast::error_code) { self->pump(); });
    }

    void do_write() {
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed_ = true;
                return;
            }
            self->queue_.pop_front();
            if (!self->queue_.empty())
                self->do_write();
            else
                self->writing_ = false;
        });
    }

    void close(websocket::close_code code, const char* reason) {
        closed_ = true;
        ws_.async_close(websocket::close_reason(code, reason), [self = shared_from_this()](beast::error_code) {});
    }

    websocket::stream<beast::tcp_stream> ws_;
    net::steady_timer timer_;
    std::unique_ptr<Subscription> sub_;
    beast::flat_buffer rbuf_;
    std::deque<std::string> queue_;
    bool writing_ = false;
    bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket socket, Engine& engine) : stream_(std::move(socket)), engine_(engine) {}

    void run() { do_read(); }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(60));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->on_read(ec);
        });
    }

    void on_read(beast::error_code ec) {
        if (ec) {
            beast::error_code ignored;
            stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
            return;
        }
        std::string_view target(req_.target().data(), req_.target().size());
        if (websocket::is_upgrade(req_)) {
            if (target.substr(0, target.find('?')) != "/v1/events")
                return respond(fail(404, "not_found", "no such stream"));
            std::uint64_t since = 0;
            try {
                since = parse_since(target);
            } catch (const Error& e) {
                return respond(fail(400, "validation", e.what()));
            }
            stream_.expires_never();
            std::make_shared<WsSession>(stream_.release_socket(), engine_, since)->run(std::move(req_));
            return;
        }
        if (req_.method() == http::verb::options) return respond({204, ""});
        std::string_view method(req_.method_string().data(), req_.method_string().size());
        respond(handle_request(engine_, method, target, req_.body()));
    }

    void respond(HttpReply reply) {
        auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(reply.status),
                                                                       req_.version());
        res->set(http::field::server, "lifespace");
        res->set(http::field::access_control_allow_origin, "*");
        res->set(http::field::access_control_allow_methods, "GET, POST, DELETE, OPTIONS");
        res->set(http::field::access_control_allow_headers, "Content-Type");
        if (!reply.body.empty()) res->set(http::field::content_type, "application/json");
        res->keep_alive(req_.keep_alive());
        res->body() = std::move(reply.body);
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (!res->keep_alive()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->do_read();
        });
    }

    beast::tcp_stream stream_;
    Engine& engine_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

}  // namespace

struct Server::Impl {
    Impl(Engine& e, const std::string& address, unsigned short port, int n)
        : engine(e), acceptor(ioc), threads_wanted(n) {
        tcp::endpoint endpoint(net::ip::make_address(address), port);
        acceptor.open(endpoint.protocol());
        acceptor.set_option(net::socket_base::reuse_address(true));
        acceptor.bind(endpoint);
        acceptor.listen(net::socket_base::max_listen_connections);
    }

    void do_accept() {
        acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            std::make_shared<HttpSession>(std::move(socket), engine)->run();
            do_accept();
        });
    }

    Engine& engine;
    net::io_context ioc;
    tcp::acceptor acceptor;
    int threads_wanted;
    std::vector<std::thread> threads;
};

Server::Server(Engine& engine, const std::string& address, unsigned short port, int threads) {
    try {
        impl_ = std::make_unique<Impl>(engine, address, port, threads);
    } catch (const boost::system::system_error& e) {
        throw Error("cannot listen on " + address + ":" + std::to_string(port) + ": " + e.what());
    }
}

Server::~Server() { stop(); }

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::start() {
    impl_->do_accept();
    for (int i = 0; i < std::max(1, impl_->threads_wanted); ++i)
        impl_->threads.emplace_back([this] { impl_->ioc.run(); });
}

void Server::stop() {
    if (!impl_) return;
    impl_->ioc.stop();
    for (auto& t : impl_->threads)
        if (t.joinable()) t.join();
    impl_->threads.clear();
}

}  // namespace lifespace
