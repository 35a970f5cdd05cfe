#include "arramon/service/http_server.h"

#include <httplib.h>

#include "arramon/error.h"
#include "arramon/serialize.h"

namespace arramon {

using nlohmann::json;

namespace {

void send(httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

std::optional<json> body_json(const httplib::Request& req, httplib::Response& res) {
    if (req.body.empty()) return json::object();
    try {
        json j = json::parse(req.body);
        if (j.is_object()) return j;
    } catch (const json::exception&) {
    }
    send(res, error_reply(400, "request body must be a JSON object"));
    return std::nullopt;
}

std::string request_id(const httplib::Request& req, const json& body) {
    if (body.contains("request_id") && body["request_id"].is_string()) return body["request_id"].get<std::string>();
    return req.get_header_value("X-Request-Id");
}

std::string sse_frame(const SessionEvent& e) {
    return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + e.data.dump() + "\n\n";
}

} // namespace

HttpServer::HttpServer(std::shared_ptr<SessionManager> sessions)
    : sessions_(std::move(sessions)), server_(std::make_unique<httplib::Server>()) {
    routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return server_->listen_after_bind(); }

void HttpServer::stop() {
    if (server_) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

void HttpServer::routes() {
    auto& s = *server_;
    auto sessions = sessions_;

    // Wraps session routes: 404 for unknown ids, 400 for bad input, 500 otherwise.
    auto with_session = [sessions](auto fn) {
        return [sessions, fn](const httplib::Request& req, httplib::Response& res) {
            auto session = sessions->find(req.matches[1]);
            if (!session) return send(res, error_reply(404, "unknown session " + std::string(req.matches[1])));
            try {
                fn(*session, req, res);
            } catch (const json::exception& e) {
                send(res, error_reply(400, e.what()));
            } catch (const SchemaError& e) {
                send(res, error_reply(400, e.what()));
            } catch (const Error& e) {
                send(res, error_reply(500, e.what()));
            }
        };
    };

    s.Get("/health", [sessions](const httplib::Request&, httplib::Response& res) {
        send(res, {200,
                   {{"status", "ok"},
                    {"episodes", sessions->store().size()},
                    {"sessions", sessions->size()},
                    {"schema_version", kSchemaVersion}}});
    });

    s.Get("/episodes", [sessions](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& id : sessions->store().ids()) {
            auto e = sessions->store().find(id);
            list.push_back({{"id", id}, {"section_id", e->spec.section_id}, {"has_instructions", e->instructions.has_value()}});
        }
        send(res, {200, {{"episodes", list}}});
    });

    s.Get(R"(/episodes/([^/]+))", [sessions](const httplib::Request& req, httplib::Response& res) {
        auto e = sessions->store().find(req.matches[1]);
        if (!e) return send(res, error_reply(404, "unknown episode " + std::string(req.matches[1])));
        send(res, {200, json(e->spec)});
    });

    s.Post("/sessions", [sessions](const httplib::Request& req, httplib::Response& res) {
        auto body = body_json(req, res);
        if (!body) return;
        const std::string mode = body->value("mode", std::string("free"));
        const std::string episode = body->value("episode_id", std::string{});
        send(res, sessions->create(mode, episode, request_id(req, *body)));
    });

    s.Get(R"(/sessions/([^/]+))", with_session([](Session& session, const httplib::Request&, httplib::Response& res) {
              send(res, session.summary());
          }));

    s.Get(R"(/sessions/([^/]+)/observation)",
          with_session([](Session& session, const httplib::Request&, httplib::Response& res) {
              send(res, session.observation());
          }));

    s.Post(R"(/sessions/([^/]+)/actions)", with_session([](Session& session, const httplib::Request& req, httplib::Response& res) {
               auto body = body_json(req, res);
               if (!body) return;
               const auto a = parse_action(body->value("action", std::string{}));
               if (!a) return send(res, error_reply(400, "action must be forward, left, right or end"));
               send(res, session.post_action(*a, request_id(req, *body)));
           }));

    s.Post(R"(/sessions/([^/]+)/instructions)",
           with_session([](Session& session, const httplib::Request& req, httplib::Response& res) {
               auto body = body_json(req, res);
               if (!body) return;
               const auto phase = parse_phase(body->value("phase", std::string{}));
               if (!phase) return send(res, error_reply(400, "phase must be nav or asm"));
               send(res, session.submit_instruction(*phase, body->value("turn", 1), body->value("text", std::string{}),
                                                    request_id(req, *body)));
           }));

    s.Get(R"(/sessions/([^/]+)/instructions)",
          with_session([](Session& session, const httplib::Request&, httplib::Response& res) {
              send(res, session.instruction_set());
          }));

    s.Get(R"(/sessions/([^/]+)/score)", with_session([](Session& session, const httplib::Request&, httplib::Response& res) {
              send(res, session.score());
          }));

    s.Post(R"(/sessions/([^/]+)/flags)", with_session([](Session& session, const httplib::Request& req, httplib::Response& res) {
               auto body = body_json(req, res);
               if (!body) return;
               send(res, session.set_flags(body->value("flags", std::vector<std::string>{}), request_id(req, *body)));
           }));

    s.Post(R"(/sessions/([^/]+)/followers)",
           with_session([](Session& session, const httplib::Request& req, httplib::Response& res) {
               auto body = body_json(req, res);
               if (!body) return;
               FollowerResult r;
               r.follower_id = body->value("follower_id", std::string{});
               r.ndtw_turn1 = body->at("ndtw_turn1").get<double>();
               r.ndtw_turn2 = body->at("ndtw_turn2").get<double>();
               r.ptc_turn1 = body->at("ptc_turn1").get<int>();
               r.ptc_turn2 = body->at("ptc_turn2").get<int>();
               send(res, session.add_follower(r, request_id(req, *body)));
           }));

    s.Get(R"(/sessions/([^/]+)/log)", with_session([](Session& session, const httplib::Request&, httplib::Response& res) {
              json list = json::array();
              for (const auto& e : session.events_after(0)) list.push_back({{"seq", e.seq}, {"type", e.type}, {"data", e.data}});
              send(res, {200, {{"events", list}, {"actions", actions_to_json(session.action_log())}}});
          }));

    // Server-sent events. Resumes after ?after=N or Last-Event-ID. With
    // ?follow=0 the stream closes after the backlog; otherwise it stays open
    // until the episode is done and a wait passes with nothing new.
    s.Get(R"(/sessions/([^/]+)/events)", [sessions](const httplib::Request& req, httplib::Response& res) {
        auto session = sessions->find(req.matches[1]);
        if (!session) return send(res, error_reply(404, "unknown session " + std::string(req.matches[1])));
        long after = 0;
        try {
            if (req.has_param("after")) {
                after = std::stol(req.get_param_value("after"));
            } else if (req.has_header("Last-Event-ID")) {
                after = std::stol(req.get_header_value("Last-Event-ID"));
            }
        } catch (const std::exception&) {
            return send(res, error_reply(400, "bad event cursor"));
        }
        const bool follow = req.get_param_value("follow") != "0";
        const auto wait = std::chrono::milliseconds(req.has_param("wait_ms") ? std::stol(req.get_param_value("wait_ms")) : 1000);
        res.set_header("Cache-Control", "no-cache");
        auto cursor = std::make_shared<long>(after);
        res.set_chunked_content_provider("text/event-stream",
                                         [session, cursor, follow, wait](std::size_t, httplib::DataSink& sink) {
                                             auto events = session->events_after(*cursor, follow ? wait : std::chrono::milliseconds{});
                                             for (const auto& e : events) {
                                                 const std::string frame = sse_frame(e);
                                                 if (!sink.write(frame.data(), frame.size())) return false;
                                                 *cursor = e.seq;
                                             }
                                             if (!follow || (events.empty() && session->done())) {
                                                 sink.done();
                                             } else if (events.empty()) {
                                                 static const std::string beat = ": keep-alive\n\n";
                                                 if (!sink.write(beat.data(), beat.size())) return false;
                                             }
                                             return true;
                                         });
    });

    s.Post("/validate", [](const httplib::Request& req, httplib::Response& res) {
        auto body = body_json(req, res);
        if (!body) return;
        const auto phase = parse_phase(body->value("phase", std::string{}));
        if (!phase) return send(res, error_reply(400, "phase must be nav or asm"));
        try {
            std::vector<Action> gt;
            if (body->contains("gt_actions")) gt = actions_from_json((*body)["gt_actions"]);
            const auto v = validate(body->value("text", std::string{}), *phase, gt);
            send(res, {200, {{"violations", v}, {"blocking", has_blocking(v)}}});
        } catch (const std::exception& e) {
            send(res, error_reply(400, e.what()));
        }
    });

    s.Post("/verify", [](const httplib::Request& req, httplib::Response& res) {
        auto body = body_json(req, res);
        if (!body) return;
        try {
            std::vector<FollowerResult> results;
            for (const auto& f : body->value("followers", json::array())) {
                FollowerResult r;
                r.follower_id = f.value("follower_id", std::string{});
                r.ndtw_turn1 = f.at("ndtw_turn1").get<double>();
                r.ndtw_turn2 = f.at("ndtw_turn2").get<double>();
                r.ptc_turn1 = f.at("ptc_turn1").get<int>();
                r.ptc_turn2 = f.at("ptc_turn2").get<int>();
                results.push_back(r);
            }
            send(res, {200, {{"passed", verify_filter(results)}}});
        } catch (const EmptyResultsError& e) {
            send(res, error_reply(422, e.what()));
        } catch (const std::exception& e) {
            send(res, error_reply(400, e.what()));
        }
    });
}

} // namespace arramon
