#include <catch_amalgamated.hpp>

#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "arramon/error.h"
#include "arramon/serialize.h"
#include "arramon/service/http_server.h"
#include "arramon/service/session.h"

using namespace arramon;

namespace {

std::shared_ptr<const CityMap> city() {
    static const auto c = std::make_shared<const CityMap>(generate_city(61));
    return c;
}

const std::vector<CorpusEpisode>& corpus() {
    static const auto c = synth_corpus(*city(), {1, 4, 7}, 6, 2);
    return c;
}

std::shared_ptr<const EpisodeStore> store() {
    static const auto s = [] {
        auto st = std::make_shared<EpisodeStore>();
        for (const auto& e : corpus()) st->add(e.spec, e.routes, e.instructions);
        return std::shared_ptr<const EpisodeStore>(st);
    }();
    return s;
}

std::shared_ptr<const EpisodeEntry> entry(std::size_t i) { return store()->find(corpus()[i].spec.id); }

bool guide_cell(const GroundTruthRoute& r, Cell c) {
    for (const auto& x : r.cells)
        if (x == c) return true;
    for (const auto& p : r.points)
        if (cell_of(p) == c) return true;
    return false;
}

// Rotates left until Forward would leave the guide onto a walkable cell.
std::optional<int> turns_to_leave_guide(const SimState& s, const GroundTruthRoute& guide) {
    for (int k = 0; k < 12; ++k) {
        const int h = normalize_heading(s.pose.heading - 30 * k);
        const Cell next = cell_of(s.pose.position() + heading_vector(h));
        if (next != s.pose.cell() && s.city->grid.walkable(next) && !guide_cell(guide, next)) return k;
    }
    return std::nullopt;
}

struct Sse {
    long id = 0;
    std::string type;
    nlohmann::json data;
};

std::vector<Sse> parse_sse(const std::string& body) {
    std::vector<Sse> out;
    std::istringstream in(body);
    Sse cur;
    bool any = false;
    for (std::string line; std::getline(in, line);) {
        if (line.empty()) {
            if (any) out.push_back(cur);
            cur = {};
            any = false;
        } else if (line.rfind("id: ", 0) == 0) {
            cur.id = std::stol(line.substr(4));
            any = true;
        } else if (line.rfind("event: ", 0) == 0) {
            cur.type = line.substr(7);
        } else if (line.rfind("data: ", 0) == 0) {
            cur.data = nlohmann::json::parse(line.substr(6));
        }
    }
    return out;
}

class Server {
  public:
    Server() : manager(std::make_shared<SessionManager>(store())), http(manager) {
        port = http.bind("127.0.0.1", 0);
        REQUIRE(port > 0);
        thread = std::thread([this] { http.listen(); });
        http.wait_until_ready();
    }
    ~Server() {
        http.stop();
        thread.join();
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(20, 0);
        return c;
    }

    std::shared_ptr<SessionManager> manager;
    HttpServer http;
    int port = -1;
    std::thread thread;
};

nlohmann::json post(httplib::Client& c, const std::string& path, const nlohmann::json& body, int expect,
                    const httplib::Headers& headers = {}) {
    auto r = c.Post(path, headers, body.dump(), "application/json");
    REQUIRE(r);
    INFO(path << " -> " << r->body);
    CHECK(r->status == expect);
    return nlohmann::json::parse(r->body);
}

nlohmann::json get(httplib::Client& c, const std::string& path, int expect) {
    auto r = c.Get(path);
    REQUIRE(r);
    INFO(path << " -> " << r->body);
    CHECK(r->status == expect);
    return nlohmann::json::parse(r->body);
}

} // namespace

TEST_CASE("session modes parse") {
    CHECK(parse_session_mode("write") == SessionMode::Write);
    CHECK(parse_session_mode("follow") == SessionMode::Follow);
    CHECK(parse_session_mode("free") == SessionMode::Free);
    CHECK_FALSE(parse_session_mode("spectate"));
    CHECK(name(SessionMode::Follow) == "follow");
}

TEST_CASE("write mode rejects Forward off the guide") {
    const auto e = entry(0);
    Session s("s", SessionMode::Write, e);
    SimState probe = reset(e->spec, e->city);
    const auto k = turns_to_leave_guide(probe, e->gt.nav[0]);
    REQUIRE(k);
    for (int i = 0; i < *k; ++i) CHECK(s.post_action(Action::Left).body["accepted"] == true);
    const auto before = s.observation().body["pose"];
    const Reply r = s.post_action(Action::Forward);
    CHECK(r.status == 200);
    CHECK(r.body["accepted"] == false);
    CHECK(r.body["reason"] == "off_guide");
    CHECK(r.body["observation"]["pose"] == before);
    CHECK(s.action_log().size() == static_cast<std::size_t>(*k));
    CHECK(s.observation().body.contains("guide"));
}

TEST_CASE("write mode snaps placement to the ground-truth cell") {
    const auto e = entry(1);
    Session s("s", SessionMode::Write, e);
    for (Action a : e->gt.nav[0].actions) s.post_action(a);
    const auto obs = s.observation().body;
    CHECK(obs["phase"] == "asm");
    CHECK(obs.contains("room"));
    CHECK(obs.contains("placement_preview"));
    s.post_action(Action::End);
    SimState replayed = replay_session(*e, SessionMode::Write, s.action_log());
    REQUIRE(replayed.trajectories.size() >= 2);
    CHECK(replayed.trajectories[1].end.placed_cell == e->spec.turns[0].assembly_target_cell);
}

TEST_CASE("free mode: the action log replays to the served score") {
    const auto e = entry(2);
    Session s("s", SessionMode::Free, e);
    CHECK(s.score().status == 409);
    for (Action a : gt_action_stream(e->gt)) s.post_action(a);
    REQUIRE(s.done());
    CHECK(s.post_action(Action::Forward).status == 409);
    const Reply score = s.score();
    REQUIRE(score.status == 200);
    const SimState replayed = replay_session(*e, SessionMode::Free, s.action_log());
    CHECK(json(score_episode(e->spec, e->gt, replayed.trajectories)) == score.body);
    CHECK(score.body["totals"]["ptc"] == 1.0);
    CHECK(s.score().body == score.body);
}

TEST_CASE("instructions: validation, storage and the dataset record") {
    const auto e = entry(0);
    Session follow("f", SessionMode::Follow, e);
    CHECK(follow.submit_instruction(Phase::Navigation, 1, "Walk to the bench and pick up the tv").status == 409);
    CHECK(follow.observation().body["instruction"] == corpus()[0].instructions.nav[0]);

    Session s("w", SessionMode::Write, e);
    const Reply bad = s.submit_instruction(Phase::Assembly, 1, "Place it on the corner tile");
    CHECK(bad.status == 422);
    CHECK(bad.body["stored"] == false);
    CHECK(bad.body["violations"].size() == 2);
    CHECK(s.submit_instruction(Phase::Assembly, 3, "Place the mug in front of the ball").status == 400);
    CHECK(s.instruction_set().status == 409);
    const auto& ins = corpus()[0].instructions;
    for (int t = 1; t <= 2; ++t) {
        const auto i = static_cast<std::size_t>(t - 1);
        CHECK(s.submit_instruction(Phase::Navigation, t, ins.nav[i]).status == 200);
        CHECK(s.submit_instruction(Phase::Assembly, t, ins.assembly[i]).status == 200);
    }
    const Reply rec = s.instruction_set();
    REQUIRE(rec.status == 200);
    const InstructionSet set = from_record(rec.body);
    CHECK(set.validated);
    CHECK(set.episode_ref == e->spec.id);
    CHECK(set.nav_instructions == ins.nav);

    const Reply notice = s.submit_instruction(Phase::Navigation, 1, "Turn around, walk forward twice and pick up the dotted red tv");
    CHECK(notice.status == 200);
    bool saw_notify = false;
    for (const auto& ev : s.events_after(0)) saw_notify |= ev.type == "notify";
    CHECK(saw_notify);
}

TEST_CASE("request ids make retries idempotent") {
    const auto e = entry(0);
    Session s("s", SessionMode::Free, e);
    const Reply a = s.post_action(Action::Left, "r1");
    const Reply b = s.post_action(Action::Left, "r1");
    CHECK(a.body == b.body);
    CHECK(s.action_log().size() == 1);
    s.post_action(Action::Left, "r2");
    CHECK(s.action_log().size() == 2);

    SessionManager m(store());
    const Reply c1 = m.create("free", e->spec.id, "k");
    const Reply c2 = m.create("free", e->spec.id, "k");
    CHECK(c1.status == 201);
    CHECK(c1.body == c2.body);
    CHECK(m.size() == 1);
    CHECK(m.create("nope", e->spec.id).status == 400);
    CHECK(m.create("free", "missing").status == 404);
}

TEST_CASE("events carry increasing sequence numbers") {
    Session s("s", SessionMode::Free, entry(0));
    s.post_action(Action::Left);
    s.set_flags({"unclear", "unclear", "wrong_object"});
    const auto ev = s.events_after(0);
    REQUIRE(ev.size() == 3);
    for (std::size_t i = 0; i < ev.size(); ++i) CHECK(ev[i].seq == static_cast<long>(i) + 1);
    CHECK(ev[0].type == "session_created");
    CHECK(ev[2].data["flags"].size() == 2);
    CHECK(s.events_after(2).size() == 1);
    CHECK(s.events_after(3, std::chrono::milliseconds(20)).empty());
}

TEST_CASE("HTTP: episodes, sessions and errors") {
    Server srv;
    auto c = srv.client();
    const auto health = get(c, "/health", 200);
    CHECK(health["status"] == "ok");
    CHECK(health["episodes"] == corpus().size());
    CHECK(get(c, "/episodes", 200)["episodes"].size() == corpus().size());
    const std::string ep = corpus()[0].spec.id;
    CHECK(get(c, "/episodes/" + ep, 200)["id"] == ep);
    get(c, "/episodes/none", 404);

    post(c, "/sessions", {{"mode", "bogus"}, {"episode_id", ep}}, 400);
    post(c, "/sessions", {{"mode", "free"}, {"episode_id", "none"}}, 404);
    const auto created = post(c, "/sessions", {{"mode", "free"}, {"episode_id", ep}}, 201, {{"X-Request-Id", "c1"}});
    const auto again = post(c, "/sessions", {{"mode", "free"}, {"episode_id", ep}}, 201, {{"X-Request-Id", "c1"}});
    CHECK(created == again);
    const std::string sid = created["session_id"];
    const std::string base = "/sessions/" + sid;

    get(c, "/sessions/nope", 404);
    get(c, "/sessions/nope/observation", 404);
    post(c, "/sessions/nope/actions", {{"action", "left"}}, 404);
    post(c, base + "/actions", {{"action", "jump"}}, 400);
    auto raw = c.Post(base + "/actions", "not json", "application/json");
    REQUIRE(raw);
    CHECK(raw->status == 400);
    get(c, base + "/score", 409);
    post(c, base + "/instructions", {{"phase", "nav"}, {"turn", 1}, {"text", "Walk to the bench and pick up it"}}, 409);

    const auto obs = get(c, base + "/observation", 200);
    CHECK(obs["phase"] == "nav");
    CHECK(obs["session_id"] == sid);

    for (Action a : gt_action_stream(corpus()[0].routes)) post(c, base + "/actions", {{"action", name(a)}}, 200);
    post(c, base + "/actions", {{"action", "left"}}, 409);
    const auto score = get(c, base + "/score", 200);
    CHECK(score["totals"]["ctc"]["0"] == 1.0);

    const auto log = get(c, base + "/log", 200);
    EpisodeEntry e = *entry(0);
    const SimState replayed = replay_session(e, SessionMode::Free, actions_from_json(log["actions"]));
    CHECK(json(score_episode(e.spec, e.gt, replayed.trajectories)) == score);
    CHECK(get(c, base, 200)["done"] == true);
}

TEST_CASE("HTTP: write-mode authoring and follower verification") {
    Server srv;
    auto c = srv.client();
    const std::string ep = corpus()[1].spec.id;
    const std::string base = "/sessions/" + post(c, "/sessions", {{"mode", "write"}, {"episode_id", ep}}, 201)["session_id"].get<std::string>();
    const auto bad = post(c, base + "/instructions", {{"phase", "asm"}, {"turn", 1}, {"text", "Put it in the black outline"}}, 422);
    CHECK(bad["violations"][0]["rule_id"] == "outline_forbidden");
    post(c, base + "/instructions", {{"phase", "sideways"}, {"turn", 1}, {"text", "x"}}, 400);
    get(c, base + "/instructions", 409);
    const auto& ins = corpus()[1].instructions;
    for (int t = 1; t <= 2; ++t) {
        const auto i = static_cast<std::size_t>(t - 1);
        post(c, base + "/instructions", {{"phase", "nav"}, {"turn", t}, {"text", ins.nav[i]}}, 200);
        post(c, base + "/instructions", {{"phase", "asm"}, {"turn", t}, {"text", ins.assembly[i]}}, 200);
    }
    CHECK(get(c, base + "/instructions", 200)["validated"] == true);

    const auto f1 = post(c, base + "/followers",
                         {{"follower_id", "a"}, {"ndtw_turn1", 0.2}, {"ndtw_turn2", 0.9}, {"ptc_turn1", 1}, {"ptc_turn2", 1}}, 200);
    CHECK(f1["passed"] == false);
    const auto f2 = post(c, base + "/followers",
                         {{"follower_id", "b"}, {"ndtw_turn1", 0.21}, {"ndtw_turn2", 0.9}, {"ptc_turn1", 1}, {"ptc_turn2", 1}}, 200);
    CHECK(f2["passed"] == true);
    CHECK(f2["followers"].size() == 2);
    post(c, base + "/followers", {{"follower_id", "c"}}, 400);
    CHECK(post(c, base + "/flags", {{"flags", {"unclear"}}}, 200)["flags"].size() == 1);

    const auto v = post(c, "/validate", {{"phase", "asm"}, {"text", "Place it on the corner tile"}}, 200);
    CHECK(v["blocking"] == true);
    CHECK(v["violations"].size() == 2);
    const auto turn = post(c, "/validate",
                           {{"phase", "nav"}, {"text", "Walk past the bench and pick up the dotted red tv"}, {"gt_actions", {"right", "forward", "end"}}},
                           200);
    CHECK(turn["violations"][0]["rule_id"] == "turn_required");
    post(c, "/validate", {{"phase", "nav"}, {"text", "x"}, {"gt_actions", {"fly"}}}, 400);
    CHECK(post(c, "/verify", {{"followers", {{{"ndtw_turn1", 0.5}, {"ndtw_turn2", 0.5}, {"ptc_turn1", 1}, {"ptc_turn2", 1}}}}}, 200)["passed"] == true);
    post(c, "/verify", {{"followers", nlohmann::json::array()}}, 422);
}

TEST_CASE("HTTP: server-sent events") {
    Server srv;
    auto c = srv.client();
    const std::string ep = corpus()[2].spec.id;
    const std::string sid = post(c, "/sessions", {{"mode", "free"}, {"episode_id", ep}}, 201)["session_id"];
    const std::string base = "/sessions/" + sid;
    post(c, base + "/actions", {{"action", "left"}}, 200);
    post(c, base + "/actions", {{"action", "right"}}, 200);

    auto r = c.Get(base + "/events?follow=0");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Content-Type").find("text/event-stream") == 0);
    auto frames = parse_sse(r->body);
    REQUIRE(frames.size() == 3);
    CHECK(frames[0].id == 1);
    CHECK(frames[0].type == "session_created");
    CHECK(frames[2].type == "action");
    CHECK(frames[2].data["action"] == "right");

    auto resumed = c.Get(base + "/events?follow=0&after=2");
    REQUIRE(resumed);
    frames = parse_sse(resumed->body);
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].id == 3);
    auto by_header = c.Get(base + "/events?follow=0", {{"Last-Event-ID", "1"}});
    REQUIRE(by_header);
    CHECK(parse_sse(by_header->body).size() == 2);
    auto bad = c.Get(base + "/events?after=zz");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    auto missing = c.Get("/sessions/nope/events");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    // A following stream sees live actions and closes once the episode is done.
    std::string streamed;
    std::thread reader([&] {
        auto rc = srv.client();
        auto res = rc.Get(base + "/events?after=3&wait_ms=100");
        if (res) streamed = res->body;
    });
    auto writer = srv.client();
    const auto stream = gt_action_stream(corpus()[2].routes);
    // left then right restored the start pose, so the ground truth still completes
    for (Action a : stream) post(writer, base + "/actions", {{"action", name(a)}}, 200);
    reader.join();
    frames = parse_sse(streamed);
    REQUIRE_FALSE(frames.empty());
    CHECK(frames.front().id == 4);
    CHECK(frames.back().data["done"] == true);
    for (std::size_t i = 1; i < frames.size(); ++i) CHECK(frames[i].id == frames[i - 1].id + 1);
}
