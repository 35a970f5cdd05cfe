#include "arramon/service/session.h"

#include <algorithm>
#include <set>

#include "arramon/error.h"
#include "arramon/serialize.h"

namespace arramon {

using nlohmann::json;

std::string_view name(SessionMode m) {
    switch (m) {
    case SessionMode::Write: return "write";
    case SessionMode::Follow: return "follow";
    case SessionMode::Free: return "free";
    }
    return "free";
}

std::optional<SessionMode> parse_session_mode(std::string_view s) {
    for (SessionMode m : {SessionMode::Write, SessionMode::Follow, SessionMode::Free}) {
        if (name(m) == s) return m;
    }
    return std::nullopt;
}

Reply error_reply(int status, const std::string& message, json extra) {
    extra["error"] = message;
    return {status, std::move(extra)};
}

// ---------------------------------------------------------------- store

std::shared_ptr<const CityMap> EpisodeStore::city_for(const EpisodeSpec& spec) {
    const std::string key = std::to_string(spec.world_seed) + ":" + json(spec.world_cfg).dump();
    auto it = cities_.find(key);
    if (it != cities_.end()) return it->second;
    auto city = std::make_shared<const CityMap>(generate_city(spec.world_seed, spec.world_cfg));
    cities_.emplace(key, city);
    return city;
}

void EpisodeStore::add(EpisodeSpec spec, EpisodeRoutes gt, std::optional<EpisodeInstructions> instructions) {
    auto e = std::make_shared<EpisodeEntry>();
    e->city = city_for(spec);
    e->spec = std::move(spec);
    e->gt = std::move(gt);
    e->instructions = std::move(instructions);
    entries_[e->spec.id] = std::move(e);
}

EpisodeStore EpisodeStore::load_dir(const std::filesystem::path& dir) {
    EpisodeStore store;
    std::map<std::string, EpisodeInstructions> texts;
    const auto sets_path = dir / "instructions.jsonl";
    if (std::filesystem::exists(sets_path)) {
        for (const auto& s : read_jsonl(sets_path)) {
            if (!s.validated || texts.count(s.episode_ref)) continue;
            texts[s.episode_ref] = {s.nav_instructions, s.asm_instructions};
        }
    }
    for (const auto& path : list_episode_files(dir)) {
        EpisodeFile f = load_episode(path);
        std::optional<EpisodeInstructions> ins;
        if (auto it = texts.find(f.episode.id); it != texts.end()) ins = it->second;
        store.add(std::move(f.episode), std::move(f.gt), std::move(ins));
    }
    return store;
}

std::shared_ptr<const EpisodeEntry> EpisodeStore::find(const std::string& id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : it->second;
}

std::vector<std::string> EpisodeStore::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, e] : entries_) out.push_back(id);
    return out;
}

// ---------------------------------------------------------------- actions

namespace {

bool on_guide(const GroundTruthRoute& route, Cell c) {
    if (std::find(route.cells.begin(), route.cells.end(), c) != route.cells.end()) return true;
    return std::any_of(route.points.begin(), route.points.end(), [&](Vec2 p) { return cell_of(p) == c; });
}

std::size_t turn_index(const SimState& s) { return static_cast<std::size_t>(s.turn - 1); }

} // namespace

std::optional<StepResult> apply_action(SimState& s, const EpisodeEntry& episode, SessionMode mode, Action a) {
    if (s.done) throw StateError("episode already finished");
    if (mode != SessionMode::Write) return step(s, a);
    const std::size_t t = turn_index(s);
    if (s.phase == Phase::Navigation) {
        if (a == Action::Forward) {
            const Vec2 next = s.pose.position() + heading_vector(s.pose.heading);
            if (!on_guide(episode.gt.nav[t], cell_of(next))) return std::nullopt;
        }
        return nav_step(s, a);
    }
    if (a == Action::End) return asm_step(s, a, episode.spec.turns[t].assembly_target_cell);
    return asm_step(s, a);
}

SimState replay_session(const EpisodeEntry& episode, SessionMode mode, std::span<const Action> actions) {
    SimState s = reset(episode.spec, episode.city);
    for (Action a : actions) {
        if (s.done) break;
        apply_action(s, episode, mode, a);
    }
    return s;
}

// ---------------------------------------------------------------- session

Session::Session(std::string id, SessionMode mode, std::shared_ptr<const EpisodeEntry> episode)
    : id_(std::move(id)), mode_(mode), episode_(std::move(episode)), state_(reset(episode_->spec, episode_->city)) {
    push_event("session_created", {{"session_id", id_}, {"mode", name(mode_)}, {"episode_id", episode_->spec.id}});
}

json Session::observation_json() const {
    json j = observe(state_);
    j["session_id"] = id_;
    j["mode"] = name(mode_);
    j["episode_id"] = episode_->spec.id;
    j["section_id"] = episode_->spec.section_id;
    j["done"] = state_.done;
    j["pose"] = state_.pose;
    j["steps_used"] = state_.steps_used;
    const std::size_t t = turn_index(state_);
    if (state_.phase == Phase::Assembly) {
        j["room"] = state_.room;
        const Cell d = cardinal_step(state_.pose.heading);
        const Cell here = state_.pose.cell();
        const Cell ahead{here.x + d.x, here.y + d.y};
        j["placement_preview"] = AssemblyRoom::inside(ahead) ? ahead : here;
    }
    if (mode_ == SessionMode::Write && state_.phase == Phase::Navigation && !state_.done) {
        j["guide"] = episode_->gt.nav[t].points;
    }
    if (mode_ == SessionMode::Follow && episode_->instructions && !state_.done) {
        const auto& ins = *episode_->instructions;
        j["instruction"] = state_.phase == Phase::Navigation ? ins.nav[t] : ins.assembly[t];
    }
    return j;
}

void Session::push_event(std::string type, json data) {
    SessionEvent e;
    e.seq = static_cast<long>(log_.size()) + 1;
    e.type = std::move(type);
    e.data = std::move(data);
    log_.push_back(std::move(e));
    cv_.notify_all();
}

std::optional<Reply> Session::cached(const std::string& request_id) const {
    if (request_id.empty()) return std::nullopt;
    auto it = replies_.find(request_id);
    if (it == replies_.end()) return std::nullopt;
    return it->second;
}

Reply Session::remember(const std::string& request_id, Reply r) {
    if (!request_id.empty()) replies_[request_id] = r;
    return r;
}

Reply Session::observation() const {
    std::lock_guard lock(mu_);
    return {200, observation_json()};
}

Reply Session::post_action(Action a, const std::string& request_id) {
    std::lock_guard lock(mu_);
    if (auto r = cached(request_id)) return *r;
    if (state_.done) return remember(request_id, error_reply(409, "episode already finished"));

    auto result = apply_action(state_, *episode_, mode_, a);
    json body;
    body["action"] = name(a);
    body["accepted"] = result.has_value();
    if (result) {
        actions_.push_back(a);
        body["phase_done"] = result->phase_done;
        body["phase_events"] = result->events;
    } else {
        body["reason"] = "off_guide";
        body["phase_done"] = false;
        body["phase_events"] = json::array();
    }
    body["done"] = state_.done;
    body["observation"] = observation_json();
    push_event("action", body);
    return remember(request_id, {200, body});
}

Reply Session::submit_instruction(Phase phase, int turn, const std::string& text, const std::string& request_id) {
    std::lock_guard lock(mu_);
    if (auto r = cached(request_id)) return *r;
    if (mode_ != SessionMode::Write) return remember(request_id, error_reply(409, "instructions are written in write mode"));
    if (turn < 1 || turn > 2) return remember(request_id, error_reply(400, "turn must be 1 or 2"));
    const auto t = static_cast<std::size_t>(turn - 1);
    std::span<const Action> gt;
    if (phase == Phase::Navigation) gt = episode_->gt.nav[t].actions;
    const auto violations = validate(text, phase, gt);
    json body{{"violations", violations}, {"phase", name(phase)}, {"turn", turn}};
    if (has_blocking(violations)) {
        body["stored"] = false;
        return remember(request_id, {422, body});
    }
    authored_[{static_cast<int>(phase), turn}] = text;
    body["stored"] = true;
    for (const auto& v : violations) push_event("notify", {{"rule_id", v.rule_id}, {"message", v.message}});
    push_event("instruction", {{"phase", name(phase)}, {"turn", turn}, {"text", text}});
    return remember(request_id, {200, body});
}

Reply Session::score() {
    std::lock_guard lock(mu_);
    if (!state_.done) return error_reply(409, "episode not complete");
    if (!report_) {
        report_ = score_episode(episode_->spec, episode_->gt, state_.trajectories);
        push_event("score", json(*report_));
    }
    return {200, json(*report_)};
}

Reply Session::set_flags(const std::vector<std::string>& flags, const std::string& request_id) {
    std::lock_guard lock(mu_);
    if (auto r = cached(request_id)) return *r;
    for (const auto& f : flags) {
        if (std::find(flags_.begin(), flags_.end(), f) == flags_.end()) flags_.push_back(f);
    }
    push_event("flags", {{"flags", flags_}});
    return remember(request_id, {200, {{"flags", flags_}}});
}

Reply Session::add_follower(const FollowerResult& r, const std::string& request_id) {
    std::lock_guard lock(mu_);
    if (auto c = cached(request_id)) return *c;
    followers_.push_back(r);
    json list = json::array();
    for (const auto& f : followers_) {
        list.push_back({{"follower_id", f.follower_id},
                        {"ndtw_turn1", f.ndtw_turn1},
                        {"ndtw_turn2", f.ndtw_turn2},
                        {"ptc_turn1", f.ptc_turn1},
                        {"ptc_turn2", f.ptc_turn2}});
    }
    json body{{"followers", list}, {"passed", verify_filter(followers_)}};
    push_event("follower", body);
    return remember(request_id, {200, body});
}

Reply Session::summary() const {
    std::lock_guard lock(mu_);
    json j{{"session_id", id_},
           {"mode", name(mode_)},
           {"episode_id", episode_->spec.id},
           {"done", state_.done},
           {"phase", name(state_.phase)},
           {"turn", state_.turn},
           {"actions", actions_to_json(actions_)},
           {"flags", flags_},
           {"events", static_cast<long>(log_.size())}};
    if (report_) j["report"] = *report_;
    return {200, j};
}

Reply Session::instruction_set() const {
    std::lock_guard lock(mu_);
    InstructionSet s;
    s.id = id_;
    s.episode_ref = episode_->spec.id;
    s.section_id = episode_->spec.section_id;
    s.validated = true;
    s.followers = followers_;
    for (int turn = 1; turn <= 2; ++turn) {
        const auto t = static_cast<std::size_t>(turn - 1);
        auto nav = authored_.find({static_cast<int>(Phase::Navigation), turn});
        auto as = authored_.find({static_cast<int>(Phase::Assembly), turn});
        if (nav == authored_.end() || as == authored_.end()) return error_reply(409, "instructions incomplete");
        s.nav_instructions[t] = nav->second;
        s.asm_instructions[t] = as->second;
    }
    return {200, to_record(s)};
}

std::vector<SessionEvent> Session::events_after(long after, std::chrono::milliseconds wait) const {
    std::unique_lock lock(mu_);
    if (wait.count() > 0) {
        cv_.wait_for(lock, wait, [&] { return static_cast<long>(log_.size()) > after; });
    }
    std::vector<SessionEvent> out;
    for (const auto& e : log_) {
        if (e.seq > after) out.push_back(e);
    }
    return out;
}

bool Session::done() const {
    std::lock_guard lock(mu_);
    return state_.done;
}

std::vector<Action> Session::action_log() const {
    std::lock_guard lock(mu_);
    return actions_;
}

// ---------------------------------------------------------------- manager

Reply SessionManager::create(const std::string& mode, const std::string& episode_id, const std::string& request_id) {
    const auto m = parse_session_mode(mode);
    if (!m) return error_reply(400, "unknown mode " + mode);
    auto episode = store_->find(episode_id);
    if (!episode) return error_reply(404, "unknown episode " + episode_id);

    std::unique_lock lock(mu_);
    if (!request_id.empty()) {
        if (auto it = created_.find(request_id); it != created_.end()) {
            return {201, {{"session_id", it->second}, {"mode", mode}, {"episode_id", episode_id}}};
        }
    }
    const std::string id = "s" + std::to_string(next_++);
    sessions_[id] = std::make_shared<Session>(id, *m, std::move(episode));
    if (!request_id.empty()) created_[request_id] = id;
    return {201, {{"session_id", id}, {"mode", mode}, {"episode_id", episode_id}}};
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
    std::shared_lock lock(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::size_t SessionManager::size() const {
    std::shared_lock lock(mu_);
    return sessions_.size();
}

} // namespace arramon
