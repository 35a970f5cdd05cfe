#pragma once

#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "arramon/agents.h"
#include "arramon/dataset.h"
#include "arramon/metrics.h"
#include "arramon/validator.h"

namespace arramon {

enum class SessionMode { Write, Follow, Free };

std::string_view name(SessionMode m);
std::optional<SessionMode> parse_session_mode(std::string_view s);

/// Immutable episode data shared by every session that plays it.
struct EpisodeEntry {
    EpisodeSpec spec;
    EpisodeRoutes gt;
    std::shared_ptr<const CityMap> city;
    std::optional<EpisodeInstructions> instructions; ///< shown in follow mode
};

/// Episodes loaded once at startup. Reads are lock-free after construction.
class EpisodeStore {
  public:
    EpisodeStore() = default;
    /// Every episode file in `dir`, plus `instructions.jsonl` when present
    /// (the first validated set per episode_ref wins).
    static EpisodeStore load_dir(const std::filesystem::path& dir);

    void add(EpisodeSpec spec, EpisodeRoutes gt, std::optional<EpisodeInstructions> instructions = {});
    std::shared_ptr<const EpisodeEntry> find(const std::string& id) const;
    std::vector<std::string> ids() const;
    std::size_t size() const { return entries_.size(); }

  private:
    std::shared_ptr<const CityMap> city_for(const EpisodeSpec& spec);

    std::map<std::string, std::shared_ptr<const EpisodeEntry>> entries_;
    std::map<std::string, std::shared_ptr<const CityMap>> cities_;
};

/// Server-push event with a per-session sequence number starting at 1.
struct SessionEvent {
    long seq = 0;
    std::string type;
    nlohmann::json data;
};

/// Result of a service call in wire form.
struct Reply {
    int status = 200;
    nlohmann::json body;
};

/// Write mode: the ground-truth route is the guide and Forward steps off it
/// are rejected; placements snap to the ground-truth cell.
class Session {
  public:
    Session(std::string id, SessionMode mode, std::shared_ptr<const EpisodeEntry> episode);

    const std::string& id() const { return id_; }
    SessionMode mode() const { return mode_; }

    Reply observation() const;
    Reply post_action(Action a, const std::string& request_id = {});
    Reply submit_instruction(Phase phase, int turn, const std::string& text, const std::string& request_id = {});
    Reply score();
    Reply set_flags(const std::vector<std::string>& flags, const std::string& request_id = {});
    Reply add_follower(const FollowerResult& r, const std::string& request_id = {});
    Reply summary() const;
    /// Authored instructions as a dataset record (write mode, all four set).
    Reply instruction_set() const;

    /// Events with seq > `after`; blocks up to `wait` for new ones.
    std::vector<SessionEvent> events_after(long after, std::chrono::milliseconds wait = {}) const;
    bool done() const;
    /// Every accepted action in order.
    std::vector<Action> action_log() const;

  private:
    nlohmann::json observation_json() const;
    void push_event(std::string type, nlohmann::json data);
    std::optional<Reply> cached(const std::string& request_id) const;
    Reply remember(const std::string& request_id, Reply r);

    std::string id_;
    SessionMode mode_;
    std::shared_ptr<const EpisodeEntry> episode_;

    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    SimState state_;
    std::vector<Action> actions_;
    std::vector<SessionEvent> log_;
    std::map<std::pair<int, int>, std::string> authored_; ///< (phase, turn) -> text
    std::vector<std::string> flags_;
    std::vector<FollowerResult> followers_;
    std::optional<MetricReport> report_;
    std::map<std::string, Reply> replies_;
};

/// Applies one action with the mode's rules. Returns nullopt when write
/// mode rejects a Forward off the guide.
std::optional<StepResult> apply_action(SimState& state, const EpisodeEntry& episode, SessionMode mode, Action a);

/// Offline replay of a session's action log.
SimState replay_session(const EpisodeEntry& episode, SessionMode mode, std::span<const Action> actions);

class SessionManager {
  public:
    explicit SessionManager(std::shared_ptr<const EpisodeStore> store) : store_(std::move(store)) {}

    const EpisodeStore& store() const { return *store_; }
    /// 404 for an unknown episode, 400 for an unknown mode.
    Reply create(const std::string& mode, const std::string& episode_id, const std::string& request_id = {});
    std::shared_ptr<Session> find(const std::string& id) const;
    std::size_t size() const;

  private:
    std::shared_ptr<const EpisodeStore> store_;
    mutable std::shared_mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::map<std::string, std::string> created_; ///< request id -> session id
    long next_ = 1;
};

/// Error body {"error": message} plus optional extra fields.
Reply error_reply(int status, const std::string& message, nlohmann::json extra = nlohmann::json::object());

} // namespace arramon
