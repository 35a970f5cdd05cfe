#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "arramon/metrics.h"
#include "arramon/routes.h"
#include "arramon/sim.h"
#include "arramon/validator.h"
#include "arramon/worldgen.h"

namespace arramon {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

void to_json(json& j, const Cell& c);
void from_json(const json& j, Cell& c);
void to_json(json& j, const Vec2& v);
void from_json(const json& j, Vec2& v);
void to_json(json& j, const ObjectSpec& o);
void from_json(const json& j, ObjectSpec& o);
void to_json(json& j, const PlacedObject& o);
void from_json(const json& j, PlacedObject& o);
void to_json(json& j, const Landmark& l);
void from_json(const json& j, Landmark& l);
void to_json(json& j, const AgentPose& p);
void from_json(const json& j, AgentPose& p);
void to_json(json& j, const SectionRect& s);
void from_json(const json& j, SectionRect& s);
void to_json(json& j, const WorldConfig& c);
void from_json(const json& j, WorldConfig& c);
void to_json(json& j, const CityMap& m);
void from_json(const json& j, CityMap& m);
void to_json(json& j, const TurnSpec& t);
void from_json(const json& j, TurnSpec& t);
void to_json(json& j, const EpisodeSpec& e);
void from_json(const json& j, EpisodeSpec& e);
void to_json(json& j, const GroundTruthRoute& r);
void from_json(const json& j, GroundTruthRoute& r);
void to_json(json& j, const AssemblyRoute& r);
void from_json(const json& j, AssemblyRoute& r);
void to_json(json& j, const EpisodeRoutes& r);
void from_json(const json& j, EpisodeRoutes& r);
void to_json(json& j, const EndEvent& e);
void from_json(const json& j, EndEvent& e);
void to_json(json& j, const Observation& o);
void to_json(json& j, const PhaseEvent& e);
void to_json(json& j, const Violation& v);
void to_json(json& j, const MetricReport& r);
void to_json(json& j, const AssemblyRoom& r);

json actions_to_json(std::span<const Action> actions);
std::vector<Action> actions_from_json(const json& j);

/// Episode file: the EpisodeSpec plus its ground-truth routes under "gt".
struct EpisodeFile {
    EpisodeSpec episode;
    EpisodeRoutes gt;
};

json episode_file_json(const EpisodeSpec& episode, const EpisodeRoutes& gt);
EpisodeFile parse_episode_file(const json& j);
void save_episode(const std::filesystem::path& path, const EpisodeSpec& episode, const EpisodeRoutes& gt);
EpisodeFile load_episode(const std::filesystem::path& path);
/// Every *.json file in `dir`, sorted by file name.
std::vector<std::filesystem::path> list_episode_files(const std::filesystem::path& dir);

/// One line per recorded pose {t, x, y, heading, action, phase, turn} (the
/// first line of each phase has a null action), then one line per phase
/// carrying {phase, turn, end}.
void write_trajectory_jsonl(std::ostream& out, std::span<const Trajectory> trajectories);
std::vector<Trajectory> read_trajectory_jsonl(std::istream& in);

/// Accepts a JSON array of action names or one name per line.
std::vector<Action> read_actions(std::istream& in);

} // namespace arramon
