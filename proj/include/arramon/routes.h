#pragma once

#include <array>
#include <optional>
#include <vector>

#include "arramon/action.h"
#include "arramon/worldgen.h"

namespace arramon {

/// Navigation ground truth for one turn: from the start pose to the cell in
/// front of the target, ending with a rotation to face it.
struct GroundTruthRoute {
    std::vector<Cell> cells;
    std::vector<Vec2> points;
    std::vector<Action> actions;
    AgentPose start;
    AgentPose end; ///< pick-up pose
    Cell target;

    bool operator==(const GroundTruthRoute&) const = default;
};

/// Assembly ground truth: shortest action sequence from the room's start
/// pose to a pose whose cell ahead is the target, then End.
struct AssemblyRoute {
    Cell target;
    AgentPose approach;
    std::vector<Vec2> points;
    std::vector<Action> actions;

    bool operator==(const AssemblyRoute&) const = default;
};

struct EpisodeRoutes {
    std::array<GroundTruthRoute, 2> nav;
    std::array<AssemblyRoute, 2> assembly;

    bool operator==(const EpisodeRoutes&) const = default;
};

GroundTruthRoute nav_route(const OccupancyGrid& grid, const AgentPose& start, Cell target);

/// Throws PlacementError when the target is the start cell.
AssemblyRoute assembly_route(Cell target, Cell start_cell = AssemblyRoom{}.start_cell,
                             int start_heading = AssemblyRoom{}.start_heading);

/// Turn 2 navigation starts at turn 1's pick-up pose.
EpisodeRoutes gt_route_for_episode(const CityMap& map, const EpisodeSpec& episode);

/// nav1, asm1, nav2, asm2 concatenated.
std::vector<Action> gt_action_stream(const EpisodeRoutes& routes);

} // namespace arramon
