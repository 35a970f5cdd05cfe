#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arramon/action.h"
#include "arramon/worldgen.h"

namespace arramon {

struct SimConfig {
    double fov_deg = 120.0;
    double view_range = 12.0;
    double pickup_half_width = 0.5;
    double pickup_depth = 3.0;
};

enum class EntityKind { Collectible, Landmark };

struct VisibleEntity {
    EntityKind kind = EntityKind::Collectible;
    std::string id;
    std::string descriptor;
    std::optional<ObjectSpec> object;
    std::optional<Landmark> landmark;
    double range = 0.0;
    double bearing = 0.0; ///< degrees, positive to the right
    double forward = 0.0;
    double lateral = 0.0;
    bool occluded = false;
    int stack_level = 0; ///< assembly only, 0 = on the floor
};

struct Observation {
    Phase phase = Phase::Navigation;
    int turn = 1;
    int steps_remaining = 0;
    std::vector<VisibleEntity> visible; ///< sorted by range, then id
    std::vector<WallTexture> wall_view; ///< assembly only, left to right
    std::optional<ObjectSpec> carrying;
};

struct EndEvent {
    std::optional<ObjectSpec> picked;
    std::optional<Cell> placed_cell;
    bool forced = false;

    bool operator==(const EndEvent&) const = default;
};

/// One phase of one turn.
struct Trajectory {
    Phase phase = Phase::Navigation;
    int turn = 1;
    std::vector<Vec2> points;
    std::vector<int> headings;
    std::vector<Action> actions;
    EndEvent end;
    bool finished = false;

    bool operator==(const Trajectory&) const = default;
};

struct PhaseEvent {
    enum class Kind { Picked, Placed, PhaseStarted, EpisodeDone };
    Kind kind = Kind::PhaseStarted;
    Phase phase = Phase::Navigation;
    int turn = 1;
    std::optional<ObjectSpec> object;
    std::optional<Cell> cell;
    bool forced = false;
};

std::string_view name(PhaseEvent::Kind k);

struct SimState {
    std::shared_ptr<const CityMap> city;
    EpisodeSpec episode;
    SimConfig cfg;

    Phase phase = Phase::Navigation;
    int turn = 1;
    AgentPose pose;
    std::optional<ObjectSpec> inventory;
    std::vector<PlacedObject> collectibles; ///< still lying in the city
    AssemblyRoom room;
    int steps_used = 0;
    bool done = false;
    /// Navigation pose at the end of the latest navigation phase; the next
    /// turn resumes from here.
    AgentPose resume_pose;
    /// nav1, asm1, nav2, asm2 in order; the last one is live until done.
    std::vector<Trajectory> trajectories;

    int budget() const { return phase == Phase::Navigation ? episode.budget.navigation : episode.budget.assembly; }
    Trajectory& current() { return trajectories.back(); }
    const Trajectory& current() const { return trajectories.back(); }
};

struct StepResult {
    Observation observation;
    bool phase_done = false;
    bool done = false;
    std::vector<PhaseEvent> events;
};

SimState reset(const EpisodeSpec& episode, std::shared_ptr<const CityMap> city, const SimConfig& cfg = {});

/// Regenerates the city from the episode's world seed and config.
SimState reset(const EpisodeSpec& episode, const SimConfig& cfg = {});

StepResult nav_step(SimState& state, Action a);

/// `place_override` redirects an End placement (used to snap write-mode
/// placements onto the ground-truth cell). End with an empty inventory ends
/// the phase without placing anything.
StepResult asm_step(SimState& state, Action a, std::optional<Cell> place_override = {});

/// Dispatches on the current phase. Throws StateError once the episode is done.
StepResult step(SimState& state, Action a);

/// Nearest object inside the pick-up rectangle in front of `pose`.
std::optional<PlacedObject> pickup_check(const AgentPose& pose, std::span<const PlacedObject> objects,
                                         const SimConfig& cfg = {});

/// Puts the carried object one cell ahead, or at the agent's cell when that
/// is outside the room. Ends the assembly phase.
void place(SimState& state, std::optional<Cell> override_cell = {}, bool forced = false);

/// Budget fallback: nearest collectible in navigation, place() in assembly.
void forced_finalize(SimState& state);

Observation observe(const SimState& state);

/// Inside the field of view and view range (occlusion not considered).
bool in_view(const AgentPose& pose, Vec2 p, const SimConfig& cfg = {});

/// True when a blocked cell other than the two endpoint cells lies on the
/// segment from `from` to `to`. Cells touched only at a corner do not count.
bool line_blocked(const OccupancyGrid& grid, Vec2 from, Vec2 to);

/// Replays actions from reset; stops early once the episode is done.
SimState replay(const EpisodeSpec& episode, std::shared_ptr<const CityMap> city, std::span<const Action> actions,
                const SimConfig& cfg = {});

} // namespace arramon
