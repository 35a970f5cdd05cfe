#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arramon/routes.h"
#include "arramon/sim.h"
#include "arramon/validator.h"

namespace arramon {

struct InstructionText {
    std::string text;
    Phase phase = Phase::Navigation;
};

/// One clause of the navigation grammar.
struct NavClause {
    enum class Kind { Turn, WalkUntil, FinalAhead, FinalSide };
    Kind kind = Kind::Turn;
    int rotation = 0;       ///< Turn and FinalSide: signed 30-degree units, negative is left
    std::string reference;  ///< WalkUntil landmark, or the target for Final*
    int stop_offset = 0;    ///< WalkUntil: forward offset of the reference when stopping
    std::string passed;     ///< Final*: optional landmark passed on the way

    bool operator==(const NavClause&) const = default;
};

enum class Relation { InFront, Behind, LeftOf, RightOf, OnTop, Between, BetweenWall };

std::string_view name(Relation r);

struct AsmPlan {
    Relation relation = Relation::InFront;
    std::string carried;
    std::string reference;
    std::string second;               ///< Between only
    std::optional<WallTexture> wall;  ///< BetweenWall only

    bool operator==(const AsmPlan&) const = default;
};

/// Collectibles lying in the episode's section at the start of `turn`
/// (1 or 2), assuming turn 1 picked up its target.
std::vector<PlacedObject> collectibles_at_turn(const CityMap& map, const EpisodeSpec& episode, int turn);

/// Ground-truth room at the start of a turn's assembly phase.
AssemblyRoom room_for_turn(const EpisodeSpec& episode, int turn);

/// Throws GenerationError when some leg has no usable reference.
std::vector<NavClause> plan_nav(const CityMap& map, int section_id, std::span<const PlacedObject> collectibles,
                                const GroundTruthRoute& route, const ObjectSpec& target, std::uint64_t seed,
                                const SimConfig& sim = {});

std::string render_nav(const std::vector<NavClause>& clauses, std::uint64_t seed);

/// Unknown tokens are skipped; their count goes to `misses` when given.
std::vector<NavClause> parse_nav(std::string_view text, int* misses = nullptr);

/// Output passes validate_nav without block-severity violations.
InstructionText synth_nav_instruction(const CityMap& map, const EpisodeSpec& episode, int turn,
                                      const GroundTruthRoute& route, std::uint64_t seed, const SimConfig& sim = {});

/// Relations are read in the frame of the room's start pose. Throws
/// AmbiguityError when a reference descriptor is not unique in the room and
/// GenerationError when no relation describes the target.
std::vector<AsmPlan> asm_candidates(const AssemblyRoom& room, Cell target, const ObjectSpec& carried);

std::string render_asm(const AsmPlan& plan, std::uint64_t seed);
std::optional<AsmPlan> parse_asm(std::string_view text);

/// Target cell implied by `plan` given reference cells keyed by descriptor.
std::optional<Cell> resolve_asm(const AsmPlan& plan, const std::map<std::string, Cell>& cells,
                                int frame_heading = AssemblyRoom{}.start_heading);

InstructionText synth_asm_instruction(const AssemblyRoom& room, Cell target, const ObjectSpec& carried,
                                      std::uint64_t seed);

} // namespace arramon
