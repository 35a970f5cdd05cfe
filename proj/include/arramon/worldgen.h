#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arramon/geometry.h"
#include "arramon/grid.h"
#include "arramon/objects.h"

namespace arramon {

/// Axis-aligned city section. Cells [x0, x0+width) x [y0, y0+height).
struct SectionRect {
    int id = 0;
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;

    bool contains(Cell c) const { return c.x >= x0 && c.y >= y0 && c.x < x0 + width && c.y < y0 + height; }
    bool overlaps(const SectionRect& o) const {
        return x0 < o.x0 + o.width && o.x0 < x0 + width && y0 < o.y0 + o.height && o.y0 < y0 + height;
    }
    bool operator==(const SectionRect&) const = default;
};

inline constexpr int kSectionCount = 7;

struct WorldConfig {
    int width = 64;
    int height = 64;
    std::vector<SectionRect> sections = default_sections();
    int street_spacing_min = 4;
    int street_spacing_max = 6;
    double landmark_density = 0.25; ///< per curb cell
    double banner_density = 0.12;   ///< per street-facing building cell
    int ambient_objects_per_section = 8;

    bool operator==(const WorldConfig&) const = default;

    /// Seven 20x20 sections on a 3x3 lattice of slots, one-cell gaps.
    static std::vector<SectionRect> default_sections();
};

struct PlacedObject {
    ObjectSpec spec;
    Cell cell;

    bool operator==(const PlacedObject&) const = default;
};

struct CityMap {
    std::uint64_t seed = 0;
    WorldConfig cfg;
    OccupancyGrid grid;
    std::vector<Landmark> landmarks;
    std::vector<PlacedObject> placed_objects;

    bool operator==(const CityMap&) const = default;

    const SectionRect& section(int id) const;
    /// Section id containing `c`, or 0.
    int section_of(Cell c) const;
};

/// Throws ConfigError when the map is smaller than 40x40, a section is
/// outside the map or smaller than 18x18, sections overlap, or there are not
/// exactly seven of them.
void validate_world_config(const WorldConfig& cfg);

CityMap generate_city(std::uint64_t seed, const WorldConfig& cfg = {});

/// Fraction of a section's walkable cells in its largest 4-connected
/// walkable component (1.0 for a fully connected street network).
double largest_component_fraction(const CityMap& map, int section_id);

// --- Assembly room ------------------------------------------------------

enum class WallSide { North, East, South, West };
enum class WallTexture { Wood, Brick, Spotted, Striped };

std::string_view name(WallTexture t);
std::optional<WallTexture> parse_wall_texture(std::string_view s);

/// The 4-column by 5-row grid room. Columns run along +x, rows along +y.
struct AssemblyRoom {
    static constexpr int kColumns = 4;
    static constexpr int kRows = 5;
    static constexpr int kCells = kColumns * kRows;

    /// Indexed by WallSide.
    std::array<WallTexture, 4> walls{WallTexture::Wood, WallTexture::Brick, WallTexture::Spotted, WallTexture::Striped};
    Cell start_cell{0, 2};
    int start_heading = 90; ///< facing the brick (east) wall
    std::array<std::vector<ObjectSpec>, kCells> stacks;

    bool operator==(const AssemblyRoom&) const = default;

    static bool inside(Cell c) { return c.x >= 0 && c.y >= 0 && c.x < kColumns && c.y < kRows; }
    static Cell cell_at(int index) { return {index % kColumns, index / kColumns}; }
    static int index_of(Cell c) { return c.y * kColumns + c.x; }

    const std::vector<ObjectSpec>& stack(Cell c) const { return stacks[static_cast<std::size_t>(index_of(c))]; }
    std::vector<ObjectSpec>& stack(Cell c) { return stacks[static_cast<std::size_t>(index_of(c))]; }
    bool occupied(Cell c) const { return !stack(c).empty(); }

    WallTexture wall(WallSide s) const { return walls[static_cast<std::size_t>(s)]; }
    /// Wall side a cardinal heading faces.
    static WallSide side_for_heading(int heading);
    /// Is `c` the row/column touching wall `s`.
    static bool touches(Cell c, WallSide s);

    /// Removes every object whose id starts with "decoy".
    void clear_decoys();
};

struct AgentPose {
    double x = 0.0;
    double y = 0.0;
    int heading = 0;

    bool operator==(const AgentPose&) const = default;
    Vec2 position() const { return {x, y}; }
    Cell cell() const { return cell_of(position()); }

    static AgentPose at(Cell c, int heading) { return {c.x + 0.5, c.y + 0.5, heading}; }
};

struct TurnSpec {
    ObjectSpec target;
    Cell target_cell;
    std::vector<PlacedObject> distracters;
    Cell assembly_target_cell;
    std::vector<PlacedObject> decoys;

    bool operator==(const TurnSpec&) const = default;
};

struct StepBudget {
    int navigation = 300;
    int assembly = 50;

    bool operator==(const StepBudget&) const = default;
};

struct EpisodeSpec {
    std::string id;
    std::uint64_t seed = 0;
    std::uint64_t world_seed = 0;
    WorldConfig world_cfg;
    int section_id = 1;
    AgentPose start_pose;
    std::array<TurnSpec, 2> turns;
    StepBudget budget;

    bool operator==(const EpisodeSpec&) const = default;

    /// Every collectible the episode adds to the city (targets + distracters).
    std::vector<PlacedObject> episode_objects() const;
};

struct EpisodeConfig {
    int distracters_per_turn = 3;
    int min_path_cells = 8;  ///< shortest-path cells start -> target, inclusive
    int max_path_cells = 40;
    double exclusion_radius = 2.0; ///< no other collectible this close to a target
    double stack_probability = 0.25; ///< turn-2 assembly target on top of turn 1's
    StepBudget budget;
};

/// Throws PlacementError when the section cannot host the episode.
EpisodeSpec sample_episode(const CityMap& map, int section_id, std::uint64_t seed, const EpisodeConfig& cfg = {});

struct DecoyRequest {
    Cell target_cell;
    /// Decoys are never attribute-identical to any of these.
    std::vector<ObjectSpec> avoid;
    /// Guarantee one decoy 4-adjacent to the target cell (a unique reference
    /// for relation-based assembly instructions). Ignored when the target
    /// cell is already occupied.
    bool adjacent_reference = true;
    int count = 8;
};

/// Places `count` decoys with pairwise-distinct attributes on distinct free
/// cells, leaving the start and target cells free. Throws PlacementError if
/// fewer than `count` free cells remain.
AssemblyRoom place_decoys(AssemblyRoom room, const DecoyRequest& request, std::uint64_t seed);

} // namespace arramon
