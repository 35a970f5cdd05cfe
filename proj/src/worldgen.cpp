#include "arramon/worldgen.h"

#include <algorithm>
#include <deque>
#include <set>
#include <unordered_set>

#include "arramon/error.h"
#include "arramon/pathfinding.h"
#include "arramon/rng.h"

namespace arramon {

namespace {

constexpr std::array<Cell, 4> kNeighbors{{{0, 1}, {1, 0}, {0, -1}, {-1, 0}}};

std::vector<Cell> section_cells(const SectionRect& s) {
    std::vector<Cell> out;
    out.reserve(static_cast<std::size_t>(s.width * s.height));
    for (int y = s.y0; y < s.y0 + s.height; ++y) {
        for (int x = s.x0; x < s.x0 + s.width; ++x) out.push_back({x, y});
    }
    return out;
}

std::vector<int> street_lines(Rng& rng, int origin, int extent, int spacing_min, int spacing_max) {
    std::vector<int> lines;
    for (int at = origin + rng.range(0, 2); at < origin + extent; at += rng.range(spacing_min, spacing_max)) {
        lines.push_back(at);
    }
    return lines;
}

void generate_section(CityMap& map, const SectionRect& s, Rng& rng) {
    const WorldConfig& cfg = map.cfg;
    const auto xs = street_lines(rng, s.x0, s.width, cfg.street_spacing_min, cfg.street_spacing_max);
    const auto ys = street_lines(rng, s.y0, s.height, cfg.street_spacing_min, cfg.street_spacing_max);
    for (Cell c : section_cells(s)) {
        const bool street = std::find(xs.begin(), xs.end(), c.x) != xs.end() || std::find(ys.begin(), ys.end(), c.y) != ys.end();
        map.grid.set_blocked(c, !street);
    }

    const auto touches = [&](Cell c, bool want_walkable) {
        for (Cell d : kNeighbors) {
            Cell nb{c.x + d.x, c.y + d.y};
            if (s.contains(nb) && map.grid.walkable(nb) == want_walkable) return true;
        }
        return false;
    };

    // Every (kind, color) and (shape, color) combination at most once per
    // section so that landmark descriptors are unique within a section.
    std::vector<int> street_combos(kStreetLandmarkKinds * 7);
    std::vector<int> banner_combos(4 * 7);
    for (std::size_t i = 0; i < street_combos.size(); ++i) street_combos[i] = static_cast<int>(i);
    for (std::size_t i = 0; i < banner_combos.size(); ++i) banner_combos[i] = static_cast<int>(i);
    rng.shuffle(street_combos);
    rng.shuffle(banner_combos);

    std::unordered_set<Cell> taken;
    int landmark_no = 0;
    for (Cell c : section_cells(s)) {
        if (map.grid.walkable(c)) {
            if (!touches(c, false) || street_combos.empty() || !rng.chance(cfg.landmark_density)) continue;
            const int combo = street_combos.back();
            street_combos.pop_back();
            Landmark lm;
            lm.kind = static_cast<LandmarkKind>(combo / 7);
            lm.color = static_cast<Color>(combo % 7);
            lm.cell = c;
            lm.id = "s" + std::to_string(s.id) + "-lm" + std::to_string(landmark_no++);
            map.landmarks.push_back(lm);
            taken.insert(c);
        } else {
            if (!touches(c, true) || banner_combos.empty() || !rng.chance(cfg.banner_density)) continue;
            const int combo = banner_combos.back();
            banner_combos.pop_back();
            Landmark lm;
            lm.kind = LandmarkKind::BannerBuilding;
            lm.shape = static_cast<BannerShape>(combo / 7);
            lm.color = static_cast<Color>(combo % 7);
            lm.cell = c;
            lm.id = "s" + std::to_string(s.id) + "-lm" + std::to_string(landmark_no++);
            map.landmarks.push_back(lm);
        }
    }

    std::vector<Cell> free_cells;
    for (Cell c : section_cells(s)) {
        if (map.grid.walkable(c) && !taken.contains(c)) free_cells.push_back(c);
    }
    rng.shuffle(free_cells);
    std::vector<int> combos(kAttributeCombinations);
    for (int i = 0; i < kAttributeCombinations; ++i) combos[static_cast<std::size_t>(i)] = i;
    rng.shuffle(combos);
    const int n = std::min<int>(cfg.ambient_objects_per_section, static_cast<int>(free_cells.size()));
    for (int i = 0; i < n; ++i) {
        PlacedObject po;
        po.spec = ObjectSpec::from_attribute_index(combos[static_cast<std::size_t>(i)],
                                                   "s" + std::to_string(s.id) + "-obj" + std::to_string(i));
        po.cell = free_cells[static_cast<std::size_t>(i)];
        map.placed_objects.push_back(po);
    }
}

} // namespace

std::vector<SectionRect> WorldConfig::default_sections() {
    std::vector<SectionRect> out;
    const int origins[3] = {1, 22, 43};
    int id = 1;
    for (int row = 0; row < 3 && id <= kSectionCount; ++row) {
        for (int col = 0; col < 3 && id <= kSectionCount; ++col) {
            out.push_back({id++, origins[col], origins[row], 20, 20});
        }
    }
    return out;
}

void validate_world_config(const WorldConfig& cfg) {
    if (cfg.width < 40 || cfg.height < 40) throw ConfigError("world must be at least 40x40 cells");
    if (static_cast<int>(cfg.sections.size()) != kSectionCount) throw ConfigError("world needs exactly seven sections");
    if (cfg.street_spacing_min < 2 || cfg.street_spacing_max < cfg.street_spacing_min) {
        throw ConfigError("invalid street spacing");
    }
    for (std::size_t i = 0; i < cfg.sections.size(); ++i) {
        const auto& s = cfg.sections[i];
        if (s.id != static_cast<int>(i) + 1) throw ConfigError("section ids must be 1..7 in order");
        if (s.width < 18 || s.height < 18) throw ConfigError("section " + std::to_string(s.id) + " smaller than 18x18");
        if (s.x0 < 0 || s.y0 < 0 || s.x0 + s.width > cfg.width || s.y0 + s.height > cfg.height) {
            throw ConfigError("section " + std::to_string(s.id) + " does not fit inside the map");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (s.overlaps(cfg.sections[j])) {
                throw ConfigError("sections " + std::to_string(cfg.sections[j].id) + " and " + std::to_string(s.id) + " overlap");
            }
        }
    }
}

const SectionRect& CityMap::section(int id) const {
    for (const auto& s : cfg.sections) {
        if (s.id == id) return s;
    }
    throw ConfigError("unknown section " + std::to_string(id));
}

int CityMap::section_of(Cell c) const {
    for (const auto& s : cfg.sections) {
        if (s.contains(c)) return s.id;
    }
    return 0;
}

CityMap generate_city(std::uint64_t seed, const WorldConfig& cfg) {
    validate_world_config(cfg);
    CityMap map;
    map.seed = seed;
    map.cfg = cfg;
    map.grid = OccupancyGrid(cfg.width, cfg.height, true);
    for (const auto& s : cfg.sections) {
        Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(s.id)));
        generate_section(map, s, rng);
    }
    return map;
}

double largest_component_fraction(const CityMap& map, int section_id) {
    const SectionRect& s = map.section(section_id);
    std::unordered_set<Cell> seen;
    int total = 0;
    int best = 0;
    for (Cell c : section_cells(s)) {
        if (!map.grid.walkable(c)) continue;
        ++total;
        if (seen.contains(c)) continue;
        int size = 0;
        std::deque<Cell> queue{c};
        seen.insert(c);
        while (!queue.empty()) {
            Cell at = queue.front();
            queue.pop_front();
            ++size;
            for (Cell d : kNeighbors) {
                Cell nb{at.x + d.x, at.y + d.y};
                if (s.contains(nb) && map.grid.walkable(nb) && seen.insert(nb).second) queue.push_back(nb);
            }
        }
        best = std::max(best, size);
    }
    return total == 0 ? 0.0 : static_cast<double>(best) / total;
}

// --- Assembly room ------------------------------------------------------

std::string_view name(WallTexture t) {
    switch (t) {
    case WallTexture::Wood:
        return "wood";
    case WallTexture::Brick:
        return "brick";
    case WallTexture::Spotted:
        return "spotted";
    case WallTexture::Striped:
        return "striped";
    }
    return "?";
}

std::optional<WallTexture> parse_wall_texture(std::string_view s) {
    for (auto t : {WallTexture::Wood, WallTexture::Brick, WallTexture::Spotted, WallTexture::Striped}) {
        if (name(t) == s) return t;
    }
    return std::nullopt;
}

WallSide AssemblyRoom::side_for_heading(int heading) {
    switch (normalize_heading(heading)) {
    case 0:
        return WallSide::North;
    case 90:
        return WallSide::East;
    case 180:
        return WallSide::South;
    case 270:
        return WallSide::West;
    default:
        throw std::invalid_argument("side_for_heading: not a cardinal heading");
    }
}

bool AssemblyRoom::touches(Cell c, WallSide s) {
    switch (s) {
    case WallSide::North:
        return c.y == kRows - 1;
    case WallSide::East:
        return c.x == kColumns - 1;
    case WallSide::South:
        return c.y == 0;
    case WallSide::West:
        return c.x == 0;
    }
    return false;
}

void AssemblyRoom::clear_decoys() {
    for (auto& st : stacks) {
        std::erase_if(st, [](const ObjectSpec& o) { return o.id.starts_with("decoy"); });
    }
}

AssemblyRoom place_decoys(AssemblyRoom room, const DecoyRequest& request, std::uint64_t seed) {
    if (!AssemblyRoom::inside(request.target_cell)) throw PlacementError("assembly target outside the room");
    std::vector<Cell> free_cells;
    for (int i = 0; i < AssemblyRoom::kCells; ++i) {
        Cell c = AssemblyRoom::cell_at(i);
        if (c == room.start_cell || c == request.target_cell || room.occupied(c)) continue;
        free_cells.push_back(c);
    }
    if (static_cast<int>(free_cells.size()) < request.count) {
        throw PlacementError("only " + std::to_string(free_cells.size()) + " free cells for " +
                             std::to_string(request.count) + " decoys");
    }

    Rng rng(seed);
    rng.shuffle(free_cells);
    if (request.adjacent_reference && !room.occupied(request.target_cell)) {
        // Move one 4-neighbor of the target to the front of the pick order.
        auto it = std::find_if(free_cells.begin(), free_cells.end(),
                               [&](Cell c) { return manhattan(c, request.target_cell) == 1; });
        if (it == free_cells.end()) throw PlacementError("no free cell adjacent to the assembly target");
        std::iter_swap(free_cells.begin(), it);
    }

    std::vector<int> combos;
    for (int i = 0; i < kAttributeCombinations; ++i) {
        ObjectSpec probe = ObjectSpec::from_attribute_index(i);
        bool clash = std::any_of(request.avoid.begin(), request.avoid.end(),
                                 [&](const ObjectSpec& o) { return o.same_attributes(probe); });
        for (const auto& st : room.stacks) {
            for (const auto& o : st) clash = clash || o.same_attributes(probe);
        }
        if (!clash) combos.push_back(i);
    }
    rng.shuffle(combos);
    if (static_cast<int>(combos.size()) < request.count) throw PlacementError("not enough distinct decoy attributes");

    for (int i = 0; i < request.count; ++i) {
        ObjectSpec spec = ObjectSpec::from_attribute_index(combos[static_cast<std::size_t>(i)], "decoy" + std::to_string(i));
        room.stack(free_cells[static_cast<std::size_t>(i)]).push_back(spec);
    }
    return room;
}

// --- Episodes -------------------------------------------------------------

std::vector<PlacedObject> EpisodeSpec::episode_objects() const {
    std::vector<PlacedObject> out;
    for (const auto& t : turns) {
        out.push_back({t.target, t.target_cell});
        out.insert(out.end(), t.distracters.begin(), t.distracters.end());
    }
    return out;
}

namespace {

struct EpisodeBuilder {
    const CityMap& map;
    const SectionRect& section;
    const EpisodeConfig& cfg;
    Rng rng;
    std::unordered_set<Cell> landmark_cells;
    std::vector<PlacedObject> occupants; // every collectible in the section

    EpisodeBuilder(const CityMap& m, const SectionRect& s, const EpisodeConfig& c, std::uint64_t seed)
        : map(m), section(s), cfg(c), rng(seed) {
        for (const auto& lm : map.landmarks) {
            if (section.contains(lm.cell)) landmark_cells.insert(lm.cell);
        }
        for (const auto& po : map.placed_objects) {
            if (section.contains(po.cell)) occupants.push_back(po);
        }
    }

    bool cell_free(Cell c) const {
        if (!section.contains(c) || !map.grid.walkable(c) || landmark_cells.contains(c)) return false;
        return std::none_of(occupants.begin(), occupants.end(), [&](const PlacedObject& o) { return o.cell == c; });
    }

    bool clear_of(Cell c, double radius) const {
        return std::none_of(occupants.begin(), occupants.end(), [&](const PlacedObject& o) {
            return distance(cell_center(o.cell), cell_center(c)) < radius;
        });
    }

    bool attributes_unused(const ObjectSpec& spec) const {
        return std::none_of(occupants.begin(), occupants.end(),
                            [&](const PlacedObject& o) { return o.spec.same_attributes(spec); });
    }

    ObjectSpec pick_target_spec(const std::string& id) {
        std::vector<int> combos;
        for (int i = 0; i < kAttributeCombinations; ++i) {
            if (attributes_unused(ObjectSpec::from_attribute_index(i))) combos.push_back(i);
        }
        if (combos.empty()) throw PlacementError("no unused attribute combination for a target");
        return ObjectSpec::from_attribute_index(rng.pick(combos), id);
    }

    Cell pick_target_cell(Cell from, const std::vector<Cell>& avoid) {
        const auto dist = bfs_distances(map.grid, from);
        std::vector<Cell> candidates;
        for (int y = section.y0; y < section.y0 + section.height; ++y) {
            for (int x = section.x0; x < section.x0 + section.width; ++x) {
                Cell c{x, y};
                const int d = dist[static_cast<std::size_t>(y * map.grid.width() + x)];
                // path cells = steps + 1
                if (d + 1 < cfg.min_path_cells || d + 1 > cfg.max_path_cells) continue;
                if (!cell_free(c) || !clear_of(c, cfg.exclusion_radius)) continue;
                if (std::find(avoid.begin(), avoid.end(), c) != avoid.end()) continue;
                candidates.push_back(c);
            }
        }
        if (candidates.empty()) throw PlacementError("no reachable target cell in section " + std::to_string(section.id));
        return rng.pick(candidates);
    }

    std::vector<PlacedObject> place_distracters(const ObjectSpec& target, const std::vector<Cell>& targets,
                                                const std::string& prefix) {
        std::vector<int> combos;
        for (int i = 0; i < kAttributeCombinations; ++i) {
            ObjectSpec probe = ObjectSpec::from_attribute_index(i);
            if (probe.shared_attributes(target) == 2 && attributes_unused(probe)) combos.push_back(i);
        }
        rng.shuffle(combos);
        std::vector<Cell> cells;
        for (int y = section.y0; y < section.y0 + section.height; ++y) {
            for (int x = section.x0; x < section.x0 + section.width; ++x) {
                Cell c{x, y};
                if (!cell_free(c)) continue;
                const bool near_target = std::any_of(targets.begin(), targets.end(), [&](Cell t) {
                    return distance(cell_center(t), cell_center(c)) < cfg.exclusion_radius;
                });
                if (!near_target) cells.push_back(c);
            }
        }
        rng.shuffle(cells);
        const auto n = static_cast<std::size_t>(cfg.distracters_per_turn);
        if (combos.size() < n || cells.size() < n) throw PlacementError("section cannot host the distracters");
        std::vector<PlacedObject> out;
        for (std::size_t i = 0; i < n; ++i) {
            PlacedObject po{ObjectSpec::from_attribute_index(combos[i], prefix + std::to_string(i)), cells[i]};
            out.push_back(po);
            occupants.push_back(po);
        }
        return out;
    }
};

} // namespace

EpisodeSpec sample_episode(const CityMap& map, int section_id, std::uint64_t seed, const EpisodeConfig& cfg) {
    if (section_id < 1 || section_id > kSectionCount) throw ConfigError("section id must be in 1..7");
    const SectionRect& section = map.section(section_id);
    EpisodeBuilder b(map, section, cfg, Rng::mix(Rng::mix(map.seed, static_cast<std::uint64_t>(section_id)), seed));

    EpisodeSpec ep;
    ep.id = "w" + std::to_string(map.seed) + "-s" + std::to_string(section_id) + "-e" + std::to_string(seed);
    ep.seed = seed;
    ep.world_seed = map.seed;
    ep.world_cfg = map.cfg;
    ep.section_id = section_id;
    ep.budget = cfg.budget;

    std::vector<Cell> starts;
    for (int y = section.y0; y < section.y0 + section.height; ++y) {
        for (int x = section.x0; x < section.x0 + section.width; ++x) {
            if (b.cell_free({x, y})) starts.push_back({x, y});
        }
    }
    if (starts.empty()) throw PlacementError("section has no free walkable cell");
    const Cell start = b.rng.pick(starts);
    ep.start_pose = AgentPose::at(start, 30 * b.rng.range(0, 11));

    // Targets first so that distracters can keep clear of both.
    ep.turns[0].target = b.pick_target_spec("ep-t1-target");
    ep.turns[0].target_cell = b.pick_target_cell(start, {start});
    b.occupants.push_back({ep.turns[0].target, ep.turns[0].target_cell});

    const auto path1 = astar(map.grid, start, ep.turns[0].target_cell);
    const Cell pickup1 = path1[path1.size() - 2];

    ep.turns[1].target = b.pick_target_spec("ep-t2-target");
    ep.turns[1].target_cell = b.pick_target_cell(pickup1, {start, pickup1});
    b.occupants.push_back({ep.turns[1].target, ep.turns[1].target_cell});

    const std::vector<Cell> target_cells{ep.turns[0].target_cell, ep.turns[1].target_cell};
    ep.turns[0].distracters = b.place_distracters(ep.turns[0].target, target_cells, "ep-t1-distracter");
    ep.turns[1].distracters = b.place_distracters(ep.turns[1].target, target_cells, "ep-t2-distracter");

    // Assembly: turn 1 in an empty room; turn 2 keeps turn 1's placed object
    // at its ground-truth cell and receives a fresh set of decoys.
    AssemblyRoom room;
    std::vector<Cell> cells;
    for (int i = 0; i < AssemblyRoom::kCells; ++i) {
        if (AssemblyRoom::cell_at(i) != room.start_cell) cells.push_back(AssemblyRoom::cell_at(i));
    }
    ep.turns[0].assembly_target_cell = b.rng.pick(cells);
    const std::vector<ObjectSpec> avoid{ep.turns[0].target, ep.turns[1].target};
    AssemblyRoom room1 = place_decoys(room, {ep.turns[0].assembly_target_cell, avoid, true, 8}, b.rng.next());
    for (int i = 0; i < AssemblyRoom::kCells; ++i) {
        for (const auto& o : room1.stacks[static_cast<std::size_t>(i)]) ep.turns[0].decoys.push_back({o, AssemblyRoom::cell_at(i)});
    }

    room.stack(ep.turns[0].assembly_target_cell).push_back(ep.turns[0].target);
    if (b.rng.chance(cfg.stack_probability)) {
        ep.turns[1].assembly_target_cell = ep.turns[0].assembly_target_cell;
    } else {
        std::erase(cells, ep.turns[0].assembly_target_cell);
        ep.turns[1].assembly_target_cell = b.rng.pick(cells);
    }
    AssemblyRoom room2 = place_decoys(room, {ep.turns[1].assembly_target_cell, avoid, true, 8}, b.rng.next());
    for (int i = 0; i < AssemblyRoom::kCells; ++i) {
        for (const auto& o : room2.stacks[static_cast<std::size_t>(i)]) {
            if (o.id.starts_with("decoy")) ep.turns[1].decoys.push_back({o, AssemblyRoom::cell_at(i)});
        }
    }
    return ep;
}

} // namespace arramon
