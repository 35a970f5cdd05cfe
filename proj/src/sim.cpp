#include "arramon/sim.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "arramon/error.h"

namespace arramon {

std::string_view name(PhaseEvent::Kind k) {
    switch (k) {
    case PhaseEvent::Kind::Picked:
        return "picked";
    case PhaseEvent::Kind::Placed:
        return "placed";
    case PhaseEvent::Kind::PhaseStarted:
        return "phase_started";
    case PhaseEvent::Kind::EpisodeDone:
        return "episode_done";
    }
    return "?";
}

namespace {

Trajectory start_trajectory(Phase phase, int turn, const AgentPose& pose) {
    Trajectory t;
    t.phase = phase;
    t.turn = turn;
    t.points.push_back(pose.position());
    t.headings.push_back(pose.heading);
    return t;
}

void record(SimState& s, Action a) {
    Trajectory& t = s.current();
    t.actions.push_back(a);
    t.points.push_back(s.pose.position());
    t.headings.push_back(s.pose.heading);
}

void enter_assembly(SimState& s, std::vector<PhaseEvent>& events) {
    s.phase = Phase::Assembly;
    s.steps_used = 0;
    s.pose = AgentPose::at(s.room.start_cell, s.room.start_heading);
    s.room.clear_decoys();
    for (const auto& d : s.episode.turns[static_cast<std::size_t>(s.turn - 1)].decoys) {
        s.room.stack(d.cell).push_back(d.spec);
    }
    s.trajectories.push_back(start_trajectory(Phase::Assembly, s.turn, s.pose));
    events.push_back({PhaseEvent::Kind::PhaseStarted, Phase::Assembly, s.turn, {}, {}, false});
}

void finish_navigation(SimState& s, std::optional<PlacedObject> picked, bool forced, std::vector<PhaseEvent>& events) {
    Trajectory& t = s.current();
    t.finished = true;
    t.end.forced = forced;
    if (picked) {
        t.end.picked = picked->spec;
        s.inventory = picked->spec;
        std::erase_if(s.collectibles, [&](const PlacedObject& o) { return o.spec.id == picked->spec.id; });
    }
    events.push_back({PhaseEvent::Kind::Picked, Phase::Navigation, s.turn, t.end.picked,
                      picked ? std::optional<Cell>(picked->cell) : std::nullopt, forced});
    s.resume_pose = s.pose;
    enter_assembly(s, events);
}

std::optional<PlacedObject> nearest_collectible(const SimState& s) {
    std::optional<PlacedObject> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& o : s.collectibles) {
        const double d = distance(s.pose.position(), cell_center(o.cell));
        if (d < best_d || (d == best_d && best && o.spec.id < best->spec.id)) {
            best_d = d;
            best = o;
        }
    }
    return best;
}

void finish_assembly(SimState& s, std::optional<Cell> cell, bool forced, std::vector<PhaseEvent>& events) {
    Trajectory& t = s.current();
    t.finished = true;
    t.end.forced = forced;
    t.end.placed_cell = cell;
    std::optional<ObjectSpec> object = s.inventory;
    if (cell && s.inventory) {
        s.room.stack(*cell).push_back(*s.inventory);
        s.inventory.reset();
    }
    events.push_back({PhaseEvent::Kind::Placed, Phase::Assembly, s.turn, object, cell, forced});
    if (s.turn == 1) {
        s.turn = 2;
        s.phase = Phase::Navigation;
        s.steps_used = 0;
        s.pose = s.resume_pose;
        s.trajectories.push_back(start_trajectory(Phase::Navigation, 2, s.pose));
        events.push_back({PhaseEvent::Kind::PhaseStarted, Phase::Navigation, 2, {}, {}, false});
    } else {
        s.done = true;
        events.push_back({PhaseEvent::Kind::EpisodeDone, Phase::Assembly, 2, {}, {}, false});
    }
}

Cell placement_cell(const AgentPose& pose) {
    const Cell here = pose.cell();
    const Cell d = cardinal_step(pose.heading);
    const Cell ahead{here.x + d.x, here.y + d.y};
    return AssemblyRoom::inside(ahead) ? ahead : here;
}

void finalize_if_exhausted(SimState& s, std::vector<PhaseEvent>& events) {
    if (s.done || s.current().finished || s.steps_used < s.budget()) return;
    if (s.phase == Phase::Navigation) {
        finish_navigation(s, nearest_collectible(s), true, events);
    } else {
        finish_assembly(s, s.inventory ? std::optional<Cell>(placement_cell(s.pose)) : std::nullopt, true, events);
    }
}

StepResult make_result(const SimState& s, bool phase_done, std::vector<PhaseEvent> events) {
    StepResult r;
    r.observation = observe(s);
    r.phase_done = phase_done;
    r.done = s.done;
    r.events = std::move(events);
    return r;
}

bool in_fov(const EgoOffset& e, const SimConfig& cfg) {
    if (e.range() < 1e-9 || e.range() > cfg.view_range + 1e-9) return false;
    const double b = e.bearing();
    return b > -cfg.fov_deg / 2 && b <= cfg.fov_deg / 2;
}

VisibleEntity entity_at(const AgentPose& pose, Vec2 where) {
    VisibleEntity v;
    const EgoOffset e = to_ego(pose.position(), pose.heading, where);
    v.range = e.range();
    v.bearing = e.bearing();
    v.forward = e.forward;
    v.lateral = e.lateral;
    return v;
}

std::vector<WallTexture> walls_in_view(const SimState& s) {
    std::vector<WallTexture> out;
    const Vec2 p = s.pose.position();
    const int half = static_cast<int>(s.cfg.fov_deg / 2);
    for (int b = -half + 1; b <= half; ++b) {
        const double rad = (s.pose.heading + b) * M_PI / 180.0;
        const Vec2 d{std::sin(rad), std::cos(rad)};
        double best = std::numeric_limits<double>::infinity();
        WallSide side = WallSide::North;
        const auto consider = [&](double t, WallSide ws) {
            if (t > 1e-12 && t < best) {
                best = t;
                side = ws;
            }
        };
        if (d.y > 1e-12) consider((AssemblyRoom::kRows - p.y) / d.y, WallSide::North);
        if (d.y < -1e-12) consider(-p.y / d.y, WallSide::South);
        if (d.x > 1e-12) consider((AssemblyRoom::kColumns - p.x) / d.x, WallSide::East);
        if (d.x < -1e-12) consider(-p.x / d.x, WallSide::West);
        const WallTexture tex = s.room.wall(side);
        if (out.empty() || out.back() != tex) out.push_back(tex);
    }
    return out;
}

} // namespace

SimState reset(const EpisodeSpec& episode, std::shared_ptr<const CityMap> city, const SimConfig& cfg) {
    SimState s;
    s.city = std::move(city);
    s.episode = episode;
    s.cfg = cfg;
    s.pose = episode.start_pose;
    s.resume_pose = episode.start_pose;
    const SectionRect& section = s.city->section(episode.section_id);
    for (const auto& o : s.city->placed_objects) {
        if (section.contains(o.cell)) s.collectibles.push_back(o);
    }
    for (const auto& o : episode.episode_objects()) s.collectibles.push_back(o);
    s.trajectories.push_back(start_trajectory(Phase::Navigation, 1, s.pose));
    return s;
}

SimState reset(const EpisodeSpec& episode, const SimConfig& cfg) {
    return reset(episode, std::make_shared<const CityMap>(generate_city(episode.world_seed, episode.world_cfg)), cfg);
}

std::optional<PlacedObject> pickup_check(const AgentPose& pose, std::span<const PlacedObject> objects,
                                         const SimConfig& cfg) {
    std::optional<PlacedObject> best;
    double best_range = std::numeric_limits<double>::infinity();
    for (const auto& o : objects) {
        const EgoOffset e = to_ego(pose.position(), pose.heading, cell_center(o.cell));
        if (std::abs(e.lateral) > cfg.pickup_half_width + 1e-9) continue;
        if (e.forward <= 1e-9 || e.forward > cfg.pickup_depth + 1e-9) continue;
        const double r = e.range();
        if (r < best_range || (r == best_range && best && o.spec.id < best->spec.id)) {
            best_range = r;
            best = o;
        }
    }
    return best;
}

StepResult nav_step(SimState& s, Action a) {
    if (s.done) throw StateError("episode already finished");
    if (s.phase != Phase::Navigation) throw PhaseError("nav_step called during assembly");
    std::vector<PhaseEvent> events;
    ++s.steps_used;
    switch (a) {
    case Action::Forward: {
        const Vec2 next = s.pose.position() + heading_vector(s.pose.heading);
        if (s.city->grid.walkable(cell_of(next))) {
            s.pose.x = next.x;
            s.pose.y = next.y;
        }
        break;
    }
    case Action::Left:
        s.pose.heading = normalize_heading(s.pose.heading - 30);
        break;
    case Action::Right:
        s.pose.heading = normalize_heading(s.pose.heading + 30);
        break;
    case Action::End:
        break;
    }
    record(s, a);
    if (a == Action::End) {
        auto picked = pickup_check(s.pose, s.collectibles, s.cfg);
        const bool forced = !picked.has_value();
        finish_navigation(s, forced ? nearest_collectible(s) : picked, forced, events);
        return make_result(s, true, std::move(events));
    }
    finalize_if_exhausted(s, events);
    const bool phase_done = !events.empty();
    return make_result(s, phase_done, std::move(events));
}

StepResult asm_step(SimState& s, Action a, std::optional<Cell> place_override) {
    if (s.done) throw StateError("episode already finished");
    if (s.phase != Phase::Assembly) throw PhaseError("asm_step called during navigation");
    std::vector<PhaseEvent> events;
    ++s.steps_used;
    switch (a) {
    case Action::Forward: {
        const Cell d = cardinal_step(s.pose.heading);
        const Cell here = s.pose.cell();
        const Cell next{here.x + d.x, here.y + d.y};
        if (AssemblyRoom::inside(next)) s.pose = AgentPose::at(next, s.pose.heading);
        break;
    }
    case Action::Left:
        s.pose.heading = normalize_heading(s.pose.heading - 90);
        break;
    case Action::Right:
        s.pose.heading = normalize_heading(s.pose.heading + 90);
        break;
    case Action::End:
        break;
    }
    record(s, a);
    if (a == Action::End) {
        std::optional<Cell> cell;
        if (s.inventory) cell = place_override ? *place_override : placement_cell(s.pose);
        finish_assembly(s, cell, false, events);
        return make_result(s, true, std::move(events));
    }
    finalize_if_exhausted(s, events);
    const bool phase_done = !events.empty();
    return make_result(s, phase_done, std::move(events));
}

StepResult step(SimState& s, Action a) {
    if (s.done) throw StateError("episode already finished");
    return s.phase == Phase::Navigation ? nav_step(s, a) : asm_step(s, a);
}

void place(SimState& s, std::optional<Cell> override_cell, bool forced) {
    if (s.phase != Phase::Assembly) throw PhaseError("place called during navigation");
    if (!s.inventory) throw StateError("nothing to place");
    std::vector<PhaseEvent> events;
    finish_assembly(s, override_cell ? *override_cell : placement_cell(s.pose), forced, events);
}

void forced_finalize(SimState& s) {
    if (s.done) throw StateError("episode already finished");
    std::vector<PhaseEvent> events;
    if (s.phase == Phase::Navigation) {
        finish_navigation(s, nearest_collectible(s), true, events);
    } else {
        finish_assembly(s, s.inventory ? std::optional<Cell>(placement_cell(s.pose)) : std::nullopt, true, events);
    }
}

bool in_view(const AgentPose& pose, Vec2 p, const SimConfig& cfg) {
    return in_fov(to_ego(pose.position(), pose.heading, p), cfg);
}

bool line_blocked(const OccupancyGrid& grid, Vec2 from, Vec2 to) {
    const Cell start = cell_of(from);
    const Cell goal = cell_of(to);
    Cell c = start;
    const double dx = to.x - from.x;
    const double dy = to.y - from.y;
    const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
    const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
    const double inf = std::numeric_limits<double>::infinity();
    const double tdx = sx != 0 ? 1.0 / std::abs(dx) : inf;
    const double tdy = sy != 0 ? 1.0 / std::abs(dy) : inf;
    double tx = sx > 0 ? (c.x + 1 - from.x) * tdx : (sx < 0 ? (from.x - c.x) * tdx : inf);
    double ty = sy > 0 ? (c.y + 1 - from.y) * tdy : (sy < 0 ? (from.y - c.y) * tdy : inf);
    constexpr double eps = 1e-12;
    while (c != goal) {
        const double t = std::min(tx, ty);
        if (t >= 1.0 - eps) break;
        if (std::abs(tx - ty) <= eps) {
            // Exact corner crossing: the segment never enters the side cells.
            c.x += sx;
            c.y += sy;
            tx += tdx;
            ty += tdy;
        } else if (tx < ty) {
            c.x += sx;
            tx += tdx;
        } else {
            c.y += sy;
            ty += tdy;
        }
        if (c != goal && c != start && grid.blocked(c)) return true;
    }
    return false;
}

Observation observe(const SimState& s) {
    Observation obs;
    obs.phase = s.phase;
    obs.turn = s.turn;
    obs.steps_remaining = s.done ? 0 : s.budget() - s.steps_used;
    obs.carrying = s.inventory;
    if (s.done) return obs;

    if (s.phase == Phase::Navigation) {
        const SectionRect& section = s.city->section(s.episode.section_id);
        for (const auto& o : s.collectibles) {
            const Vec2 p = cell_center(o.cell);
            if (!in_fov(to_ego(s.pose.position(), s.pose.heading, p), s.cfg)) continue;
            VisibleEntity v = entity_at(s.pose, p);
            v.kind = EntityKind::Collectible;
            v.id = o.spec.id;
            v.descriptor = o.spec.descriptor();
            v.object = o.spec;
            v.occluded = line_blocked(s.city->grid, s.pose.position(), p);
            obs.visible.push_back(std::move(v));
        }
        for (const auto& lm : s.city->landmarks) {
            if (!section.contains(lm.cell)) continue;
            const Vec2 p = cell_center(lm.cell);
            if (!in_fov(to_ego(s.pose.position(), s.pose.heading, p), s.cfg)) continue;
            VisibleEntity v = entity_at(s.pose, p);
            v.kind = EntityKind::Landmark;
            v.id = lm.id;
            v.descriptor = lm.descriptor();
            v.landmark = lm;
            v.occluded = line_blocked(s.city->grid, s.pose.position(), p);
            obs.visible.push_back(std::move(v));
        }
    } else {
        for (int i = 0; i < AssemblyRoom::kCells; ++i) {
            const Cell c = AssemblyRoom::cell_at(i);
            const Vec2 p = cell_center(c);
            if (!in_fov(to_ego(s.pose.position(), s.pose.heading, p), s.cfg)) continue;
            const auto& st = s.room.stacks[static_cast<std::size_t>(i)];
            for (std::size_t level = 0; level < st.size(); ++level) {
                VisibleEntity v = entity_at(s.pose, p);
                v.kind = EntityKind::Collectible;
                v.id = st[level].id;
                v.descriptor = st[level].descriptor();
                v.object = st[level];
                v.stack_level = static_cast<int>(level);
                obs.visible.push_back(std::move(v));
            }
        }
        obs.wall_view = walls_in_view(s);
    }
    std::sort(obs.visible.begin(), obs.visible.end(), [](const VisibleEntity& a, const VisibleEntity& b) {
        if (a.range != b.range) return a.range < b.range;
        if (a.id != b.id) return a.id < b.id;
        return a.stack_level < b.stack_level;
    });
    return obs;
}

SimState replay(const EpisodeSpec& episode, std::shared_ptr<const CityMap> city, std::span<const Action> actions,
                const SimConfig& cfg) {
    SimState s = reset(episode, std::move(city), cfg);
    for (Action a : actions) {
        if (s.done) break;
        step(s, a);
    }
    return s;
}

} // namespace arramon
