#include "arramon/synth.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "arramon/error.h"
#include "arramon/rng.h"

namespace arramon {

std::string_view name(Relation r) {
    switch (r) {
    case Relation::InFront:
        return "in_front";
    case Relation::Behind:
        return "behind";
    case Relation::LeftOf:
        return "left_of";
    case Relation::RightOf:
        return "right_of";
    case Relation::OnTop:
        return "on_top";
    case Relation::Between:
        return "between";
    case Relation::BetweenWall:
        return "between_wall";
    }
    return "?";
}

std::vector<PlacedObject> collectibles_at_turn(const CityMap& map, const EpisodeSpec& episode, int turn) {
    std::vector<PlacedObject> out;
    const SectionRect& section = map.section(episode.section_id);
    for (const auto& o : map.placed_objects) {
        if (section.contains(o.cell)) out.push_back(o);
    }
    for (const auto& o : episode.episode_objects()) {
        if (turn == 2 && o.spec.id == episode.turns[0].target.id) continue;
        out.push_back(o);
    }
    return out;
}

AssemblyRoom room_for_turn(const EpisodeSpec& episode, int turn) {
    AssemblyRoom room;
    if (turn == 2) room.stack(episode.turns[0].assembly_target_cell).push_back(episode.turns[0].target);
    for (const auto& d : episode.turns[static_cast<std::size_t>(turn - 1)].decoys) room.stack(d.cell).push_back(d.spec);
    return room;
}

namespace {

struct Leg {
    int rotation = 0;
    std::vector<AgentPose> poses; ///< poses[0] after the rotation, back() at the end of the leg
};

struct Reference {
    std::string descriptor;
    Vec2 position;
    bool landmark = false;
};

constexpr std::array<std::string_view, 5> kWalkVerbs{"walk forward", "continue forward", "head straight",
                                                     "keep walking", "proceed ahead"};

std::string_view side_word(int rotation) { return rotation < 0 ? "left" : "right"; }

std::string turn_phrase(int rotation) {
    const int n = std::abs(rotation);
    if (n == 6) return "turn around";
    static constexpr std::array<std::string_view, 6> mods{"", "slightly ", "partly ", "", "sharply ", "far "};
    return "turn " + std::string(mods[static_cast<std::size_t>(n)]) + std::string(side_word(rotation));
}

bool near_int(double v, int& out) {
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-6) return false;
    out = static_cast<int>(r);
    return true;
}

} // namespace

std::vector<NavClause> plan_nav(const CityMap& map, int section_id, std::span<const PlacedObject> collectibles,
                                const GroundTruthRoute& route, const ObjectSpec& target, std::uint64_t seed,
                                const SimConfig& sim) {
    Rng rng(seed);
    std::vector<Leg> legs;
    int final_rotation = 0;
    AgentPose pose = route.start;
    std::size_t i = 0;
    const auto& acts = route.actions;
    while (i < acts.size() && acts[i] != Action::End) {
        int rot = 0;
        while (i < acts.size() && (acts[i] == Action::Left || acts[i] == Action::Right)) {
            rot += acts[i] == Action::Left ? -1 : 1;
            pose.heading = normalize_heading(pose.heading + (acts[i] == Action::Left ? -30 : 30));
            ++i;
        }
        if (i < acts.size() && acts[i] == Action::Forward) {
            Leg leg;
            leg.rotation = rot;
            leg.poses.push_back(pose);
            while (i < acts.size() && acts[i] == Action::Forward) {
                const Cell d = cardinal_step(pose.heading);
                const Cell c = pose.cell();
                pose = AgentPose::at({c.x + d.x, c.y + d.y}, pose.heading);
                leg.poses.push_back(pose);
                ++i;
            }
            legs.push_back(std::move(leg));
        } else {
            final_rotation = rot;
        }
    }
    if (legs.empty()) throw GenerationError("route has no forward motion to describe");

    const SectionRect& section = map.section(section_id);
    std::vector<Reference> refs;
    for (const auto& lm : map.landmarks) {
        if (section.contains(lm.cell)) refs.push_back({lm.descriptor(), cell_center(lm.cell), true});
    }
    for (const auto& o : collectibles) {
        if (o.spec.id != target.id && section.contains(o.cell)) refs.push_back({o.spec.descriptor(), cell_center(o.cell), false});
    }
    const std::string target_desc = target.descriptor();
    const Vec2 target_pos = cell_center(route.target);

    const auto seen_on_leg = [&](const Leg& leg, Vec2 p, bool* clear) {
        bool seen = false;
        for (const auto& ps : leg.poses) {
            if (!in_view(ps, p, sim)) continue;
            seen = true;
            if (clear && !line_blocked(map.grid, ps.position(), p)) *clear = true;
        }
        return seen;
    };

    std::vector<NavClause> out;
    if (legs.front().rotation != 0) out.push_back({NavClause::Kind::Turn, legs.front().rotation, {}, 0, {}});

    for (std::size_t li = 0; li < legs.size(); ++li) {
        const Leg& leg = legs[li];
        if (li > 0) out.push_back({NavClause::Kind::Turn, leg.rotation, {}, 0, {}});
        const AgentPose& end = leg.poses.back();
        const int m = static_cast<int>(leg.poses.size()) - 1;

        if (li + 1 < legs.size()) {
            std::vector<std::pair<Reference, int>> clear_refs, any_refs;
            for (const auto& r : refs) {
                const EgoOffset e = to_ego(end.position(), end.heading, r.position);
                int f = 0;
                if (!near_int(e.forward, f) || f < -1 || f > 1 || std::abs(e.lateral) > 4 + 1e-9) continue;
                bool clear = false;
                if (!seen_on_leg(leg, r.position, &clear)) continue;
                any_refs.push_back({r, f});
                if (clear) clear_refs.push_back({r, f});
            }
            const auto& pool = clear_refs.empty() ? any_refs : clear_refs;
            if (pool.empty()) {
                throw GenerationError("no visible reference for leg " + std::to_string(li + 1) + " ending at (" +
                                      std::to_string(end.cell().x) + ", " + std::to_string(end.cell().y) + ")");
            }
            const auto& [ref, f] = rng.pick(pool);
            out.push_back({NavClause::Kind::WalkUntil, 0, ref.descriptor, f, {}});
            continue;
        }

        if (!seen_on_leg(leg, target_pos, nullptr)) throw GenerationError("target never comes into view");
        std::vector<std::string> passed;
        for (const auto& r : refs) {
            if (!r.landmark) continue;
            const EgoOffset e = to_ego(end.position(), end.heading, r.position);
            int f = 0;
            if (!near_int(e.forward, f) || f > -1 || f < -(m - 1) || std::abs(e.lateral) > 1 + 1e-9) continue;
            if (seen_on_leg(leg, r.position, nullptr)) passed.push_back(r.descriptor);
        }
        NavClause fin;
        fin.kind = final_rotation == 0 ? NavClause::Kind::FinalAhead : NavClause::Kind::FinalSide;
        fin.rotation = final_rotation;
        fin.reference = target_desc;
        if (!passed.empty()) fin.passed = rng.pick(passed);
        out.push_back(fin);
    }
    return out;
}

std::string render_nav(const std::vector<NavClause>& clauses, std::uint64_t seed) {
    Rng rng(seed);
    std::string text;
    const auto verb = [&] { return std::string(kWalkVerbs[rng.below(kWalkVerbs.size())]); };
    const auto pickup = [&] { return std::string(rng.chance(0.5) ? "pick it up" : "collect it"); };
    for (std::size_t i = 0; i < clauses.size(); ++i) {
        const NavClause& c = clauses[i];
        if (i > 0) {
            if (clauses[i - 1].kind == NavClause::Kind::Turn) {
                text += rng.chance(0.5) ? " and " : ", then ";
            } else {
                static constexpr std::array<std::string_view, 4> joins{", then ", ". Then ", ". After that, ", ", and then "};
                text += joins[rng.below(joins.size())];
            }
        }
        switch (c.kind) {
        case NavClause::Kind::Turn:
            text += turn_phrase(c.rotation);
            break;
        case NavClause::Kind::WalkUntil: {
            std::string stop;
            if (c.stop_offset == 0) {
                static constexpr std::array<std::string_view, 3> v{"reach", "get to", "are next to"};
                stop = v[rng.below(v.size())];
            } else if (c.stop_offset > 0) {
                stop = "are just before";
            } else {
                stop = rng.chance(0.5) ? "are just past" : "pass";
            }
            text += verb() + " until you " + stop + " the " + c.reference;
            break;
        }
        case NavClause::Kind::FinalAhead:
        case NavClause::Kind::FinalSide: {
            text += verb();
            if (!c.passed.empty()) text += " past the " + c.passed;
            if (c.kind == NavClause::Kind::FinalAhead) {
                text += " to the " + c.reference + " and " + pickup();
            } else {
                const std::string side(side_word(c.rotation));
                text += " until the " + c.reference + " is on your " + side + ", then turn " + side + " and " + pickup();
            }
            break;
        }
        }
    }
    text += ".";
    bool cap = true;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (cap && std::isalpha(static_cast<unsigned char>(text[i]))) {
            text[i] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
            cap = false;
        }
        if (text[i] == '.') cap = true;
    }
    return text;
}

namespace {

std::vector<std::string> grammar_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    const auto flush = [&] {
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            flush();
        } else if (ch == ',' || ch == '.' || ch == ';' || ch == '!' || ch == '?') {
            flush();
            out.push_back(std::string(1, ch == ';' ? ',' : (ch == ',' ? ',' : '.')));
        } else {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return out;
}

struct Cursor {
    const std::vector<std::string>& t;
    std::size_t i = 0;

    bool done() const { return i >= t.size(); }
    const std::string& peek(std::size_t k = 0) const {
        static const std::string empty;
        return i + k < t.size() ? t[i + k] : empty;
    }
    bool accept(std::initializer_list<std::string_view> words) {
        std::size_t k = 0;
        for (auto w : words) {
            if (peek(k) != w) return false;
            ++k;
        }
        i += k;
        return true;
    }
    std::string phrase(const std::vector<std::string_view>& stops) {
        std::string out;
        while (!done() && std::find(stops.begin(), stops.end(), peek()) == stops.end()) {
            if (!out.empty()) out += ' ';
            out += t[i++];
        }
        return out;
    }
};

bool accept_verb(Cursor& c) {
    return c.accept({"walk", "forward"}) || c.accept({"continue", "forward"}) || c.accept({"head", "straight"}) ||
           c.accept({"keep", "walking"}) || c.accept({"proceed", "ahead"});
}

std::optional<int> accept_side(Cursor& c) {
    if (c.accept({"left"})) return -1;
    if (c.accept({"right"})) return 1;
    return std::nullopt;
}

void accept_pickup_tail(Cursor& c) {
    c.accept({"and"});
    if (!c.accept({"pick", "it", "up"})) c.accept({"collect", "it"});
}

} // namespace

std::vector<NavClause> parse_nav(std::string_view text, int* misses) {
    const auto tokens = grammar_tokens(text);
    Cursor c{tokens};
    std::vector<NavClause> out;
    int missed = 0;
    static const std::vector<std::string_view> kStops{",", ".", "and", "is", "to", "then", "until"};
    while (!c.done()) {
        if (c.accept({","}) || c.accept({"."}) || c.accept({"and"}) || c.accept({"then"}) || c.accept({"after", "that"})) {
            continue;
        }
        if (c.accept({"turn"})) {
            if (c.accept({"around"})) {
                out.push_back({NavClause::Kind::Turn, -6, {}, 0, {}});
                continue;
            }
            int units = 3;
            if (c.accept({"slightly"})) units = 1;
            else if (c.accept({"partly"})) units = 2;
            else if (c.accept({"sharply"})) units = 4;
            else if (c.accept({"far"})) units = 5;
            if (auto s = accept_side(c)) {
                out.push_back({NavClause::Kind::Turn, *s * units, {}, 0, {}});
            } else {
                ++missed;
            }
            continue;
        }
        if (accept_verb(c)) {
            NavClause cl;
            if (c.accept({"past", "the"})) cl.passed = c.phrase(kStops);
            if (c.accept({"to", "the"})) {
                cl.kind = NavClause::Kind::FinalAhead;
                cl.reference = c.phrase(kStops);
                accept_pickup_tail(c);
                out.push_back(cl);
                continue;
            }
            if (c.accept({"until", "the"})) {
                cl.kind = NavClause::Kind::FinalSide;
                cl.reference = c.phrase(kStops);
                if (c.accept({"is", "on", "your"})) {
                    if (auto s = accept_side(c)) cl.rotation = 3 * *s;
                }
                c.accept({","});
                c.accept({"then"});
                if (c.accept({"turn"})) accept_side(c);
                accept_pickup_tail(c);
                if (cl.rotation == 0) ++missed;
                out.push_back(cl);
                continue;
            }
            if (c.accept({"until", "you"})) {
                cl.kind = NavClause::Kind::WalkUntil;
                if (c.accept({"reach"}) || c.accept({"get", "to"}) || c.accept({"are", "next", "to"})) {
                    cl.stop_offset = 0;
                } else if (c.accept({"are", "just", "before"})) {
                    cl.stop_offset = 1;
                } else if (c.accept({"are", "just", "past"}) || c.accept({"pass"})) {
                    cl.stop_offset = -1;
                } else {
                    ++missed;
                    continue;
                }
                if (!c.accept({"the"})) {
                    ++missed;
                    continue;
                }
                cl.reference = c.phrase(kStops);
                out.push_back(cl);
                continue;
            }
            ++missed;
            continue;
        }
        ++missed;
        ++c.i;
    }
    if (misses) *misses = missed;
    return out;
}

InstructionText synth_nav_instruction(const CityMap& map, const EpisodeSpec& episode, int turn,
                                      const GroundTruthRoute& route, std::uint64_t seed, const SimConfig& sim) {
    const auto collectibles = collectibles_at_turn(map, episode, turn);
    const ObjectSpec& target = episode.turns[static_cast<std::size_t>(turn - 1)].target;
    for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
        const auto clauses = plan_nav(map, episode.section_id, collectibles, route, target, Rng::mix(seed, attempt), sim);
        std::string text = render_nav(clauses, Rng::mix(seed, attempt + 1000));
        if (!has_blocking(validate_nav(text, route.actions))) return {std::move(text), Phase::Navigation};
    }
    throw GenerationError("no navigation variant passes the validator");
}

// --- Assembly -------------------------------------------------------------

namespace {

struct Frame {
    Cell fwd;
    Cell right;
    Cell left() const { return {-right.x, -right.y}; }
};

Frame frame_for(int heading) { return {cardinal_step(heading), cardinal_step(heading + 90)}; }

Cell add(Cell a, Cell b) { return {a.x + b.x, a.y + b.y}; }
Cell sub(Cell a, Cell b) { return {a.x - b.x, a.y - b.y}; }

Cell outward(WallSide s) {
    switch (s) {
    case WallSide::North:
        return {0, 1};
    case WallSide::East:
        return {1, 0};
    case WallSide::South:
        return {0, -1};
    case WallSide::West:
        return {-1, 0};
    }
    return {0, 0};
}

} // namespace

std::vector<AsmPlan> asm_candidates(const AssemblyRoom& room, Cell target, const ObjectSpec& carried) {
    if (!AssemblyRoom::inside(target)) throw PlacementError("assembly target outside the room");
    std::map<std::string, int> counts;
    for (const auto& st : room.stacks) {
        for (const auto& o : st) ++counts[o.descriptor()];
    }
    bool ambiguous = false;
    const auto ref_at = [&](Cell c) -> std::optional<std::string> {
        if (!AssemblyRoom::inside(c) || !room.occupied(c)) return std::nullopt;
        std::string d = room.stack(c).back().descriptor();
        if (counts[d] > 1) {
            ambiguous = true;
            return std::nullopt;
        }
        return d;
    };

    const std::string carried_desc = carried.descriptor();
    std::vector<AsmPlan> out;
    if (room.occupied(target)) {
        if (auto r = ref_at(target)) out.push_back({Relation::OnTop, carried_desc, *r, {}, {}});
    } else {
        const Frame f = frame_for(room.start_heading);
        const std::array<std::pair<Cell, Relation>, 4> around{{{f.fwd, Relation::InFront},
                                                               {sub({0, 0}, f.fwd), Relation::Behind},
                                                               {f.right, Relation::LeftOf},
                                                               {f.left(), Relation::RightOf}}};
        // The reference sits at target + offset; e.g. target in front of X
        // means X is one cell further along the start heading.
        for (const auto& [offset, rel] : around) {
            if (auto r = ref_at(add(target, offset))) out.push_back({rel, carried_desc, *r, {}, {}});
        }
        for (Cell axis : {f.fwd, f.right}) {
            auto a = ref_at(add(target, axis));
            auto b = ref_at(sub(target, axis));
            if (a && b) out.push_back({Relation::Between, carried_desc, *a, *b, {}});
        }
        for (WallSide side : {WallSide::North, WallSide::East, WallSide::South, WallSide::West}) {
            if (!AssemblyRoom::touches(target, side)) continue;
            if (auto r = ref_at(sub(target, outward(side)))) {
                out.push_back({Relation::BetweenWall, carried_desc, *r, {}, room.wall(side)});
            }
        }
    }
    if (out.empty()) {
        if (ambiguous) throw AmbiguityError("every reference near the target has a duplicate descriptor");
        throw GenerationError("no object or wall relation describes the target cell");
    }
    return out;
}

std::string render_asm(const AsmPlan& p, std::uint64_t seed) {
    Rng rng(seed);
    std::string s = rng.chance(0.5) ? "Place" : "Put";
    s += " the " + p.carried + " ";
    switch (p.relation) {
    case Relation::InFront:
        s += "in front of the " + p.reference;
        break;
    case Relation::Behind:
        s += "behind the " + p.reference;
        break;
    case Relation::LeftOf:
        s += (rng.chance(0.5) ? "to the left of the " : "on the left side of the ") + p.reference;
        break;
    case Relation::RightOf:
        s += (rng.chance(0.5) ? "to the right of the " : "on the right side of the ") + p.reference;
        break;
    case Relation::OnTop:
        s += "on top of the " + p.reference;
        break;
    case Relation::Between:
        s += "between the " + p.reference + " and the " + p.second;
        break;
    case Relation::BetweenWall:
        s += "between the " + p.reference + " and the " + std::string(name(*p.wall)) + " wall";
        break;
    }
    return s + ".";
}

std::optional<AsmPlan> parse_asm(std::string_view text) {
    const auto tokens = grammar_tokens(text);
    Cursor c{tokens};
    AsmPlan p;
    if (!(c.accept({"place", "the"}) || c.accept({"put", "the"}))) return std::nullopt;
    p.carried = c.phrase({"in", "behind", "to", "on", "between", ".", ","});
    static const std::vector<std::string_view> kEnd{".", ","};
    if (c.accept({"in", "front", "of", "the"})) {
        p.relation = Relation::InFront;
    } else if (c.accept({"behind", "the"})) {
        p.relation = Relation::Behind;
    } else if (c.accept({"to", "the", "left", "of", "the"}) || c.accept({"on", "the", "left", "side", "of", "the"})) {
        p.relation = Relation::LeftOf;
    } else if (c.accept({"to", "the", "right", "of", "the"}) || c.accept({"on", "the", "right", "side", "of", "the"})) {
        p.relation = Relation::RightOf;
    } else if (c.accept({"on", "top", "of", "the"})) {
        p.relation = Relation::OnTop;
    } else if (c.accept({"between", "the"})) {
        p.reference = c.phrase({"and", ".", ","});
        if (!c.accept({"and", "the"})) return std::nullopt;
        std::string second = c.phrase(kEnd);
        const auto sp = second.find(' ');
        if (sp != std::string::npos && second.substr(sp + 1) == "wall") {
            p.wall = parse_wall_texture(second.substr(0, sp));
            if (!p.wall) return std::nullopt;
            p.relation = Relation::BetweenWall;
        } else {
            p.relation = Relation::Between;
            p.second = second;
        }
        return p.reference.empty() ? std::nullopt : std::optional<AsmPlan>(p);
    } else {
        return std::nullopt;
    }
    p.reference = c.phrase(kEnd);
    if (p.reference.empty()) return std::nullopt;
    return p;
}

std::optional<Cell> resolve_asm(const AsmPlan& p, const std::map<std::string, Cell>& cells, int frame_heading) {
    const auto it = cells.find(p.reference);
    if (it == cells.end()) return std::nullopt;
    const Cell ref = it->second;
    const Frame f = frame_for(frame_heading);
    std::optional<Cell> out;
    switch (p.relation) {
    case Relation::InFront:
        out = sub(ref, f.fwd);
        break;
    case Relation::Behind:
        out = add(ref, f.fwd);
        break;
    case Relation::LeftOf:
        out = add(ref, f.left());
        break;
    case Relation::RightOf:
        out = add(ref, f.right);
        break;
    case Relation::OnTop:
        out = ref;
        break;
    case Relation::Between: {
        const auto jt = cells.find(p.second);
        if (jt == cells.end()) return std::nullopt;
        const Cell d = sub(jt->second, ref);
        if (manhattan(ref, jt->second) != 2 || (d.x != 0 && d.y != 0)) return std::nullopt;
        out = Cell{ref.x + d.x / 2, ref.y + d.y / 2};
        break;
    }
    case Relation::BetweenWall: {
        const AssemblyRoom room;
        for (WallSide side : {WallSide::North, WallSide::East, WallSide::South, WallSide::West}) {
            if (room.wall(side) == *p.wall) out = add(ref, outward(side));
        }
        break;
    }
    }
    if (out && !AssemblyRoom::inside(*out)) return std::nullopt;
    return out;
}

InstructionText synth_asm_instruction(const AssemblyRoom& room, Cell target, const ObjectSpec& carried,
                                      std::uint64_t seed) {
    auto plans = asm_candidates(room, target, carried);
    Rng rng(seed);
    rng.shuffle(plans);
    for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
        const AsmPlan& p = plans[attempt % plans.size()];
        std::string text = render_asm(p, Rng::mix(seed, attempt));
        if (!has_blocking(validate_asm(text))) return {std::move(text), Phase::Assembly};
    }
    throw GenerationError("no assembly variant passes the validator");
}

} // namespace arramon
