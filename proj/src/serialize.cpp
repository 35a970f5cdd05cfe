#include "arramon/serialize.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "arramon/error.h"

namespace arramon {

namespace {

template <typename T, typename Parse>
T parse_enum(const json& j, Parse parse, const char* what) {
    const auto s = j.get<std::string>();
    auto v = parse(s);
    if (!v) throw SchemaError(std::string("unknown ") + what + " \"" + s + "\"");
    return *v;
}

json optional_object(const std::optional<ObjectSpec>& o) { return o ? json(*o) : json(nullptr); }

} // namespace

void to_json(json& j, const Cell& c) { j = json::array({c.x, c.y}); }
void from_json(const json& j, Cell& c) {
    if (!j.is_array() || j.size() != 2) throw SchemaError("cell must be [x, y]");
    c = {j[0].get<int>(), j[1].get<int>()};
}

void to_json(json& j, const Vec2& v) { j = json::array({v.x, v.y}); }
void from_json(const json& j, Vec2& v) {
    if (!j.is_array() || j.size() != 2) throw SchemaError("point must be [x, y]");
    v = {j[0].get<double>(), j[1].get<double>()};
}

void to_json(json& j, const ObjectSpec& o) {
    j = {{"id", o.id}, {"class", name(o.cls)}, {"pattern", name(o.pattern)}, {"color", name(o.color)}};
}
void from_json(const json& j, ObjectSpec& o) {
    o.id = j.at("id").get<std::string>();
    o.cls = parse_enum<ObjectClass>(j.at("class"), parse_object_class, "class");
    o.pattern = parse_enum<Pattern>(j.at("pattern"), parse_pattern, "pattern");
    o.color = parse_enum<Color>(j.at("color"), parse_color, "color");
}

void to_json(json& j, const PlacedObject& o) {
    j = o.spec;
    j["cell"] = o.cell;
}
void from_json(const json& j, PlacedObject& o) {
    o.spec = j.get<ObjectSpec>();
    o.cell = j.at("cell").get<Cell>();
}

void to_json(json& j, const Landmark& l) {
    j = {{"id", l.id}, {"kind", name(l.kind)}, {"color", name(l.color)}, {"cell", l.cell}};
    if (l.kind == LandmarkKind::BannerBuilding) j["shape"] = name(l.shape);
}
void from_json(const json& j, Landmark& l) {
    l.id = j.at("id").get<std::string>();
    l.kind = parse_enum<LandmarkKind>(j.at("kind"), parse_landmark_kind, "landmark kind");
    l.color = parse_enum<Color>(j.at("color"), parse_color, "color");
    l.shape = j.contains("shape") ? parse_enum<BannerShape>(j["shape"], parse_banner_shape, "banner shape")
                                  : BannerShape::Triangle;
    l.cell = j.at("cell").get<Cell>();
}

void to_json(json& j, const AgentPose& p) { j = {{"x", p.x}, {"y", p.y}, {"heading", p.heading}}; }
void from_json(const json& j, AgentPose& p) {
    p.x = j.at("x").get<double>();
    p.y = j.at("y").get<double>();
    p.heading = j.at("heading").get<int>();
}

void to_json(json& j, const SectionRect& s) {
    j = {{"id", s.id}, {"x0", s.x0}, {"y0", s.y0}, {"width", s.width}, {"height", s.height}};
}
void from_json(const json& j, SectionRect& s) {
    s.id = j.at("id").get<int>();
    s.x0 = j.at("x0").get<int>();
    s.y0 = j.at("y0").get<int>();
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
}

void to_json(json& j, const WorldConfig& c) {
    j = {{"width", c.width},
         {"height", c.height},
         {"sections", c.sections},
         {"street_spacing_min", c.street_spacing_min},
         {"street_spacing_max", c.street_spacing_max},
         {"landmark_density", c.landmark_density},
         {"banner_density", c.banner_density},
         {"ambient_objects_per_section", c.ambient_objects_per_section}};
}
void from_json(const json& j, WorldConfig& c) {
    WorldConfig d;
    c.width = j.value("width", d.width);
    c.height = j.value("height", d.height);
    c.sections = j.contains("sections") ? j["sections"].get<std::vector<SectionRect>>() : d.sections;
    c.street_spacing_min = j.value("street_spacing_min", d.street_spacing_min);
    c.street_spacing_max = j.value("street_spacing_max", d.street_spacing_max);
    c.landmark_density = j.value("landmark_density", d.landmark_density);
    c.banner_density = j.value("banner_density", d.banner_density);
    c.ambient_objects_per_section = j.value("ambient_objects_per_section", d.ambient_objects_per_section);
}

void to_json(json& j, const CityMap& m) {
    json rows = json::array();
    for (int y = 0; y < m.grid.height(); ++y) {
        std::string row;
        for (int x = 0; x < m.grid.width(); ++x) row.push_back(m.grid.walkable({x, y}) ? '.' : '#');
        rows.push_back(std::move(row));
    }
    j = {{"schema_version", kSchemaVersion},
         {"kind", "world"},
         {"seed", m.seed},
         {"cfg", m.cfg},
         {"grid", {{"width", m.grid.width()}, {"height", m.grid.height()}, {"rows", rows}}},
         {"landmarks", m.landmarks},
         {"placed_objects", m.placed_objects}};
}
void from_json(const json& j, CityMap& m) {
    if (j.value("schema_version", 0) != kSchemaVersion) throw SchemaError("unsupported world schema_version");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.cfg = j.at("cfg").get<WorldConfig>();
    const auto& g = j.at("grid");
    const int w = g.at("width").get<int>();
    const int h = g.at("height").get<int>();
    const auto& rows = g.at("rows");
    if (!rows.is_array() || static_cast<int>(rows.size()) != h) throw SchemaError("grid rows do not match height");
    m.grid = OccupancyGrid(w, h, true);
    for (int y = 0; y < h; ++y) {
        const auto row = rows[static_cast<std::size_t>(y)].get<std::string>();
        if (static_cast<int>(row.size()) != w) throw SchemaError("grid row width mismatch");
        for (int x = 0; x < w; ++x) m.grid.set_blocked({x, y}, row[static_cast<std::size_t>(x)] != '.');
    }
    m.landmarks = j.at("landmarks").get<std::vector<Landmark>>();
    m.placed_objects = j.at("placed_objects").get<std::vector<PlacedObject>>();
}

void to_json(json& j, const TurnSpec& t) {
    j = {{"target", t.target},
         {"target_cell", t.target_cell},
         {"distracters", t.distracters},
         {"assembly_target_cell", t.assembly_target_cell},
         {"decoys", t.decoys}};
}
void from_json(const json& j, TurnSpec& t) {
    t.target = j.at("target").get<ObjectSpec>();
    t.target_cell = j.at("target_cell").get<Cell>();
    t.distracters = j.at("distracters").get<std::vector<PlacedObject>>();
    t.assembly_target_cell = j.at("assembly_target_cell").get<Cell>();
    t.decoys = j.at("decoys").get<std::vector<PlacedObject>>();
}

void to_json(json& j, const EpisodeSpec& e) {
    j = {{"schema_version", kSchemaVersion},
         {"kind", "episode"},
         {"id", e.id},
         {"seed", e.seed},
         {"world_seed", e.world_seed},
         {"world_cfg", e.world_cfg},
         {"section_id", e.section_id},
         {"start_pose", e.start_pose},
         {"turns", e.turns},
         {"step_budget", {{"nav", e.budget.navigation}, {"asm", e.budget.assembly}}}};
}
void from_json(const json& j, EpisodeSpec& e) {
    if (j.value("schema_version", 0) != kSchemaVersion) throw SchemaError("unsupported episode schema_version");
    e.id = j.at("id").get<std::string>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.world_seed = j.at("world_seed").get<std::uint64_t>();
    e.world_cfg = j.at("world_cfg").get<WorldConfig>();
    e.section_id = j.at("section_id").get<int>();
    e.start_pose = j.at("start_pose").get<AgentPose>();
    const auto& turns = j.at("turns");
    if (!turns.is_array() || turns.size() != 2) throw SchemaError("episode needs exactly 2 turns");
    e.turns[0] = turns[0].get<TurnSpec>();
    e.turns[1] = turns[1].get<TurnSpec>();
    const auto& b = j.at("step_budget");
    e.budget.navigation = b.at("nav").get<int>();
    e.budget.assembly = b.at("asm").get<int>();
}

json actions_to_json(std::span<const Action> actions) {
    json out = json::array();
    for (auto a : actions) out.push_back(name(a));
    return out;
}

std::vector<Action> actions_from_json(const json& j) {
    if (!j.is_array()) throw SchemaError("actions must be an array");
    std::vector<Action> out;
    out.reserve(j.size());
    for (const auto& a : j) out.push_back(parse_enum<Action>(a, parse_action, "action"));
    return out;
}

void to_json(json& j, const GroundTruthRoute& r) {
    j = {{"cells", r.cells},   {"points", r.points}, {"actions", actions_to_json(r.actions)},
         {"start", r.start},   {"end", r.end},       {"target", r.target}};
}
void from_json(const json& j, GroundTruthRoute& r) {
    r.cells = j.at("cells").get<std::vector<Cell>>();
    r.points = j.at("points").get<std::vector<Vec2>>();
    r.actions = actions_from_json(j.at("actions"));
    r.start = j.at("start").get<AgentPose>();
    r.end = j.at("end").get<AgentPose>();
    r.target = j.at("target").get<Cell>();
}

void to_json(json& j, const AssemblyRoute& r) {
    j = {{"target", r.target}, {"approach", r.approach}, {"points", r.points}, {"actions", actions_to_json(r.actions)}};
}
void from_json(const json& j, AssemblyRoute& r) {
    r.target = j.at("target").get<Cell>();
    r.approach = j.at("approach").get<AgentPose>();
    r.points = j.at("points").get<std::vector<Vec2>>();
    r.actions = actions_from_json(j.at("actions"));
}

void to_json(json& j, const EpisodeRoutes& r) { j = {{"nav", r.nav}, {"assembly", r.assembly}}; }
void from_json(const json& j, EpisodeRoutes& r) {
    const auto& nav = j.at("nav");
    const auto& asmb = j.at("assembly");
    if (nav.size() != 2 || asmb.size() != 2) throw SchemaError("gt needs 2 navigation and 2 assembly routes");
    for (std::size_t i = 0; i < 2; ++i) {
        r.nav[i] = nav[i].get<GroundTruthRoute>();
        r.assembly[i] = asmb[i].get<AssemblyRoute>();
    }
}

void to_json(json& j, const EndEvent& e) {
    j = {{"picked", optional_object(e.picked)},
         {"placed_cell", e.placed_cell ? json(*e.placed_cell) : json(nullptr)},
         {"forced", e.forced}};
}
void from_json(const json& j, EndEvent& e) {
    e.picked.reset();
    e.placed_cell.reset();
    if (j.contains("picked") && !j["picked"].is_null()) e.picked = j["picked"].get<ObjectSpec>();
    if (j.contains("placed_cell") && !j["placed_cell"].is_null()) e.placed_cell = j["placed_cell"].get<Cell>();
    e.forced = j.value("forced", false);
}

void to_json(json& j, const Observation& o) {
    json visible = json::array();
    for (const auto& v : o.visible) {
        json e = {{"kind", v.kind == EntityKind::Collectible ? "collectible" : "landmark"},
                  {"id", v.id},
                  {"descriptor", v.descriptor},
                  {"range", v.range},
                  {"bearing", v.bearing},
                  {"forward", v.forward},
                  {"lateral", v.lateral},
                  {"occluded", v.occluded}};
        if (o.phase == Phase::Assembly) e["stack_level"] = v.stack_level;
        if (v.object) e["object"] = *v.object;
        if (v.landmark) e["landmark"] = *v.landmark;
        visible.push_back(std::move(e));
    }
    j = {{"phase", name(o.phase)},
         {"turn", o.turn},
         {"steps_remaining", o.steps_remaining},
         {"visible", visible},
         {"carrying", optional_object(o.carrying)}};
    if (o.phase == Phase::Assembly) {
        json walls = json::array();
        for (auto w : o.wall_view) walls.push_back(name(w));
        j["wall_view"] = walls;
    }
}

void to_json(json& j, const PhaseEvent& e) {
    j = {{"kind", name(e.kind)}, {"phase", name(e.phase)}, {"turn", e.turn}, {"forced", e.forced}};
    if (e.object) {
        j["object"] = *e.object;
        j["descriptor"] = e.object->descriptor();
    }
    if (e.cell) j["cell"] = *e.cell;
}

void to_json(json& j, const Violation& v) {
    j = {{"rule_id", v.rule_id}, {"span", {v.begin, v.end}}, {"message", v.message}, {"severity", name(v.severity)}};
}

void to_json(json& j, const MetricReport& r) {
    json turns = json::array();
    for (const auto& t : r.turns) {
        json ctc = json::object();
        for (const auto& [k, v] : t.ctc) ctc[std::to_string(k)] = v;
        turns.push_back({{"ndtw", t.ndtw},
                         {"ctc", ctc},
                         {"rpod", t.rpod},
                         {"ptc", t.ptc},
                         {"collected_ok", t.collected_ok},
                         {"forced_pickup", t.forced_pickup},
                         {"forced_place", t.forced_place},
                         {"placed_distance", t.placed_distance ? json(*t.placed_distance) : json(nullptr)}});
    }
    json ctc = json::object();
    for (const auto& [k, v] : r.ctc) ctc[std::to_string(k)] = v;
    j = {{"turns", turns}, {"totals", {{"ndtw", r.ndtw}, {"ctc", ctc}, {"rpod", r.rpod}, {"ptc", r.ptc}}}};
}

void to_json(json& j, const AssemblyRoom& r) {
    json walls = json::object();
    static constexpr const char* sides[] = {"north", "east", "south", "west"};
    for (std::size_t i = 0; i < 4; ++i) walls[sides[i]] = name(r.walls[i]);
    json stacks = json::array();
    for (int i = 0; i < AssemblyRoom::kCells; ++i) {
        const Cell c = AssemblyRoom::cell_at(i);
        if (r.occupied(c)) stacks.push_back({{"cell", c}, {"objects", r.stack(c)}});
    }
    j = {{"columns", AssemblyRoom::kColumns},
         {"rows", AssemblyRoom::kRows},
         {"walls", walls},
         {"start_cell", r.start_cell},
         {"start_heading", r.start_heading},
         {"stacks", stacks}};
}

json episode_file_json(const EpisodeSpec& episode, const EpisodeRoutes& gt) {
    json j = episode;
    j["gt"] = gt;
    return j;
}

EpisodeFile parse_episode_file(const json& j) {
    try {
        EpisodeFile f;
        f.episode = j.get<EpisodeSpec>();
        if (!j.contains("gt")) throw SchemaError("episode file lacks \"gt\"");
        f.gt = j["gt"].get<EpisodeRoutes>();
        return f;
    } catch (const json::exception& e) {
        throw SchemaError(e.what());
    }
}

void save_episode(const std::filesystem::path& path, const EpisodeSpec& episode, const EpisodeRoutes& gt) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << episode_file_json(episode, gt).dump(1) << '\n';
}

EpisodeFile load_episode(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
    return parse_episode_file(j);
}

std::vector<std::filesystem::path> list_episode_files(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void write_trajectory_jsonl(std::ostream& out, std::span<const Trajectory> trajectories) {
    for (const auto& tr : trajectories) {
        for (std::size_t t = 0; t < tr.points.size(); ++t) {
            json line = {{"t", t},
                         {"x", tr.points[t].x},
                         {"y", tr.points[t].y},
                         {"heading", t < tr.headings.size() ? tr.headings[t] : 0},
                         {"action", t == 0 ? json(nullptr) : json(name(tr.actions[t - 1]))},
                         {"phase", name(tr.phase)},
                         {"turn", tr.turn}};
            out << line.dump() << '\n';
        }
        json end = {{"phase", name(tr.phase)}, {"turn", tr.turn}, {"end_event", tr.end}, {"finished", tr.finished}};
        out << end.dump() << '\n';
    }
}

std::vector<Trajectory> read_trajectory_jsonl(std::istream& in) {
    std::vector<Trajectory> out;
    std::optional<Trajectory> cur;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            const Phase phase = parse_enum<Phase>(j.at("phase"), parse_phase, "phase");
            const int turn = j.at("turn").get<int>();
            if (!cur) {
                cur.emplace();
                cur->phase = phase;
                cur->turn = turn;
            } else if (cur->phase != phase || cur->turn != turn) {
                throw SchemaError("phase changed before its end line");
            }
            if (j.contains("end_event")) {
                cur->end = j["end_event"].get<EndEvent>();
                cur->finished = j.value("finished", true);
                out.push_back(std::move(*cur));
                cur.reset();
                continue;
            }
            const auto t = j.at("t").get<std::size_t>();
            if (t != cur->points.size()) throw SchemaError("non-consecutive t");
            cur->points.push_back({j.at("x").get<double>(), j.at("y").get<double>()});
            cur->headings.push_back(j.at("heading").get<int>());
            const auto& a = j.at("action");
            if (t == 0) {
                if (!a.is_null()) throw SchemaError("first step carries an action");
            } else {
                cur->actions.push_back(parse_enum<Action>(a, parse_action, "action"));
            }
        } catch (const SchemaError& e) {
            throw SchemaError(e.what(), lineno);
        } catch (const json::exception& e) {
            throw SchemaError(e.what(), lineno);
        }
    }
    if (cur) throw SchemaError("trajectory without end line", lineno);
    return out;
}

std::vector<Action> read_actions(std::istream& in) {
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        try {
            return actions_from_json(json::parse(text));
        } catch (const json::exception& e) {
            throw SchemaError(e.what());
        }
    }
    std::vector<Action> out;
    std::istringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        const auto word = line.substr(b, e - b + 1);
        auto a = parse_action(word);
        if (!a) throw SchemaError("unknown action \"" + word + "\"", lineno);
        out.push_back(*a);
    }
    return out;
}

} // namespace arramon
