#include "arramon/routes.h"

#include <deque>
#include <map>

#include "arramon/error.h"
#include "arramon/pathfinding.h"

namespace arramon {

GroundTruthRoute nav_route(const OccupancyGrid& grid, const AgentPose& start, Cell target) {
    const Cell from = start.cell();
    std::vector<Cell> path = astar(grid, from, target);
    if (path.size() < 2) throw NoPathError("agent already stands on the target cell");
    path.pop_back();

    GroundTruthRoute r;
    r.cells = path;
    r.start = start;
    r.target = target;
    for (Cell c : path) r.points.push_back(cell_center(c));
    r.actions = gt_actions(path, start.heading, target);
    r.end = AgentPose::at(path.back(), heading_between(path.back(), target));
    return r;
}

AssemblyRoute assembly_route(Cell target, Cell start_cell, int start_heading) {
    if (!AssemblyRoom::inside(target)) throw PlacementError("assembly target outside the room");
    if (target == start_cell) throw PlacementError("assembly target equals the start cell");

    struct Node {
        Cell cell;
        int heading;
        auto operator<=>(const Node&) const = default;
    };
    std::map<Node, std::pair<Node, Action>> parent;
    std::deque<Node> queue;
    const Node root{start_cell, normalize_heading(start_heading)};
    parent.emplace(root, std::pair{root, Action::End});
    queue.push_back(root);
    std::optional<Node> goal;
    while (!queue.empty()) {
        Node n = queue.front();
        queue.pop_front();
        const Cell d = cardinal_step(n.heading);
        if (Cell{n.cell.x + d.x, n.cell.y + d.y} == target) {
            goal = n;
            break;
        }
        for (Action a : {Action::Forward, Action::Left, Action::Right}) {
            Node next = n;
            if (a == Action::Forward) {
                Cell c{n.cell.x + d.x, n.cell.y + d.y};
                if (!AssemblyRoom::inside(c)) continue;
                next.cell = c;
            } else {
                next.heading = normalize_heading(n.heading + (a == Action::Left ? -90 : 90));
            }
            if (parent.emplace(next, std::pair{n, a}).second) queue.push_back(next);
        }
    }
    if (!goal) throw NoPathError("no approach pose for assembly target");

    AssemblyRoute r;
    r.target = target;
    r.approach = AgentPose::at(goal->cell, goal->heading);
    std::vector<Node> nodes;
    for (Node n = *goal; !(n == root); n = parent.at(n).first) {
        r.actions.push_back(parent.at(n).second);
        nodes.push_back(n);
    }
    std::reverse(r.actions.begin(), r.actions.end());
    r.actions.push_back(Action::End);
    r.points.push_back(cell_center(start_cell));
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
        if (r.points.back() != cell_center(it->cell)) r.points.push_back(cell_center(it->cell));
    }
    return r;
}

EpisodeRoutes gt_route_for_episode(const CityMap& map, const EpisodeSpec& episode) {
    EpisodeRoutes r;
    r.nav[0] = nav_route(map.grid, episode.start_pose, episode.turns[0].target_cell);
    r.nav[1] = nav_route(map.grid, r.nav[0].end, episode.turns[1].target_cell);
    const AssemblyRoom room;
    for (std::size_t t = 0; t < 2; ++t) {
        r.assembly[t] = assembly_route(episode.turns[t].assembly_target_cell, room.start_cell, room.start_heading);
    }
    return r;
}

std::vector<Action> gt_action_stream(const EpisodeRoutes& routes) {
    std::vector<Action> out;
    for (std::size_t t = 0; t < 2; ++t) {
        out.insert(out.end(), routes.nav[t].actions.begin(), routes.nav[t].actions.end());
        out.insert(out.end(), routes.assembly[t].actions.begin(), routes.assembly[t].actions.end());
    }
    return out;
}

} // namespace arramon
