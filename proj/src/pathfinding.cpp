#include "arramon/pathfinding.h"

#include <algorithm>
#include <deque>
#include <queue>
#include <stdexcept>
#include <tuple>

#include "arramon/error.h"

namespace arramon {

namespace {

constexpr std::array<Cell, 4> kNeighbors{{{0, 1}, {1, 0}, {0, -1}, {-1, 0}}};

struct OpenEntry {
    int f;
    int h;
    Cell cell;

    // std::priority_queue is a max-heap; invert to pop the smallest key.
    bool operator<(const OpenEntry& o) const {
        return std::tie(f, h, cell.x, cell.y) > std::tie(o.f, o.h, o.cell.x, o.cell.y);
    }
};

} // namespace

std::vector<Cell> astar(const OccupancyGrid& grid, Cell start, Cell goal) {
    if (!grid.walkable(start) || !grid.walkable(goal)) {
        throw std::invalid_argument("astar: start or goal is not walkable");
    }
    const int w = grid.width();
    const auto idx = [w](Cell c) { return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c.x); };
    const std::size_t n = static_cast<std::size_t>(grid.width()) * static_cast<std::size_t>(grid.height());

    std::vector<int> g(n, -1);
    std::vector<std::int32_t> parent(n, -1);
    std::vector<std::uint8_t> closed(n, 0);
    std::priority_queue<OpenEntry> open;

    g[idx(start)] = 0;
    open.push({manhattan(start, goal), manhattan(start, goal), start});

    while (!open.empty()) {
        OpenEntry top = open.top();
        open.pop();
        const std::size_t ci = idx(top.cell);
        if (closed[ci]) continue;
        closed[ci] = 1;
        if (top.cell == goal) {
            std::vector<Cell> path;
            for (std::int32_t at = static_cast<std::int32_t>(ci); at >= 0; at = parent[static_cast<std::size_t>(at)]) {
                path.push_back({at % w, at / w});
            }
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (Cell d : kNeighbors) {
            Cell nb{top.cell.x + d.x, top.cell.y + d.y};
            if (!grid.walkable(nb)) continue;
            const std::size_t ni = idx(nb);
            if (closed[ni]) continue;
            const int ng = g[ci] + 1;
            if (g[ni] < 0 || ng < g[ni]) {
                g[ni] = ng;
                parent[ni] = static_cast<std::int32_t>(ci);
                const int h = manhattan(nb, goal);
                open.push({ng + h, h, nb});
            }
        }
    }
    throw NoPathError("astar: goal unreachable");
}

std::vector<int> bfs_distances(const OccupancyGrid& grid, Cell start) {
    const int w = grid.width();
    std::vector<int> dist(static_cast<std::size_t>(grid.width()) * static_cast<std::size_t>(grid.height()), -1);
    if (!grid.walkable(start)) return dist;
    const auto idx = [w](Cell c) { return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c.x); };
    std::deque<Cell> queue{start};
    dist[idx(start)] = 0;
    while (!queue.empty()) {
        Cell c = queue.front();
        queue.pop_front();
        for (Cell d : kNeighbors) {
            Cell nb{c.x + d.x, c.y + d.y};
            if (!grid.walkable(nb) || dist[idx(nb)] >= 0) continue;
            dist[idx(nb)] = dist[idx(c)] + 1;
            queue.push_back(nb);
        }
    }
    return dist;
}

std::vector<Action> rotations_between(int from, int to, int step_deg) {
    const int diff = normalize_heading(to - from);
    if (diff % step_deg != 0) throw std::invalid_argument("rotations_between: heading not on the rotation lattice");
    const int right_turns = diff / step_deg;
    const int left_turns = (360 - diff) % 360 / step_deg;
    if (right_turns < left_turns) return std::vector<Action>(static_cast<std::size_t>(right_turns), Action::Right);
    return std::vector<Action>(static_cast<std::size_t>(left_turns), Action::Left);
}

std::vector<Action> gt_actions(const std::vector<Cell>& path, int start_heading, std::optional<Cell> face) {
    std::vector<Action> out;
    int heading = normalize_heading(start_heading);
    const auto turn_to = [&](int desired) {
        auto rot = rotations_between(heading, desired);
        out.insert(out.end(), rot.begin(), rot.end());
        heading = desired;
    };
    for (std::size_t i = 1; i < path.size(); ++i) {
        turn_to(heading_between(path[i - 1], path[i]));
        out.push_back(Action::Forward);
    }
    if (face && !path.empty()) {
        turn_to(heading_between(path.back(), *face));
    }
    out.push_back(Action::End);
    return out;
}

} // namespace arramon
