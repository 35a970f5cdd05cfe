#include <catch_amalgamated.hpp>

#include <queue>
#include <set>

#include "arramon/error.h"
#include "arramon/pathfinding.h"
#include "arramon/routes.h"

using namespace arramon;

namespace {

const CityMap& city7() {
    static const CityMap c = generate_city(7);
    return c;
}

// Fewest actions from the room start to any pose whose placement cell is
// `target`, by breadth-first search over (cell, heading) states.
int assembly_oracle(Cell target) {
    const AssemblyRoom room;
    using State = std::tuple<int, int, int>;
    std::map<State, int> dist;
    std::queue<State> q;
    const State s0{room.start_cell.x, room.start_cell.y, room.start_heading};
    dist[s0] = 0;
    q.push(s0);
    while (!q.empty()) {
        const auto [x, y, h] = q.front();
        q.pop();
        const int d = dist[{x, y, h}];
        const Cell step = cardinal_step(h);
        const Cell ahead{x + step.x, y + step.y};
        const Cell placed = AssemblyRoom::inside(ahead) ? ahead : Cell{x, y};
        if (placed == target) return d + 1; // + End
        std::vector<State> next{{x, y, normalize_heading(h + 90)}, {x, y, normalize_heading(h - 90)}};
        if (AssemblyRoom::inside(ahead)) next.push_back({ahead.x, ahead.y, h});
        for (const auto& n : next) {
            if (!dist.count(n)) {
                dist[n] = d + 1;
                q.push(n);
            }
        }
    }
    return -1;
}

} // namespace

TEST_CASE("assembly routes are shortest and end facing the target") {
    for (int i = 0; i < AssemblyRoom::kCells; ++i) {
        const Cell target = AssemblyRoom::cell_at(i);
        if (target == AssemblyRoom{}.start_cell) {
            CHECK_THROWS_AS(assembly_route(target), PlacementError);
            continue;
        }
        const AssemblyRoute r = assembly_route(target);
        CHECK(static_cast<int>(r.actions.size()) == assembly_oracle(target));
        CHECK(r.actions.back() == Action::End);
        const Cell d = cardinal_step(r.approach.heading);
        CHECK(Cell{r.approach.cell().x + d.x, r.approach.cell().y + d.y} == target);
        CHECK(r.points.front() == cell_center(AssemblyRoom{}.start_cell));
        CHECK(r.points.back() == r.approach.position());
    }
}

TEST_CASE("navigation ground truth: shortest path, replay ends facing the target") {
    const CityMap& m = city7();
    int checked = 0;
    for (int k = 0; k < 300; ++k) {
        EpisodeSpec ep;
        try {
            ep = sample_episode(m, 1 + k % 7, static_cast<std::uint64_t>(k));
        } catch (const PlacementError&) {
            continue;
        }
        const EpisodeRoutes r = gt_route_for_episode(m, ep);
        for (std::size_t t = 0; t < 2; ++t) {
            const GroundTruthRoute& g = r.nav[t];
            const auto shortest = astar(m.grid, g.start.cell(), ep.turns[t].target_cell);
            CHECK(g.cells.size() + 1 == shortest.size());
            CHECK(g.target == ep.turns[t].target_cell);
            CHECK(g.actions.back() == Action::End);
            CHECK(g.points.size() == g.cells.size());
            // Walk the actions by hand.
            AgentPose p = g.start;
            for (Action a : g.actions) {
                if (a == Action::Left) p.heading = normalize_heading(p.heading - 30);
                if (a == Action::Right) p.heading = normalize_heading(p.heading + 30);
                if (a == Action::Forward) {
                    const Vec2 n = p.position() + heading_vector(p.heading);
                    REQUIRE(m.grid.walkable(cell_of(n)));
                    p.x = n.x;
                    p.y = n.y;
                }
            }
            CHECK(p == g.end);
            CHECK(manhattan(p.cell(), g.target) == 1);
            CHECK(heading_between(p.cell(), g.target) == p.heading);
        }
        CHECK(r.nav[1].start == r.nav[0].end);
        CHECK(r.nav[0].start == ep.start_pose);
        const auto stream = gt_action_stream(r);
        CHECK(stream.size() == r.nav[0].actions.size() + r.nav[1].actions.size() + r.assembly[0].actions.size() +
                                   r.assembly[1].actions.size());
        ++checked;
    }
    CHECK(checked > 250);
}
