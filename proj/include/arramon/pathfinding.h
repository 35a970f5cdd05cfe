#pragma once

#include <optional>
#include <vector>

#include "arramon/action.h"
#include "arramon/geometry.h"
#include "arramon/grid.h"

namespace arramon {

/// Minimum-length 4-connected path from `start` to `goal`, both inclusive.
///
/// Manhattan heuristic. Open-set order is (f, h, x, y) ascending, which makes
/// the returned path a pure function of the inputs. Throws NoPathError when
/// the goal is unreachable, std::invalid_argument when an endpoint is blocked.
std::vector<Cell> astar(const OccupancyGrid& grid, Cell start, Cell goal);

/// Breadth-first path lengths (in steps) from `start`; -1 when unreachable.
std::vector<int> bfs_distances(const OccupancyGrid& grid, Cell start);

/// Realize a 4-connected path as actions under navigation semantics: before
/// each move rotate by the fewest 30 degree turns to face the next cell, then
/// Forward. When `face` is set, finish by rotating toward that adjacent cell.
/// Always ends with End.
std::vector<Action> gt_actions(const std::vector<Cell>& path, int start_heading, std::optional<Cell> face = {});

/// Fewest 30-degree rotations from `from` to `to`. Ties (180 degrees) rotate left.
std::vector<Action> rotations_between(int from, int to, int step_deg = 30);

} // namespace arramon
