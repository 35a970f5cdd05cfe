#pragma once

#include <cstdint>
#include <vector>

#include "arramon/geometry.h"

namespace arramon {

/// Row-major occupancy lattice. Cells outside the lattice count as blocked.
class OccupancyGrid {
  public:
    OccupancyGrid() = default;
    OccupancyGrid(int width, int height, bool blocked = true)
        : width_(width), height_(height), blocked_(static_cast<std::size_t>(width * height), blocked ? 1 : 0) {}

    int width() const { return width_; }
    int height() const { return height_; }

    bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
    bool walkable(Cell c) const { return in_bounds(c) && blocked_[index(c)] == 0; }
    bool blocked(Cell c) const { return !walkable(c); }

    void set_blocked(Cell c, bool b) { blocked_[index(c)] = b ? 1 : 0; }

    bool operator==(const OccupancyGrid&) const = default;

    const std::vector<std::uint8_t>& raw() const { return blocked_; }

  private:
    std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.x); }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> blocked_;
};

} // namespace arramon
