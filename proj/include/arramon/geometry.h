#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>

namespace arramon {

/// Integer lattice cell. One cell spans one world unit.
struct Cell {
    int x = 0;
    int y = 0;

    auto operator<=>(const Cell&) const = default;
};

inline int manhattan(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Vec2&) const = default;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

inline Vec2 cell_center(Cell c) { return {c.x + 0.5, c.y + 0.5}; }

inline Cell cell_of(Vec2 p) {
    return {static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y))};
}

/// Headings are integer degrees, clockwise from +y ("north"). 90 faces +x.
inline int normalize_heading(int deg) {
    int h = deg % 360;
    return h < 0 ? h + 360 : h;
}

/// Unit vector for a heading. Exact for every multiple of 30 degrees so that
/// axis-aligned motion stays on cell centers without drift.
Vec2 heading_vector(int deg);

/// Right-hand perpendicular of heading_vector(deg).
inline Vec2 right_vector(int deg) {
    Vec2 f = heading_vector(deg);
    return {f.y, -f.x};
}

/// Position of `p` in the frame of an agent at `origin` facing `heading`.
struct EgoOffset {
    double forward = 0.0;
    double lateral = 0.0; ///< positive to the agent's right

    double range() const { return std::hypot(forward, lateral); }
    /// Degrees, positive clockwise (to the right), in (-180, 180].
    double bearing() const;
};

EgoOffset to_ego(Vec2 origin, int heading, Vec2 p);

/// Unit cell step for a cardinal heading (0, 90, 180, 270).
Cell cardinal_step(int heading);

/// Heading (multiple of 90) pointing from `a` to 4-adjacent `b`.
int heading_between(Cell a, Cell b);

} // namespace arramon

template <>
struct std::hash<arramon::Cell> {
    std::size_t operator()(const arramon::Cell& c) const noexcept {
        return std::hash<std::int64_t>{}((static_cast<std::int64_t>(c.x) << 32) ^ static_cast<std::uint32_t>(c.y));
    }
};
