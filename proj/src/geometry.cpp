#include "arramon/geometry.h"

#include <array>
#include <numbers>
#include <stdexcept>

namespace arramon {

namespace {

constexpr double kHalfSqrt3 = 0.86602540378443864676;

// (sin h, cos h) for h = 0, 30, ..., 330.
constexpr std::array<Vec2, 12> kHeadingTable{{
    {0.0, 1.0},
    {0.5, kHalfSqrt3},
    {kHalfSqrt3, 0.5},
    {1.0, 0.0},
    {kHalfSqrt3, -0.5},
    {0.5, -kHalfSqrt3},
    {0.0, -1.0},
    {-0.5, -kHalfSqrt3},
    {-kHalfSqrt3, -0.5},
    {-1.0, 0.0},
    {-kHalfSqrt3, 0.5},
    {-0.5, kHalfSqrt3},
}};

} // namespace

Vec2 heading_vector(int deg) {
    int h = normalize_heading(deg);
    if (h % 30 == 0) {
        return kHeadingTable[static_cast<std::size_t>(h / 30)];
    }
    double rad = h * std::numbers::pi / 180.0;
    return {std::sin(rad), std::cos(rad)};
}

double EgoOffset::bearing() const {
    return std::atan2(lateral, forward) * 180.0 / std::numbers::pi;
}

EgoOffset to_ego(Vec2 origin, int heading, Vec2 p) {
    Vec2 d = p - origin;
    return {d.dot(heading_vector(heading)), d.dot(right_vector(heading))};
}

Cell cardinal_step(int heading) {
    switch (normalize_heading(heading)) {
    case 0:
        return {0, 1};
    case 90:
        return {1, 0};
    case 180:
        return {0, -1};
    case 270:
        return {-1, 0};
    default:
        throw std::invalid_argument("cardinal_step: heading is not a multiple of 90");
    }
}

int heading_between(Cell a, Cell b) {
    int dx = b.x - a.x;
    int dy = b.y - a.y;
    if (dx == 0 && dy == 1) return 0;
    if (dx == 1 && dy == 0) return 90;
    if (dx == 0 && dy == -1) return 180;
    if (dx == -1 && dy == 0) return 270;
    throw std::invalid_argument("heading_between: cells are not 4-adjacent");
}

} // namespace arramon
