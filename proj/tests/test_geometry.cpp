#include <catch_amalgamated.hpp>

#include "arramon/geometry.h"

using namespace arramon;
using Catch::Approx;

TEST_CASE("heading vectors are exact unit vectors on the 30 degree lattice") {
    for (int h = 0; h < 360; h += 30) {
        const Vec2 v = heading_vector(h);
        CHECK(v.norm() == Approx(1.0).epsilon(1e-15));
        const double rad = h * 3.14159265358979323846 / 180.0;
        CHECK(v.x == Approx(std::sin(rad)).margin(1e-15));
        CHECK(v.y == Approx(std::cos(rad)).margin(1e-15));
    }
    CHECK(heading_vector(0) == Vec2{0.0, 1.0});
    CHECK(heading_vector(90) == Vec2{1.0, 0.0});
    CHECK(heading_vector(180) == Vec2{0.0, -1.0});
    CHECK(heading_vector(-90) == Vec2{-1.0, 0.0});
}

TEST_CASE("twelve 30 degree forward steps around a dodecagon close the loop") {
    Vec2 p{0.5, 0.5};
    for (int k = 0; k < 12; ++k) p = p + heading_vector(30 * k);
    CHECK(p.x == Approx(0.5).margin(1e-12));
    CHECK(p.y == Approx(0.5).margin(1e-12));
}

TEST_CASE("normalize_heading wraps into [0, 360)") {
    CHECK(normalize_heading(0) == 0);
    CHECK(normalize_heading(360) == 0);
    CHECK(normalize_heading(-30) == 330);
    CHECK(normalize_heading(750) == 30);
}

TEST_CASE("egocentric offsets: forward along heading, lateral to the right") {
    const EgoOffset e = to_ego({0, 0}, 90, {3, -4});
    CHECK(e.forward == Approx(3));
    CHECK(e.lateral == Approx(4));
    CHECK(e.range() == Approx(5));
    CHECK(e.bearing() == Approx(std::atan2(4.0, 3.0) * 180.0 / 3.14159265358979323846));
    CHECK(to_ego({0, 0}, 0, {-1, 0}).bearing() == Approx(-90));
    CHECK(to_ego({0, 0}, 0, {0, -2}).bearing() == Approx(180));
}

TEST_CASE("cardinal steps and headings between adjacent cells agree") {
    for (int h : {0, 90, 180, 270}) {
        const Cell d = cardinal_step(h);
        CHECK(heading_between({5, 5}, {5 + d.x, 5 + d.y}) == h);
    }
    CHECK_THROWS(cardinal_step(30));
    CHECK_THROWS(heading_between({0, 0}, {1, 1}));
}

TEST_CASE("cells and centers") {
    CHECK(cell_of({2.5, 3.999}) == Cell{2, 3});
    CHECK(cell_of({-0.1, 0.0}) == Cell{-1, 0});
    CHECK(cell_center({2, 3}) == Vec2{2.5, 3.5});
    CHECK(manhattan({0, 0}, {3, -4}) == 7);
}
