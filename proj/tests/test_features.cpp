#include <catch_amalgamated.hpp>

#include <cmath>

#include "arramon/model/features.h"

using namespace arramon;

TEST_CASE("bearing bins: 7 bins of 30 degrees centred on the heading") {
    CHECK(bearing_bin(0.0) == 3);
    CHECK(bearing_bin(-15.0) == 3);
    CHECK(bearing_bin(14.999) == 3);
    CHECK(bearing_bin(15.0) == 4);
    CHECK(bearing_bin(-15.001) == 2);
    CHECK(bearing_bin(-105.0) == 0);
    CHECK(bearing_bin(104.999) == 6);
    CHECK(bearing_bin(105.0) == -1);
    CHECK(bearing_bin(-105.001) == -1);
    CHECK(bearing_bin(60.0, {5, 45.0, 12.0}) == 3);
    for (double b = -104.5; b < 105; b += 1.0) {
        const int expect = static_cast<int>(std::floor((b + 105.0) / 30.0));
        CHECK(bearing_bin(b) == expect);
    }
}

TEST_CASE("range bins: equal rings out to the view range") {
    const double ring = 12.0 / 7.0;
    CHECK(range_bin(0.0) == 0);
    CHECK(range_bin(ring - 1e-9) == 0);
    CHECK(range_bin(ring) == 1);
    CHECK(range_bin(6 * ring + 0.1) == 6);
    CHECK(range_bin(12.0) == 6);
    CHECK(range_bin(40.0) == 6);
}

TEST_CASE("featurize places entities in their bins") {
    Observation obs;
    obs.phase = Phase::Assembly;
    VisibleEntity mug;
    mug.kind = EntityKind::Collectible;
    mug.object = ObjectSpec{ObjectClass::Mug, Pattern::Striped, Color::Yellow, "m"};
    mug.range = 2.0;
    mug.bearing = 0.0;
    mug.stack_level = 1;
    mug.occluded = true;
    VisibleEntity banner;
    banner.kind = EntityKind::Landmark;
    banner.landmark = Landmark{"b", LandmarkKind::BannerBuilding, Color::Blue, BannerShape::Star, {0, 0}};
    banner.range = 11.0;
    banner.bearing = -100.0;
    VisibleEntity behind = mug;
    behind.bearing = 170.0;
    obs.visible = {mug, banner, behind};
    obs.wall_view = {WallTexture::Brick};

    const auto f = featurize(obs);
    REQUIRE(f.rows() == 49);
    REQUIRE(f.cols() == channel::kCount);
    const int m = 1 * 7 + 3;
    CHECK(f(m, channel::kClass + static_cast<int>(ObjectClass::Mug)) == 1);
    CHECK(f(m, channel::kPattern + static_cast<int>(Pattern::Striped)) == 1);
    CHECK(f(m, channel::kColor + static_cast<int>(Color::Yellow)) == 1);
    CHECK(f(m, channel::kCollectible) == 1);
    CHECK(f(m, channel::kOccluded) == 1);
    CHECK(f(m, channel::kStack) == 2);
    CHECK(f(m, channel::kRange) == Catch::Approx(2.0 / 12.0));
    const int b = 6 * 7 + 0;
    CHECK(f(b, channel::kLandmark + static_cast<int>(LandmarkKind::BannerBuilding)) == 1);
    CHECK(f(b, channel::kBanner + static_cast<int>(BannerShape::Star)) == 1);
    CHECK(f(b, channel::kColor + static_cast<int>(Color::Blue)) == 1);
    CHECK(f(b, channel::kLandmarkCount) == 1);
    // the entity behind the agent falls outside every bin
    CHECK(f.col(channel::kCollectible).sum() == 1);
    CHECK(f.col(channel::kWall + static_cast<int>(WallTexture::Brick)).minCoeff() == 1);
    CHECK(f.col(channel::kWall + static_cast<int>(WallTexture::Wood)).maxCoeff() == 0);
    CHECK(f(0, channel::kRange) == 1);
}
