#pragma once

#include <Eigen/Dense>

#include "arramon/sim.h"

namespace arramon {

/// Egocentric polar grid: `grid` bearing bins of `bin_deg` degrees centred
/// on the heading, and `grid` range rings of view_range / grid units.
struct FeatureConfig {
    int grid = 7;
    double bin_deg = 30.0;
    double view_range = 12.0;
};

/// Channel layout of one bin.
namespace channel {
inline constexpr int kClass = 0;         // 7 object classes
inline constexpr int kPattern = 7;       // 2 patterns
inline constexpr int kColor = 9;         // 7 colors, objects and landmarks
inline constexpr int kLandmark = 16;     // 11 landmark kinds
inline constexpr int kBanner = 27;       // 4 banner shapes
inline constexpr int kCollectible = 31;  // count of collectibles
inline constexpr int kLandmarkCount = 32;
inline constexpr int kOccluded = 33;
inline constexpr int kStack = 34;        // highest stack level + 1, assembly
inline constexpr int kWall = 35;         // 4 wall textures in view, assembly
inline constexpr int kRange = 39;        // nearest range / view_range, 1 when empty
inline constexpr int kCount = 40;
} // namespace channel

/// Bin index or -1 when the bearing falls outside the grid.
int bearing_bin(double bearing_deg, const FeatureConfig& cfg = {});
int range_bin(double range, const FeatureConfig& cfg = {});

/// (grid * grid) x channel::kCount, row = range_bin * grid + bearing_bin.
Eigen::MatrixXd featurize(const Observation& obs, const FeatureConfig& cfg = {});

} // namespace arramon
