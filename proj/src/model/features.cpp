#include "arramon/model/features.h"

#include <algorithm>
#include <cmath>

namespace arramon {

int bearing_bin(double bearing_deg, const FeatureConfig& cfg) {
    const double shifted = bearing_deg + cfg.grid * cfg.bin_deg / 2.0;
    const int b = static_cast<int>(std::floor(shifted / cfg.bin_deg));
    return b >= 0 && b < cfg.grid ? b : -1;
}

int range_bin(double range, const FeatureConfig& cfg) {
    const int r = static_cast<int>(std::floor(range / (cfg.view_range / cfg.grid)));
    return std::clamp(r, 0, cfg.grid - 1);
}

Eigen::MatrixXd featurize(const Observation& obs, const FeatureConfig& cfg) {
    const int cells = cfg.grid * cfg.grid;
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(cells, channel::kCount);
    f.col(channel::kRange).setOnes();
    for (const auto& v : obs.visible) {
        const int b = bearing_bin(v.bearing, cfg);
        if (b < 0) continue;
        const int row = range_bin(v.range, cfg) * cfg.grid + b;
        if (v.object) {
            f(row, channel::kClass + static_cast<int>(v.object->cls)) += 1.0;
            f(row, channel::kPattern + static_cast<int>(v.object->pattern)) += 1.0;
            f(row, channel::kColor + static_cast<int>(v.object->color)) += 1.0;
            f(row, channel::kCollectible) += 1.0;
            f(row, channel::kStack) = std::max(f(row, channel::kStack), v.stack_level + 1.0);
        } else if (v.landmark) {
            f(row, channel::kLandmark + static_cast<int>(v.landmark->kind)) += 1.0;
            f(row, channel::kColor + static_cast<int>(v.landmark->color)) += 1.0;
            if (v.landmark->kind == LandmarkKind::BannerBuilding) {
                f(row, channel::kBanner + static_cast<int>(v.landmark->shape)) += 1.0;
            }
            f(row, channel::kLandmarkCount) += 1.0;
        }
        if (v.occluded) f(row, channel::kOccluded) += 1.0;
        f(row, channel::kRange) = std::min(f(row, channel::kRange), v.range / cfg.view_range);
    }
    for (auto w : obs.wall_view) f.col(channel::kWall + static_cast<int>(w)).setOnes();
    return f;
}

} // namespace arramon
